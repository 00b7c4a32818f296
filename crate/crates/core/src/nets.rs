//! Deterministic `(0,m,s)`-nets in base `b` and an exhaustive net checker.
//!
//! Constructions implement [`NetGenerator`] and are looked up by name in a
//! [`NetRegistry`]. Points are produced digit-exactly, so the checker never
//! sees floating-point rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{binomial, check_base, checked_pow, compositions, default_depth, DigitPoint, MultiIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetParams {
    pub b: u32,
    pub m: u32,
    pub s: usize,
}

impl NetParams {
    pub fn new(b: u32, m: u32, s: usize) -> Result<Self> {
        check_base(b)?;
        if s == 0 {
            return Err(Error::param("s", "dimension must be >= 1"));
        }
        if m > default_depth(b) {
            return Err(Error::param("m", format!("level {m} exceeds the digit depth for base {b}")));
        }
        Ok(NetParams { b, m, s })
    }

    /// `b^m`.
    pub fn size(&self) -> usize {
        checked_pow(self.b, self.m).expect("validated in new") as usize
    }
}

impl fmt::Display for NetParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(0,{},{})-net in base {}", self.m, self.s, self.b)
    }
}

/// `b^m` points in `[0,1)^s`, each stored with `m` digits per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub params: NetParams,
    pub points: Vec<DigitPoint>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(DigitPoint::values).collect()
    }
}

/// A deterministic net construction.
pub trait NetGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the construction can produce a net with these parameters.
    fn supports(&self, params: &NetParams) -> Result<()>;

    fn generate(&self, params: NetParams) -> Result<PointSet>;
}

/// One point per interval `E^m_k`: the `(0,m,1)`-net `{k b^-m}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StratifiedGenerator;

impl NetGenerator for StratifiedGenerator {
    fn name(&self) -> &'static str {
        "stratified"
    }

    fn supports(&self, params: &NetParams) -> Result<()> {
        if params.s != 1 {
            return Err(Error::UnsupportedNet(format!(
                "stratified grid is one-dimensional, requested s = {}",
                params.s
            )));
        }
        Ok(())
    }

    fn generate(&self, params: NetParams) -> Result<PointSet> {
        self.supports(&params)?;
        stratified_grid(params.b, params.m)
    }
}

/// Faure construction: coordinate `r` uses the `r`-th power of the upper
/// triangular Pascal matrix modulo a prime `b`. One-dimensional requests fall
/// back to the stratified grid, so any base works for `s = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaureGenerator;

impl NetGenerator for FaureGenerator {
    fn name(&self) -> &'static str {
        "faure"
    }

    fn supports(&self, params: &NetParams) -> Result<()> {
        if params.s == 1 {
            return Ok(());
        }
        check_faure(params.b, params.s)
    }

    fn generate(&self, params: NetParams) -> Result<PointSet> {
        if params.s == 1 {
            return stratified_grid(params.b, params.m);
        }
        faure_net(params.b, params.m, params.s)
    }
}

/// Net constructions registered by name.
#[derive(Clone)]
pub struct NetRegistry {
    generators: BTreeMap<&'static str, Arc<dyn NetGenerator>>,
}

impl NetRegistry {
    pub const DEFAULT: &'static str = "faure";

    pub fn empty() -> Self {
        NetRegistry {
            generators: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(FaureGenerator));
        reg.register(Arc::new(StratifiedGenerator));
        reg
    }

    pub fn register(&mut self, generator: Arc<dyn NetGenerator>) {
        self.generators.insert(generator.name(), generator);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn NetGenerator>> {
        self.generators
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "net generator",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.keys().copied().collect()
    }
}

impl Default for NetRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl fmt::Debug for NetRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NetRegistry").field("generators", &self.names()).finish()
    }
}

pub fn default_generator() -> Arc<dyn NetGenerator> {
    Arc::new(FaureGenerator)
}

pub fn stratified_grid(b: u32, m: u32) -> Result<PointSet> {
    let params = NetParams::new(b, m, 1)?;
    let points = (0..params.size() as u64)
        .map(|k| DigitPoint::from_cells(b, m, vec![k]))
        .collect();
    Ok(PointSet { params, points })
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d as u64 * d as u64 <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn check_faure(b: u32, s: usize) -> Result<()> {
    if !is_prime(b) {
        return Err(Error::UnsupportedNet(format!("Faure construction needs a prime base, got {b}")));
    }
    if s > b as usize {
        return Err(Error::UnsupportedNet(format!(
            "Faure construction in base {b} supports at most {b} dimensions, requested {s}"
        )));
    }
    Ok(())
}

/// Generator matrix `P^c mod b` of size `m x m`, entry `(i, j) = C(j, i) c^(j-i)`.
fn pascal_power(b: u32, m: usize, c: u64) -> Vec<Vec<u64>> {
    let b = b as u64;
    let mut mat = vec![vec![0u64; m]; m];
    for (i, row) in mat.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate().skip(i) {
            let binom = binomial(j as u64, i as u64) % b;
            let mut pow = 1u64;
            for _ in 0..(j - i) {
                pow = pow * (c % b) % b;
            }
            *entry = binom * pow % b;
        }
    }
    mat
}

pub fn faure_net(b: u32, m: u32, s: usize) -> Result<PointSet> {
    let params = NetParams::new(b, m, s)?;
    check_faure(b, s)?;
    let md = m as usize;
    let matrices: Vec<_> = (0..s).map(|r| pascal_power(b, md, r as u64)).collect();
    let bb = b as u64;
    let mut points = Vec::with_capacity(params.size());
    let mut index_digits = vec![0u64; md];
    for n in 0..params.size() as u64 {
        let mut rest = n;
        for slot in index_digits.iter_mut() {
            *slot = rest % bb;
            rest /= bb;
        }
        let cells = matrices
            .iter()
            .map(|mat| {
                mat.iter().fold(0u64, |acc, row| {
                    let y = row.iter().zip(&index_digits).map(|(c, a)| c * a).sum::<u64>() % bb;
                    acc * bb + y
                })
            })
            .collect();
        points.push(DigitPoint::from_cells(b, m, cells));
    }
    Ok(PointSet { params, points })
}

/// An elementary interval of volume `b^-m` whose point count is not one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetWitness {
    pub resolution: MultiIndex,
    pub shift: Vec<u64>,
    pub count: usize,
}

impl fmt::Display for NetWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E^{}_{:?} contains {} points", self.resolution, self.shift, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NetCheck {
    Pass,
    Fail(NetWitness),
}

impl NetCheck {
    pub fn passed(&self) -> bool {
        matches!(self, NetCheck::Pass)
    }
}

/// Exhaustive `(0,m,s)`-net check over every shape `|j| = m` and every box.
///
/// The points must carry at least `m` digits. On failure the first violating
/// box in (shape, shift) lexicographic order is returned.
pub fn is_net(points: &[DigitPoint], b: u32, m: u32, s: usize) -> Result<NetCheck> {
    let params = NetParams::new(b, m, s)?;
    let n = params.size();
    if points.len() != n {
        return Err(Error::Cardinality {
            expected: n,
            actual: points.len(),
        });
    }
    for p in points {
        if p.dim() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                actual: p.dim(),
            });
        }
        if p.b != b || p.depth < m {
            return Err(Error::Precondition(format!(
                "points must carry at least {m} base-{b} digits"
            )));
        }
    }
    let mut counts = vec![0usize; n];
    for shape in compositions(m, s, 0, None)? {
        counts.iter_mut().for_each(|c| *c = 0);
        for p in points {
            let flat = shape
                .iter()
                .enumerate()
                .fold(0u64, |acc, (t, &jt)| acc * (b as u64).pow(jt) + p.cell(t, jt));
            counts[flat as usize] += 1;
        }
        if let Some(pos) = counts.iter().position(|&c| c != 1) {
            let sizes: Vec<u64> = shape.iter().map(|&jt| (b as u64).pow(jt)).collect();
            let mut rest = pos as u64;
            let mut shift = vec![0u64; s];
            for (slot, &size) in shift.iter_mut().zip(&sizes).rev() {
                *slot = rest % size;
                rest /= size;
            }
            return Ok(NetCheck::Fail(NetWitness {
                resolution: shape,
                shift,
                count: counts[pos],
            }));
        }
    }
    Ok(NetCheck::Pass)
}

/// [`is_net`] for points given as floats.
pub fn is_net_values(points: &[Vec<f64>], b: u32, m: u32, s: usize) -> Result<NetCheck> {
    let digits = points
        .iter()
        .map(|x| DigitPoint::from_values(x, b, m))
        .collect::<Result<Vec<_>>>()?;
    is_net(&digits, b, m, s)
}

/// Number of boxes the checker inspects: `C(m+s-1, s-1) b^m`.
pub fn checker_cell_count(b: u32, m: u32, s: usize) -> u64 {
    binomial((m as usize + s - 1) as u64, (s - 1) as u64) * (b as u64).pow(m)
}
