//! Base-`b` digit arithmetic, elementary intervals and multi-index
//! enumeration.
//!
//! Coordinates are handled digit-exactly. A `f64` in `[0,1)` is an exact
//! dyadic rational, so its base-`b` cell index at any resolution can be
//! computed with integer arithmetic. When a float is the correctly rounded
//! image of a `b`-adic rational `q / b^P` (for example `1.0 / 3.0`), the
//! terminating representation `q / b^P` is used instead of the float's own
//! (non-terminating) expansion.

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest value for which every integer up to it is exactly representable
/// as an `f64`.
const F64_EXACT_INT: u64 = 1 << 53;

pub fn check_base(b: u32) -> Result<()> {
    if b < 2 {
        return Err(Error::param("b", format!("base must be >= 2, got {b}")));
    }
    Ok(())
}

/// `b^e`, or `None` on overflow.
pub fn checked_pow(b: u32, e: u32) -> Option<u64> {
    (b as u64).checked_pow(e)
}

pub(crate) fn pow_f64(b: u32, e: i32) -> f64 {
    (b as f64).powi(e)
}

/// Default digit depth for base `b`.
///
/// 32 digits for `b = 2`; otherwise the largest `P` with `b^P <= 2^53`, so
/// that `b`-adic rationals of depth `P` round-trip through `f64` exactly.
pub fn default_depth(b: u32) -> u32 {
    if b == 2 {
        return 32;
    }
    let mut p = 0;
    let mut acc: u64 = 1;
    while let Some(next) = acc.checked_mul(b as u64) {
        if next > F64_EXACT_INT {
            break;
        }
        acc = next;
        p += 1;
    }
    p
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    Ok(())
}

/// `floor(x * b^j)` computed exactly from the binary expansion of `x`.
fn exact_floor_scaled(x: f64, b: u32, j: u32) -> Result<u64> {
    if x == 0.0 {
        return Ok(0);
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let overflow = || Error::param("resolution", format!("b^{j} too large for exact digit extraction"));
    let scale = checked_pow(b, j).ok_or_else(overflow)?;
    let prod = (mantissa as u128).checked_mul(scale as u128).ok_or_else(overflow)?;
    // x < 1, so exp < 0.
    let shift = (-exp) as u32;
    let q = if shift >= 128 { 0 } else { prod >> shift };
    u64::try_from(q).map_err(|_| overflow())
}

/// Cell index of `x` at the default depth, snapped to the terminating
/// representation where `x` is the float of a `b`-adic rational.
///
/// Returns `(q, exact)` where `exact` says `x` is the float image of
/// `q / b^P`.
fn snapped_cell(x: f64, b: u32, depth: u32) -> Result<(u64, bool)> {
    let scale = checked_pow(b, depth).expect("default depth keeps b^P <= 2^53");
    let q = exact_floor_scaled(x, b, depth)?;
    let denom = scale as f64;
    if q + 1 < scale && (q + 1) as f64 / denom == x {
        return Ok((q + 1, true));
    }
    Ok((q, q as f64 / denom == x))
}

/// Index `k` of the one-dimensional elementary interval `E^j_k` containing
/// `x`, i.e. `floor(x b^j)` with `b`-adic rationals taken in terminating form.
pub fn cell_index(x: f64, b: u32, j: u32) -> Result<u64> {
    check_base(b)?;
    check_unit(x)?;
    let depth = default_depth(b);
    let (q, exact) = snapped_cell(x, b, depth)?;
    if j <= depth {
        let div = checked_pow(b, depth - j).expect("j <= depth");
        return Ok(q / div);
    }
    if exact {
        let mul = checked_pow(b, j - depth)
            .ok_or_else(|| Error::param("resolution", format!("b^{j} overflows")))?;
        return q
            .checked_mul(mul)
            .ok_or_else(|| Error::param("resolution", format!("b^{j} overflows")));
    }
    exact_floor_scaled(x, b, j)
}

/// First `depth` base-`b` digits of `x`, most significant first.
pub fn digits_of(x: f64, b: u32, depth: u32) -> Result<Vec<u32>> {
    let q = cell_index(x, b, depth)?;
    Ok(unpack_digits(q, b, depth))
}

/// Digits of the integer `q < b^depth`, most significant first.
pub fn unpack_digits(mut q: u64, b: u32, depth: u32) -> Vec<u32> {
    let mut digits = vec![0u32; depth as usize];
    for slot in digits.iter_mut().rev() {
        *slot = (q % b as u64) as u32;
        q /= b as u64;
    }
    digits
}

pub fn pack_digits(digits: &[u32], b: u32) -> u64 {
    digits.iter().fold(0u64, |acc, &d| acc * b as u64 + d as u64)
}

/// The `f64` inside cell `q` of resolution `depth` at relative offset
/// `remainder` in `[0,1)`, i.e. `(q + remainder) / b^depth`, nudged down if
/// rounding would push it into the next cell.
pub fn value_in_cell(q: u64, depth: u32, b: u32, remainder: f64) -> f64 {
    let scale = checked_pow(b, depth).filter(|&s| s <= F64_EXACT_INT);
    let mut v = match scale {
        Some(s) => (q as f64 + remainder) / s as f64,
        None => (q as f64 + remainder) * pow_f64(b, -(depth as i32)),
    };
    if v >= 1.0 {
        v = 1.0f64.next_down();
    }
    // A handful of steps at most; cells are far wider than one ulp.
    while v > 0.0 && cell_index(v, b, depth).is_ok_and(|c| c > q) {
        v = v.next_down();
    }
    v
}

/// Real value `sum_r digit_r b^-r`.
pub fn value_of(digits: &[u32], b: u32) -> f64 {
    let depth = digits.len() as u32;
    if checked_pow(b, depth).is_some_and(|s| s <= F64_EXACT_INT) {
        return value_in_cell(pack_digits(digits, b), depth, b, 0.0);
    }
    digits
        .iter()
        .enumerate()
        .map(|(r, &d)| d as f64 * pow_f64(b, -(r as i32 + 1)))
        .sum()
}

/// A vector of nonnegative integers (levels, resolutions, compositions).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// `|v| = sum of entries`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Positions of the nonzero entries, `u(v)`.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(t, _)| t)
            .collect()
    }
}

impl Deref for MultiIndex {
    type Target = Vec<u32>;
    fn deref(&self) -> &Vec<u32> {
        &self.0
    }
}

impl DerefMut for MultiIndex {
    fn deref_mut(&mut self) -> &mut Vec<u32> {
        &mut self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A point stored digit-exactly: per coordinate an integer `q_t < b^depth`
/// holding the first `depth` digits, plus a remainder in `[0,1)` scaled by
/// `b^-depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitPoint {
    pub b: u32,
    pub depth: u32,
    pub cells: Vec<u64>,
    pub remainder: Vec<f64>,
}

impl DigitPoint {
    pub fn from_cells(b: u32, depth: u32, cells: Vec<u64>) -> Self {
        let remainder = vec![0.0; cells.len()];
        DigitPoint {
            b,
            depth,
            cells,
            remainder,
        }
    }

    /// Digit representation of a float point at the given depth; whatever
    /// lies below the last digit goes into the remainder.
    pub fn from_values(x: &[f64], b: u32, depth: u32) -> Result<Self> {
        let scale = pow_f64(b, depth as i32);
        let mut cells = Vec::with_capacity(x.len());
        let mut remainder = Vec::with_capacity(x.len());
        for &xt in x {
            let q = cell_index(xt, b, depth)?;
            cells.push(q);
            remainder.push((xt * scale - q as f64).clamp(0.0, 1.0f64.next_down()));
        }
        Ok(DigitPoint {
            b,
            depth,
            cells,
            remainder,
        })
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn digits(&self, t: usize) -> Vec<u32> {
        unpack_digits(self.cells[t], self.b, self.depth)
    }

    /// Cell index of coordinate `t` at resolution `j <= depth`.
    pub fn cell(&self, t: usize, j: u32) -> u64 {
        debug_assert!(j <= self.depth);
        self.cells[t] / (self.b as u64).pow(self.depth - j)
    }

    pub fn value(&self, t: usize) -> f64 {
        value_in_cell(self.cells[t], self.depth, self.b, self.remainder[t])
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.dim()).map(|t| self.value(t)).collect()
    }

    /// Same point with zero digits appended up to `depth`.
    pub fn extend_depth(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::param("depth", "cannot shrink a digit point"));
        }
        let mul = checked_pow(self.b, depth - self.depth)
            .ok_or_else(|| Error::param("depth", "b^depth overflows"))?;
        let cells = self
            .cells
            .iter()
            .map(|&q| q.checked_mul(mul).ok_or_else(|| Error::param("depth", "b^depth overflows")))
            .collect::<Result<Vec<_>>>()?;
        Ok(DigitPoint {
            b: self.b,
            depth,
            cells,
            remainder: self.remainder.clone(),
        })
    }
}

/// `E^j_k`: a product of one-dimensional intervals `[k b^-j, (k+1) b^-j)`,
/// with `E^-1_0 = E^0_0 = [0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryInterval {
    pub b: u32,
    pub resolution: Vec<i32>,
    pub shift: Vec<u64>,
}

impl ElementaryInterval {
    pub fn new(b: u32, resolution: Vec<i32>, shift: Vec<u64>) -> Result<Self> {
        check_base(b)?;
        if resolution.len() != shift.len() {
            return Err(Error::DimensionMismatch {
                expected: resolution.len(),
                actual: shift.len(),
            });
        }
        for (&j, &k) in resolution.iter().zip(&shift) {
            if j < -1 {
                return Err(Error::param("resolution", format!("{j} < -1")));
            }
            let count = if j <= 0 { 1 } else { checked_pow(b, j as u32).unwrap_or(u64::MAX) };
            if k >= count {
                return Err(Error::param("shift", format!("k = {k} not in 0..{count} at resolution {j}")));
            }
        }
        Ok(ElementaryInterval { b, resolution, shift })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn volume(&self) -> f64 {
        let exp: i32 = self.resolution.iter().map(|&j| j.max(0)).sum();
        pow_f64(self.b, -exp)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        for ((&j, &k), &xt) in self.resolution.iter().zip(&self.shift).zip(x) {
            check_unit(xt)?;
            if j > 0 && cell_index(xt, self.b, j as u32)? != k {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// All vectors of length `parts` with entries `>= min_per_part` (and
/// `<= caps[n]` when caps are given) summing to `total`, in lexicographic
/// order.
pub fn compositions(
    total: u32,
    parts: usize,
    min_per_part: u32,
    caps: Option<&[u32]>,
) -> Result<Vec<MultiIndex>> {
    if let Some(c) = caps {
        if c.len() != parts {
            return Err(Error::DimensionMismatch {
                expected: parts,
                actual: c.len(),
            });
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; parts];
    compose_rec(total, 0, min_per_part, caps, &mut current, &mut out);
    Ok(out)
}

fn compose_rec(
    remaining: u32,
    pos: usize,
    min: u32,
    caps: Option<&[u32]>,
    current: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    let parts = current.len();
    if pos == parts {
        if remaining == 0 {
            out.push(MultiIndex(current.clone()));
        }
        return;
    }
    let rest = (parts - pos - 1) as u32;
    let reserve = rest * min;
    if remaining < min + reserve {
        return;
    }
    let mut hi = remaining - reserve;
    if let Some(c) = caps {
        hi = hi.min(c[pos]);
        // The remaining parts must be able to absorb what is left.
        let rest_cap: u64 = c[pos + 1..].iter().map(|&v| v as u64).sum();
        if (remaining as u64) > hi as u64 + rest_cap {
            return;
        }
    }
    for v in min..=hi {
        current[pos] = v;
        compose_rec(remaining - v, pos + 1, min, caps, current, out);
    }
}

/// All vectors of length `parts` with entries in `0..=max_entry`, lexicographic.
pub fn grid_vectors(parts: usize, max_entry: u32) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex(Vec::with_capacity(parts))];
    for _ in 0..parts {
        let mut next = Vec::with_capacity(out.len() * (max_entry as usize + 1));
        for v in &out {
            for e in 0..=max_entry {
                let mut w = v.clone();
                w.push(e);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Cartesian product of `0..sizes[t]`, lexicographic (last index fastest).
pub fn mixed_radix(sizes: &[u64]) -> impl Iterator<Item = Vec<u64>> + '_ {
    let total: u64 = sizes.iter().product();
    (0..total).map(move |mut flat| {
        let mut v = vec![0u64; sizes.len()];
        for (slot, &s) in v.iter_mut().zip(sizes).rev() {
            *slot = flat % s;
            flat /= s;
        }
        v
    })
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
