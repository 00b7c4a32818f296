//! Haar wavelets on `[0,1)^D`, canonical coefficients and the `H_alpha`
//! norm.
//!
//! In one dimension, for `j >= 1`, `i in {0..b-1}` and `k < b^(j-1)`,
//!
//! ```text
//! psi^j_{i,k}(x) = b^((j-2)/2) * ( b * 1[floor(b^j x) = b k + i] - 1[floor(b^(j-1) x) = k] )
//! ```
//!
//! supported on `E^(j-1)_k`, and `psi^0_{0,0} = 1`. The `D`-variate wavelet is
//! the tensor product. The family is a tight frame (not a basis): the `b`
//! wavelets sharing `(j, k)` sum to zero, and each has squared `L2` norm
//! `1 - 1/b`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::{cell_index, check_base, checked_pow, compositions, mixed_radix, pow_f64, MultiIndex};
use crate::error::{Error, Result};

/// An admissible triple `(j, i, k)` in base `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub b: u32,
    pub j: MultiIndex,
    pub i: MultiIndex,
    pub k: Vec<u64>,
}

impl WaveletIndex {
    pub fn new(b: u32, j: MultiIndex, i: MultiIndex, k: Vec<u64>) -> Result<Self> {
        check_base(b)?;
        let d = j.len();
        for len in [i.len(), k.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, actual: len });
            }
        }
        for t in 0..d {
            let (jt, it, kt) = (j[t], i[t], k[t]);
            if (jt == 0 && it != 0) || it >= b {
                return Err(Error::param("i", format!("i_{t} = {it} not in theta_{jt}")));
            }
            let k_range = shift_range(b, jt)?;
            if kt >= k_range {
                return Err(Error::param("k", format!("k_{t} = {kt} not below b^{}", jt.saturating_sub(1))));
            }
        }
        Ok(WaveletIndex { b, j, i, k })
    }

    /// The constant wavelet in `D` dimensions.
    pub fn constant(b: u32, dim: usize) -> Self {
        WaveletIndex {
            b,
            j: MultiIndex::zeros(dim),
            i: MultiIndex::zeros(dim),
            k: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.j.len()
    }

    /// `u(j)`: coordinates with positive resolution.
    pub fn active_coordinates(&self) -> Vec<usize> {
        self.j.support()
    }

    /// Blocks of `s` consecutive coordinates that meet `u(j)`.
    pub fn active_blocks(&self, s: usize) -> Vec<usize> {
        let mut blocks: Vec<usize> = self.active_coordinates().iter().map(|t| t / s).collect();
        blocks.dedup();
        blocks
    }

    /// Support box `E^(j-1)_k`, as resolutions `j_t - 1` (clamped at -1) and shifts.
    pub fn support(&self) -> (Vec<i32>, Vec<u64>) {
        (self.j.iter().map(|&jt| jt as i32 - 1).collect(), self.k.clone())
    }

    /// The same `(j, k)` with a different shape vector `i`.
    pub fn with_shape(&self, i: MultiIndex) -> Result<Self> {
        Self::new(self.b, self.j.clone(), i, self.k.clone())
    }
}

impl fmt::Display for WaveletIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.k.iter().map(u64::to_string).collect();
        write!(f, "j={} i={} k=({})", self.j, self.i, k.join(","))
    }
}

/// Number of admissible shifts, `|vartheta_(j-1)|`.
fn shift_range(b: u32, j: u32) -> Result<u64> {
    checked_pow(b, j.saturating_sub(1)).ok_or_else(|| Error::param("j", format!("b^{j} overflows")))
}

/// Where `x` sits relative to the support of `psi^j_{.,k}`: `None` outside,
/// otherwise the digit `floor(b^j x) - b k`.
pub fn local_digit(j: u32, k: u64, x: f64, b: u32) -> Result<Option<u32>> {
    if j == 0 {
        cell_index(x, b, 0)?;
        return Ok(Some(0));
    }
    let fine = cell_index(x, b, j)?;
    let bb = b as u64;
    if fine / bb != k {
        return Ok(None);
    }
    Ok(Some((fine % bb) as u32))
}

fn amplitude(b: u32, j: u32) -> f64 {
    (b as f64).powf((j as f64 - 2.0) / 2.0)
}

/// Value of `psi^j_{i,k}` given the local digit of `x`.
fn shape_value(b: u32, j: u32, i: u32, digit: Option<u32>) -> f64 {
    match digit {
        None => 0.0,
        Some(_) if j == 0 => 1.0,
        Some(d) => amplitude(b, j) * if d == i { b as f64 - 1.0 } else { -1.0 },
    }
}

pub fn psi_eval_1d(j: u32, i: u32, k: u64, x: f64, b: u32) -> Result<f64> {
    WaveletIndex::new(b, MultiIndex(vec![j]), MultiIndex(vec![i]), vec![k])?;
    Ok(shape_value(b, j, i, local_digit(j, k, x, b)?))
}

/// `Psi^{D,j}_{i,k}(x)`, zero as soon as one coordinate leaves the support.
pub fn psi_eval_multi(idx: &WaveletIndex, x: &[f64]) -> Result<f64> {
    if x.len() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            actual: x.len(),
        });
    }
    let mut acc = 1.0;
    for (t, &xt) in x.iter().enumerate() {
        let digit = local_digit(idx.j[t], idx.k[t], xt, idx.b)?;
        let v = shape_value(idx.b, idx.j[t], idx.i[t], digit);
        if v == 0.0 {
            return Ok(0.0);
        }
        acc *= v;
    }
    Ok(acc)
}

/// Scaled wavelet `b^(-alpha |j|) Psi`.
pub fn psi_eval_scaled(idx: &WaveletIndex, x: &[f64], alpha: f64) -> Result<f64> {
    Ok((idx.b as f64).powf(-alpha * idx.j.total() as f64) * psi_eval_multi(idx, x)?)
}

/// Values of all `b^|u(j)|` wavelets sharing `(j, k)` at `x`, ordered like
/// [`shapes`]. `out` is overwritten.
pub fn eval_all_shapes(b: u32, j: &[u32], k: &[u64], x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    out.push(1.0);
    for t in 0..j.len() {
        if j[t] == 0 {
            continue;
        }
        let digit = local_digit(j[t], k[t], x[t], b)?;
        let amp = amplitude(b, j[t]);
        let len = out.len();
        let mut next = Vec::with_capacity(len * b as usize);
        for &v in out.iter().take(len) {
            for i in 0..b {
                next.push(match digit {
                    None => 0.0,
                    Some(d) => v * amp * if d == i { b as f64 - 1.0 } else { -1.0 },
                });
            }
        }
        *out = next;
    }
    Ok(())
}

/// All admissible wavelets with the given `(j, k)`, shape vectors `i` in
/// lexicographic order over the active coordinates.
pub fn shapes(b: u32, j: &MultiIndex, k: &[u64]) -> Result<Vec<WaveletIndex>> {
    let active = j.support();
    let sizes = vec![b as u64; active.len()];
    mixed_radix(&sizes)
        .map(|choice| {
            let mut i = MultiIndex::zeros(j.len());
            for (slot, &t) in choice.iter().zip(&active) {
                i[t] = *slot as u32;
            }
            WaveletIndex::new(b, j.clone(), i, k.to_vec())
        })
        .collect()
}

/// `int Psi = 1` for the constant wavelet, `0` otherwise.
pub fn integral_of_wavelet(idx: &WaveletIndex) -> f64 {
    if idx.j.iter().all(|&jt| jt == 0) {
        1.0
    } else {
        0.0
    }
}

/// Constraint on `|j|` for [`indices_of_resolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Exactly(u32),
    AtMost(u32),
    /// Every `j_t` at most the given value.
    PerCoordinate(u32),
}

/// All admissible `(j, i, k)` in `D` dimensions with `|j|` as constrained.
/// Ordered by `|j|`, then `j` lexicographically, then `k`, then `i`.
pub fn indices_of_resolution(b: u32, dim: usize, constraint: Resolution) -> Result<Vec<WaveletIndex>> {
    check_base(b)?;
    let (totals, caps) = match constraint {
        Resolution::Exactly(l) => (l..=l, None),
        Resolution::AtMost(l) => (0..=l, None),
        Resolution::PerCoordinate(c) => (0..=c * dim as u32, Some(vec![c; dim])),
    };
    let mut out = Vec::new();
    for total in totals {
        for j in compositions(total, dim, 0, caps.as_deref())? {
            for k in shifts(b, &j)? {
                out.extend(shapes(b, &j, &k)?);
            }
        }
    }
    Ok(out)
}

/// All admissible shift vectors for resolution `j`.
pub fn shifts(b: u32, j: &[u32]) -> Result<Vec<Vec<u64>>> {
    let sizes = j.iter().map(|&jt| shift_range(b, jt)).collect::<Result<Vec<_>>>()?;
    Ok(mixed_radix(&sizes).collect())
}

/// A function constant on the cells of the uniform `b`-adic grid of
/// resolution `R` in every coordinate. Cell values are row-major with the
/// last coordinate fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunction {
    pub b: u32,
    pub dim: usize,
    pub resolution: u32,
    pub values: Vec<f64>,
}

impl CellFunction {
    pub fn new(b: u32, dim: usize, resolution: u32, values: Vec<f64>) -> Result<Self> {
        check_base(b)?;
        let expected = cells_per_side(b, resolution)?
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::param("resolution", "grid too large"))? as usize;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(CellFunction {
            b,
            dim,
            resolution,
            values,
        })
    }

    /// Sample `f` at cell midpoints.
    pub fn from_fn(b: u32, dim: usize, resolution: u32, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let side = cells_per_side(b, resolution)?;
        let h = 1.0 / side as f64;
        let sizes = vec![side; dim];
        let values = mixed_radix(&sizes)
            .map(|cell| {
                let x: Vec<f64> = cell.iter().map(|&c| (c as f64 + 0.5) * h).collect();
                f(&x)
            })
            .collect();
        Self::new(b, dim, resolution, values)
    }

    pub fn cell_volume(&self) -> f64 {
        pow_f64(self.b, -((self.resolution as usize * self.dim) as i32))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let side = cells_per_side(self.b, self.resolution)?;
        let mut flat = 0u64;
        for &xt in x {
            flat = flat * side + cell_index(xt, self.b, self.resolution)?;
        }
        Ok(self.values[flat as usize])
    }

    pub fn l2_norm_squared(&self) -> f64 {
        let squares: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        crate::basis::pairwise_sum(&squares) * self.cell_volume()
    }

    /// Exact `int f Psi` as a sum over the grid cells inside the support of
    /// `Psi`. Requires every `j_t <= R`.
    pub fn inner_product(&self, idx: &WaveletIndex) -> Result<f64> {
        if idx.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: idx.dim(),
            });
        }
        if let Some(&jt) = idx.j.iter().find(|&&jt| jt > self.resolution) {
            return Err(Error::param(
                "resolution",
                format!("grid resolution {} cannot resolve j_t = {jt}", self.resolution),
            ));
        }
        let b = self.b as u64;
        let side = cells_per_side(self.b, self.resolution)?;
        // Per coordinate: the range of grid cells inside E^(j-1)_k and the
        // 1-D wavelet value on each.
        let mut ranges = Vec::with_capacity(self.dim);
        // Amplitudes are factored out so integer-valued sums cancel exactly.
        let mut scale = self.cell_volume();
        for t in 0..self.dim {
            let jt = idx.j[t];
            if jt == 0 {
                ranges.push((0u64, vec![1.0; side as usize]));
                continue;
            }
            let width = b.pow(self.resolution + 1 - jt);
            let start = idx.k[t] * width;
            let fine_width = width / b;
            scale *= amplitude(self.b, jt);
            let vals = (0..width)
                .map(|c| {
                    let digit = (c / fine_width) as u32;
                    if digit == idx.i[t] { self.b as f64 - 1.0 } else { -1.0 }
                })
                .collect();
            ranges.push((start, vals));
        }
        let sizes: Vec<u64> = ranges.iter().map(|(_, v)| v.len() as u64).collect();
        let terms: Vec<f64> = mixed_radix(&sizes)
            .map(|local| {
                let mut flat = 0u64;
                let mut w = 1.0;
                for (t, &c) in local.iter().enumerate() {
                    flat = flat * side + ranges[t].0 + c;
                    w *= ranges[t].1[c as usize];
                }
                w * self.values[flat as usize]
            })
            .collect();
        Ok(crate::basis::pairwise_sum(&terms) * scale)
    }
}

fn cells_per_side(b: u32, resolution: u32) -> Result<u64> {
    checked_pow(b, resolution).ok_or_else(|| Error::param("resolution", "grid too large"))
}

/// Canonical coefficients `f_hat = int f Psi`, keyed by index.
pub type CoefficientMap = BTreeMap<WaveletIndex, f64>;

/// Canonical coefficients of `f` for every admissible index with all
/// `j_t <= j_max`. Coefficients that vanish exactly are omitted. With
/// `j_max = R` the map is complete: every coefficient with some `j_t > R`
/// is zero for a function constant on resolution-`R` cells.
pub fn canonical_coefficients(f: &CellFunction, j_max: u32) -> Result<CoefficientMap> {
    if f.resolution < j_max {
        return Err(Error::param(
            "j_max",
            format!("grid resolution {} is below j_max = {j_max}", f.resolution),
        ));
    }
    let mut map = CoefficientMap::new();
    for idx in indices_of_resolution(f.b, f.dim, Resolution::PerCoordinate(j_max))? {
        let c = f.inner_product(&idx)?;
        if c != 0.0 {
            map.insert(idx, c);
        }
    }
    Ok(map)
}

/// `sqrt(sum b^(2 alpha |j|) f_hat^2)`.
pub fn haar_alpha_norm(coefficients: &CoefficientMap, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.5 {
        return Err(Error::param("alpha", format!("smoothness must exceed 1/2, got {alpha}")));
    }
    let terms: Vec<f64> = coefficients
        .iter()
        .map(|(idx, &c)| (idx.b as f64).powf(2.0 * alpha * idx.j.total() as f64) * c * c)
        .collect();
    Ok(crate::basis::pairwise_sum(&terms).sqrt())
}
