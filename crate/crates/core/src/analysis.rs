//! Randomized-error analysis in the Haar-wavelet picture.
//!
//! For a fixed `(j, k)` with `u(j)` nonempty, the `b^|u(j)|` wavelets sharing
//! `(j, k)` integrate to zero, so `A(L,d) Psi` is the error. Their
//! second-moment matrix `Lambda(j,k)` (on scaled wavelets
//! `b^(-alpha|j|) Psi`) is one diagonal block of the covariance operator,
//! and the randomized error over the unit ball of `H_alpha` is
//! `sqrt(sup_{j,k} rho(Lambda(j,k)))`.
//!
//! All estimators evaluate wavelets through per-block tables: a wavelet is a
//! product over blocks, so `A(L,d) Psi` only needs `U^(n)_l` applied to the
//! block factors. Replications are reduced with [`stats::replicate_sum`],
//! which makes every result independent of the thread count.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::basis::{cell_index, checked_pow, compositions, MultiIndex};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, symmetric_eigen, Matrix};
use crate::scrambling::{BlockFactory, BuildingBlock};
use crate::smolyak::{RealizedBlocks, SmolyakPlan};
use crate::stats::{least_squares, replicate, replicate_sum, MomentEstimate};
use crate::wavelets::{psi_eval_multi, WaveletIndex};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.5 {
        return Err(Error::param("alpha", format!("smoothness must exceed 1/2, got {alpha}")));
    }
    Ok(())
}

fn wavelet_on_block(block: &BuildingBlock, idx: &WaveletIndex) -> Result<f64> {
    let values = block.nodes().map(|x| psi_eval_multi(idx, x)).collect::<Result<Vec<_>>>()?;
    Ok(block.weight * crate::basis::pairwise_sum(&values))
}

/// Monte Carlo estimate of `E[(U_l Psi)^2]` over `reps` independent
/// scramblings, without any precondition on `j`.
pub fn block_second_moment(l: u32, idx: &WaveletIndex, s: usize, reps: u64, master_seed: u64) -> Result<MomentEstimate> {
    if idx.dim() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            actual: idx.dim(),
        });
    }
    let factory = BlockFactory::with_default_generator(idx.b, s, l)?;
    let squares = replicate(reps, |r| {
        let v = wavelet_on_block(&factory.realize(0, l, master_seed, r)?, idx)?;
        Ok(v * v)
    })?;
    MomentEstimate::from_samples(&squares)
}

/// `E[(U_l Psi)^2]` where the two-sided bound
/// `b^(2-2s) b^-l <= E[(U_l Psi)^2] <= b^(1+s) b^-l` is claimed, that is
/// `|j| >= l + s - 1`.
pub fn second_moment_bb(l: u32, idx: &WaveletIndex, s: usize, reps: u64, master_seed: u64) -> Result<MomentEstimate> {
    if idx.j.total() + 1 < l + s as u32 {
        return Err(Error::Precondition(format!(
            "|j| = {} is below l + s - 1 = {}",
            idx.j.total(),
            l + s as u32 - 1
        )));
    }
    block_second_moment(l, idx, s, reps, master_seed)
}

/// The explicit bracket `[b^(2-2s) b^-l, b^(1+s) b^-l]`.
pub fn second_moment_bracket(b: u32, s: usize, l: u32) -> (f64, f64) {
    let b = b as f64;
    let (s, l) = (s as f64, l as f64);
    (b.powf(2.0 - 2.0 * s - l), b.powf(1.0 + s - l))
}

/// What a cross moment is taken over.
#[derive(Debug, Clone, Copy)]
pub enum CrossTarget<'a> {
    /// `U^(0)_l Psi * U^(0)_l' Psi'` in `s` dimensions. Equal levels share
    /// one scrambled net.
    Block { s: usize, levels: (u32, u32) },
    /// `A(L,d) Psi * A(L,d) Psi'` on one realization.
    Smolyak(&'a SmolyakPlan),
}

/// Empirical `E[Q Psi * Q Psi']`, which vanishes whenever `j != j'` or
/// `k != k'`.
pub fn cross_moment(
    target: CrossTarget<'_>,
    idx: &WaveletIndex,
    other: &WaveletIndex,
    reps: u64,
    master_seed: u64,
) -> Result<MomentEstimate> {
    if idx.j == other.j && idx.k == other.k {
        return Err(Error::Precondition("indices share (j, k); the cross moment need not vanish".into()));
    }
    if idx.b != other.b || idx.dim() != other.dim() {
        return Err(Error::param("other", "indices differ in base or dimension"));
    }
    let products = match target {
        CrossTarget::Block { s, levels: (l1, l2) } => {
            let factory = BlockFactory::with_default_generator(idx.b, s, l1.max(l2))?;
            replicate(reps, |r| {
                let u1 = factory.realize(0, l1, master_seed, r)?;
                let a = wavelet_on_block(&u1, idx)?;
                let b = if l1 == l2 {
                    wavelet_on_block(&u1, other)?
                } else {
                    wavelet_on_block(&factory.realize(0, l2, master_seed, r)?, other)?
                };
                Ok(a * b)
            })?
        }
        CrossTarget::Smolyak(plan) => replicate(reps, |r| {
            let blocks = plan.realize_blocks(master_seed, r)?;
            Ok(apply_wavelet(plan, &blocks, idx)? * apply_wavelet(plan, &blocks, other)?)
        })?,
    };
    MomentEstimate::from_samples(&products)
}

/// `A(L,d) Psi` on realized blocks via the separable path.
pub fn apply_wavelet(plan: &SmolyakPlan, blocks: &RealizedBlocks, idx: &WaveletIndex) -> Result<f64> {
    let digits = BlockDigits::new(plan, blocks, max_entry(&idx.j))?;
    Ok(shape_vector(plan, &digits, &idx.j, &idx.k, Some(&idx.i))?[0])
}

fn max_entry(j: &[u32]) -> u32 {
    j.iter().copied().max().unwrap_or(0)
}

/// Node cells of every realized block at a common resolution, so that any
/// wavelet up to that resolution is evaluated with integer arithmetic.
struct BlockDigits {
    b: u64,
    s: usize,
    resolution: u32,
    /// `cells[n][l - 1]`: row-major `count x s` cell indices.
    cells: Vec<Vec<Vec<u64>>>,
    weights: Vec<Vec<f64>>,
}

impl BlockDigits {
    fn new(plan: &SmolyakPlan, blocks: &RealizedBlocks, resolution: u32) -> Result<Self> {
        let b = plan.b();
        checked_pow(b, resolution + 1).ok_or_else(|| Error::param("j", "resolution too fine for exact evaluation"))?;
        let mut cells = Vec::with_capacity(blocks.blocks.len());
        let mut weights = Vec::with_capacity(blocks.blocks.len());
        for levels in &blocks.blocks {
            cells.push(
                levels
                    .iter()
                    .map(|blk| blk.nodes.iter().map(|&x| cell_index(x, b, resolution)).collect())
                    .collect::<Result<Vec<Vec<u64>>>>()?,
            );
            weights.push(levels.iter().map(|blk| blk.weight).collect());
        }
        Ok(BlockDigits {
            b: b as u64,
            s: plan.s(),
            resolution,
            cells,
            weights,
        })
    }
}

/// `A(L,d)` applied to every wavelet sharing `(j, k)` (or only shape `i`
/// when given), ordered like [`crate::wavelets::shapes`].
fn shape_vector(
    plan: &SmolyakPlan,
    digits: &BlockDigits,
    j: &[u32],
    k: &[u64],
    only: Option<&[u32]>,
) -> Result<Vec<f64>> {
    let (b, s) = (digits.b, digits.s);
    let mut tables = Vec::with_capacity(plan.d());
    let mut values = Vec::new();
    let mut sums = Vec::new();
    for (n, levels) in digits.cells.iter().enumerate() {
        let jn = &j[n * s..(n + 1) * s];
        let kn = &k[n * s..(n + 1) * s];
        let active: Vec<usize> = (0..s).filter(|&t| jn[t] > 0).collect();
        let width = match only {
            Some(_) => 1,
            None => (b as usize).pow(active.len() as u32),
        };
        let amps: Vec<f64> = active.iter().map(|&t| (b as f64).powf((jn[t] as f64 - 2.0) / 2.0)).collect();
        let divs: Vec<u64> = active.iter().map(|&t| b.pow(digits.resolution - jn[t])).collect();
        let mut per_level = Vec::with_capacity(levels.len());
        for (l, cells) in levels.iter().enumerate() {
            sums.clear();
            sums.resize(width, 0.0);
            for node in cells.chunks_exact(s) {
                // Local digit of every active coordinate; skip nodes off the support.
                let mut local = [0u32; 32];
                let mut inside = true;
                for (a, &t) in active.iter().enumerate() {
                    let fine = node[t] / divs[a];
                    if fine / b != kn[t] {
                        inside = false;
                        break;
                    }
                    local[a] = (fine % b) as u32;
                }
                if !inside {
                    continue;
                }
                values.clear();
                values.push(1.0);
                for (a, &t) in active.iter().enumerate() {
                    let hi = amps[a] * (b as f64 - 1.0);
                    let lo = -amps[a];
                    match only {
                        Some(i) => values[0] *= if local[a] == i[n * s + t] { hi } else { lo },
                        None => {
                            let len = values.len();
                            for p in 0..len {
                                let v = values[p];
                                for i in 0..b as u32 {
                                    values.push(v * if local[a] == i { hi } else { lo });
                                }
                            }
                            values.drain(..len);
                        }
                    }
                }
                for (acc, v) in sums.iter_mut().zip(&values) {
                    *acc += v;
                }
            }
            let w = digits.weights[n][l];
            per_level.push(sums.iter().map(|v| v * w).collect());
        }
        tables.push(per_level);
    }
    plan.combine(&tables)
}

/// Empirical second moments `E[X X^T]` of the vector `X = (A Psi_i)_i` over
/// the shapes of several `(j, k)` at once, with per-entry standard errors.
#[derive(Debug, Clone)]
struct BlockMoments {
    mean: Matrix,
    se: Matrix,
}

fn covariance_blocks(
    plan: &SmolyakPlan,
    candidates: &[(MultiIndex, Vec<u64>)],
    reps: u64,
    master_seed: u64,
) -> Result<Vec<BlockMoments>> {
    if reps < 2 {
        return Err(Error::param("reps", "need at least 2 replications"));
    }
    let b = plan.b() as usize;
    let widths: Vec<usize> = candidates.iter().map(|(j, _)| b.pow(j.support().len() as u32)).collect();
    let offsets: Vec<usize> = widths
        .iter()
        .scan(0, |acc, w| {
            let at = *acc;
            *acc += 2 * w * w;
            Some(at)
        })
        .collect();
    let len: usize = widths.iter().map(|w| 2 * w * w).sum();
    let resolution = candidates.iter().map(|(j, _)| max_entry(j)).max().unwrap_or(0);
    let sums = replicate_sum(reps, len, |r, acc| {
        let blocks = plan.realize_blocks(master_seed, r)?;
        let digits = BlockDigits::new(plan, &blocks, resolution)?;
        for (c, (j, k)) in candidates.iter().enumerate() {
            let x = shape_vector(plan, &digits, j, k, None)?;
            let w = widths[c];
            let (first, second) = acc[offsets[c]..offsets[c] + 2 * w * w].split_at_mut(w * w);
            for p in 0..w {
                for q in 0..w {
                    let v = x[p] * x[q];
                    first[p * w + q] += v;
                    second[p * w + q] += v * v;
                }
            }
        }
        Ok(())
    })?;
    let r = reps as f64;
    Ok(widths
        .iter()
        .zip(&offsets)
        .map(|(&w, &off)| {
            let mut mean = Matrix::zeros(w);
            let mut se = Matrix::zeros(w);
            for p in 0..w {
                for q in 0..w {
                    let m1 = sums[off + p * w + q] / r;
                    let m2 = sums[off + w * w + p * w + q] / r;
                    mean[(p, q)] = m1;
                    se[(p, q)] = ((m2 - m1 * m1).max(0.0) * r / (r - 1.0) / r).sqrt();
                }
            }
            BlockMoments { mean, se }
        })
        .collect())
}

/// `Lambda(j,k)`: second moments of `A(L,d)` applied to the scaled wavelets
/// `b^(-alpha|j|) Psi^j_{i,k}`, over all shapes `i`.
#[derive(Debug, Clone)]
pub struct LambdaBlock {
    pub j: MultiIndex,
    pub k: Vec<u64>,
    pub alpha: f64,
    pub matrix: Matrix,
    /// Standard error of every entry.
    pub se: Matrix,
    pub reps: u64,
}

impl LambdaBlock {
    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.matrix)
    }
}

fn check_resolution(plan: &SmolyakPlan, j: &MultiIndex, k: &[u64]) -> Result<()> {
    if j.len() != plan.dim() || k.len() != plan.dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.dim(),
            actual: j.len().min(k.len()),
        });
    }
    WaveletIndex::new(plan.b(), j.clone(), MultiIndex::zeros(j.len()), k.to_vec())?;
    Ok(())
}

pub fn lambda_block(plan: &SmolyakPlan, j: &MultiIndex, k: &[u64], alpha: f64, reps: u64, master_seed: u64) -> Result<LambdaBlock> {
    check_alpha(alpha)?;
    check_resolution(plan, j, k)?;
    if j.support().is_empty() {
        // The constant is integrated exactly: zero error.
        return Ok(LambdaBlock {
            j: j.clone(),
            k: k.to_vec(),
            alpha,
            matrix: Matrix::zeros(1),
            se: Matrix::zeros(1),
            reps,
        });
    }
    let moments = covariance_blocks(plan, &[(j.clone(), k.to_vec())], reps, master_seed)?.remove(0);
    let scale = (plan.b() as f64).powf(-2.0 * alpha * j.total() as f64);
    Ok(LambdaBlock {
        j: j.clone(),
        k: k.to_vec(),
        alpha,
        matrix: scaled(&moments.mean, scale).symmetrized(),
        se: scaled(&moments.se, scale),
        reps,
    })
}

fn scaled(m: &Matrix, factor: f64) -> Matrix {
    let mut out = m.clone();
    for p in 0..m.size() {
        for q in 0..m.size() {
            out[(p, q)] *= factor;
        }
    }
    out
}

/// `j = (floor(2L/d), ..., 2L - (d-1) floor(2L/d))` as block resolutions.
pub fn candidate_worst_index(level: u32, d: usize) -> Result<MultiIndex> {
    if d == 0 || (level as usize) < d {
        return Err(Error::param("L", format!("need L >= d >= 1, got L = {level}, d = {d}")));
    }
    let part = 2 * level / d as u32;
    let mut j = vec![part; d];
    j[d - 1] = 2 * level - (d as u32 - 1) * part;
    Ok(MultiIndex(j))
}

/// Place block resolutions on the first coordinate of each block of `s`.
pub fn lift_block_resolution(block_j: &MultiIndex, s: usize) -> MultiIndex {
    let mut j = MultiIndex::zeros(block_j.len() * s);
    for (n, &v) in block_j.iter().enumerate() {
        j[n * s] = v;
    }
    j
}

/// `|{l in N^d : |l| = mu, l_n <= j_n}|` where `j_n` are block resolutions.
pub fn count_admissible_levels(block_j: &MultiIndex, mu: u32) -> Result<u64> {
    let d = block_j.len();
    if (mu as usize) < d {
        return Err(Error::param("mu", format!("mu = {mu} is below d = {d}")));
    }
    Ok(compositions(mu, d, 1, Some(block_j))?.len() as u64)
}

/// The lower bound from the sharpness argument at the candidate index:
/// `b^(d(2-2s)) |S_{j,L}| b^-L`.
pub fn lower_bound_value(b: u32, s: usize, level: u32, block_j: &MultiIndex) -> Result<f64> {
    let d = block_j.len() as f64;
    let count = count_admissible_levels(block_j, level)? as f64;
    Ok((b as f64).powf(d * (2.0 - 2.0 * s as f64) - level as f64) * count)
}

/// Result of [`lower_bound_probe`].
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundProbe {
    pub level: u32,
    pub j: MultiIndex,
    pub estimate: MomentEstimate,
    pub bound: f64,
}

/// `E[(A(L,d) Psi)^2]` for the unscaled wavelet at the lifted
/// [`candidate_worst_index`], shape `i = 0`, shift `k = 0`.
pub fn lower_bound_probe(plan: &SmolyakPlan, reps: u64, master_seed: u64) -> Result<LowerBoundProbe> {
    let block_j = candidate_worst_index(plan.level(), plan.d())?;
    let j = lift_block_resolution(&block_j, plan.s());
    let k = vec![0; plan.dim()];
    let m = covariance_blocks(plan, &[(j.clone(), k)], reps, master_seed)?.remove(0);
    Ok(LowerBoundProbe {
        level: plan.level(),
        j,
        estimate: MomentEstimate {
            mean: m.mean[(0, 0)],
            second_moment: f64::NAN,
            se: m.se[(0, 0)],
            reps: reps as usize,
        },
        bound: lower_bound_value(plan.b(), plan.s(), plan.level(), &block_j)?,
    })
}

/// Spectral radius of one candidate block.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub j: MultiIndex,
    pub rho: f64,
}

/// Result of [`randomized_error_estimate`].
#[derive(Debug, Clone, Serialize)]
pub struct ErrorEstimate {
    /// `sqrt(max rho)`.
    pub error: f64,
    /// Delta-method standard error of `error`.
    pub se: f64,
    pub rho: f64,
    pub rho_se: f64,
    pub argmax_j: MultiIndex,
    pub argmax_k: Vec<u64>,
    /// The maximizer sits on the truncation boundary `|j| = L + j_budget`.
    pub boundary: bool,
    pub candidates: Vec<CandidateReport>,
}

/// Candidate resolutions: every `j` with `L - d < |j| <= L + j_budget`, plus
/// the lifted worst-case candidate.
pub fn error_candidates(plan: &SmolyakPlan, j_budget: u32) -> Result<Vec<MultiIndex>> {
    let lo = plan.level() + 1 - plan.d() as u32;
    let mut out = Vec::new();
    for total in lo..=plan.level() + j_budget {
        out.extend(compositions(total, plan.dim(), 0, None)?);
    }
    let worst = lift_block_resolution(&candidate_worst_index(plan.level(), plan.d())?, plan.s());
    if !out.contains(&worst) {
        out.push(worst);
    }
    Ok(out)
}

/// `e^r(A(L,d)) ~ sqrt(max_{j} rho(Lambda(j, 0)))` over [`error_candidates`].
/// Only `k = 0` is used per `j`: the law of `Lambda(j,k)` does not depend on
/// `k` under scrambling.
pub fn randomized_error_estimate(
    plan: &SmolyakPlan,
    alpha: f64,
    reps: u64,
    master_seed: u64,
    j_budget: u32,
) -> Result<ErrorEstimate> {
    check_alpha(alpha)?;
    let js = error_candidates(plan, j_budget)?;
    let candidates: Vec<(MultiIndex, Vec<u64>)> = js.iter().map(|j| (j.clone(), vec![0; plan.dim()])).collect();
    let blocks = covariance_blocks(plan, &candidates, reps, master_seed)?;
    let b = plan.b() as f64;
    let mut reports = Vec::with_capacity(js.len());
    let mut best: Option<(usize, f64, Matrix)> = None;
    for (c, m) in blocks.into_iter().enumerate() {
        let lambda = scaled(&m.mean, b.powf(-2.0 * alpha * js[c].total() as f64)).symmetrized();
        let rho = spectral_radius(&lambda)?;
        reports.push(CandidateReport { j: js[c].clone(), rho });
        if best.as_ref().is_none_or(|(_, r, _)| rho > *r) {
            best = Some((c, rho, lambda));
        }
    }
    let (c, rho, lambda) = best.expect("candidate set is nonempty");
    let argmax_j = js[c].clone();
    let k = vec![0; plan.dim()];

    // Standard error of rho = v^T Lambda v at the top eigenvector v.
    let (values, vectors) = symmetric_eigen(&lambda)?;
    let top = (0..values.len()).max_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs())).expect("nonempty");
    let v: Vec<f64> = (0..values.len()).map(|row| vectors[(row, top)]).collect();
    let scale = b.powf(-2.0 * alpha * argmax_j.total() as f64);
    let resolution = max_entry(&argmax_j);
    let samples = replicate(reps, |r| {
        let blocks = plan.realize_blocks(master_seed, r)?;
        let digits = BlockDigits::new(plan, &blocks, resolution)?;
        let x = shape_vector(plan, &digits, &argmax_j, &k, None)?;
        let proj: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok(scale * proj * proj)
    })?;
    let rho_est = MomentEstimate::from_samples(&samples)?;
    let error = rho.sqrt();
    Ok(ErrorEstimate {
        error,
        se: if error > 0.0 { rho_est.se / (2.0 * error) } else { 0.0 },
        rho,
        rho_se: rho_est.se,
        boundary: argmax_j.total() == plan.level() + j_budget,
        argmax_j,
        argmax_k: k,
        candidates: reports,
    })
}

/// Settings of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub b: u32,
    pub s: usize,
    pub d: usize,
    pub alpha: f64,
    pub levels: RangeInclusive<u32>,
    pub reps: u64,
    pub master_seed: u64,
    pub j_budget: u32,
}

impl StudyConfig {
    /// Defaults: `R = 4096`, `j_budget = 2d`.
    pub fn new(b: u32, s: usize, d: usize, alpha: f64, levels: RangeInclusive<u32>) -> Self {
        StudyConfig {
            b,
            s,
            d,
            alpha,
            levels,
            reps: 4096,
            master_seed: 0,
            j_budget: 2 * d as u32,
        }
    }

    /// Predicted exponents `(alpha + 1/2, (d-1)(1+alpha))`.
    pub fn theoretical_exponents(&self) -> (f64, f64) {
        (self.alpha + 0.5, (self.d as f64 - 1.0) * (1.0 + self.alpha))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub level: u32,
    pub nodes: u64,
    pub error: f64,
    pub se: f64,
    pub argmax_j: MultiIndex,
    pub boundary: bool,
}

/// A least-squares fit with residual-bootstrap 95% intervals.
#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub params: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub residual_sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFits {
    /// `log e = a log N + c`.
    pub slope: Fit,
    /// `e N^(alpha+1/2) / (log N)^((d-1)(1+alpha))` per level.
    pub compensated: Vec<f64>,
    /// `max / min` of `compensated`.
    pub compensated_band: f64,
    /// `log e + (alpha+1/2) log N = g log log N + c`; `None` when some
    /// `N < 2`.
    pub free_log_exponent: Option<Fit>,
    /// `log e = a log N + g log log N + c`; `None` when some `N < 2` or
    /// fewer than 4 levels.
    pub free_both: Option<Fit>,
    /// `(L, e(L+1)/e(L), predicted ratio)`.
    pub successive_ratios: Vec<(u32, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub records: Vec<ConvergenceRecord>,
    pub fits: RateFits,
}

const BOOTSTRAP_RESAMPLES: usize = 200;

/// Estimate the randomized error for every level and fit the rate.
pub fn convergence_study(config: &StudyConfig) -> Result<ConvergenceStudy> {
    check_alpha(config.alpha)?;
    if config.levels.clone().count() < 3 {
        return Err(Error::param("levels", "a rate fit needs at least 3 levels"));
    }
    let mut records = Vec::new();
    for level in config.levels.clone() {
        let plan = SmolyakPlan::new(config.b, config.s, config.d, level)?;
        let est = randomized_error_estimate(&plan, config.alpha, config.reps, config.master_seed, config.j_budget)?;
        records.push(ConvergenceRecord {
            level,
            nodes: plan.node_count(),
            error: est.error,
            se: est.se,
            argmax_j: est.argmax_j,
            boundary: est.boundary,
        });
    }
    let fits = fit_rates(config, &records)?;
    Ok(ConvergenceStudy {
        config: config.clone(),
        records,
        fits,
    })
}

/// Rate fits for given records; see [`RateFits`].
pub fn fit_rates(config: &StudyConfig, records: &[ConvergenceRecord]) -> Result<RateFits> {
    if records.len() < 3 {
        return Err(Error::param("levels", "a rate fit needs at least 3 levels"));
    }
    if records.iter().any(|r| r.error.is_nan() || r.error <= 0.0) {
        return Err(Error::Precondition("error estimates must be positive to fit a rate".into()));
    }
    let (a, g) = config.theoretical_exponents();
    let log_n: Vec<f64> = records.iter().map(|r| (r.nodes as f64).ln()).collect();
    let log_e: Vec<f64> = records.iter().map(|r| r.error.ln()).collect();
    let seed = config.master_seed ^ 0xb007_57a9;

    let slope = bootstrap_fit(&log_n.iter().map(|&x| vec![x, 1.0]).collect::<Vec<_>>(), &log_e, seed)?;

    let with_logs = records.iter().all(|r| r.nodes >= 2);
    let log_log: Vec<f64> = log_n.iter().map(|x| x.ln()).collect();
    let compensated: Vec<f64> = records
        .iter()
        .zip(&log_n)
        .map(|(r, &ln)| r.error * (r.nodes as f64).powf(a) / if g == 0.0 { 1.0 } else { ln.powf(g) })
        .collect();
    let hi = compensated.iter().cloned().fold(f64::MIN, f64::max);
    let lo = compensated.iter().cloned().fold(f64::MAX, f64::min);

    let free_log_exponent = if with_logs {
        let y: Vec<f64> = log_e.iter().zip(&log_n).map(|(e, n)| e + a * n).collect();
        let design: Vec<Vec<f64>> = log_log.iter().map(|&x| vec![x, 1.0]).collect();
        Some(bootstrap_fit(&design, &y, seed.wrapping_add(1))?)
    } else {
        None
    };
    let free_both = if with_logs && records.len() >= 4 {
        let design: Vec<Vec<f64>> = log_n.iter().zip(&log_log).map(|(&x, &z)| vec![x, z, 1.0]).collect();
        Some(bootstrap_fit(&design, &log_e, seed.wrapping_add(2))?)
    } else {
        None
    };

    let successive_ratios = records
        .windows(2)
        .map(|w| {
            let (n0, n1) = (w[0].nodes as f64, w[1].nodes as f64);
            let mut predicted = (n1 / n0).powf(-a);
            if g != 0.0 && n0 >= 2.0 {
                predicted *= (n1.ln() / n0.ln()).powf(g);
            }
            (w[0].level, w[1].error / w[0].error, predicted)
        })
        .collect();

    Ok(RateFits {
        slope,
        compensated,
        compensated_band: hi / lo,
        free_log_exponent,
        free_both,
        successive_ratios,
    })
}

/// OLS with residual bootstrap percentile intervals.
fn bootstrap_fit(design: &[Vec<f64>], y: &[f64], seed: u64) -> Result<Fit> {
    let params = least_squares(design, y)?;
    let fitted: Vec<f64> = design.iter().map(|row| row.iter().zip(&params).map(|(x, p)| x * p).sum()).collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let dof = (y.len() as f64 - params.len() as f64).max(1.0);
    let residual_sd = (residuals.iter().map(|r| r * r).sum::<f64>() / dof).sqrt();
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); params.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let y_star: Vec<f64> = fitted
            .iter()
            .map(|f| f + residuals[rng.gen_range(0..residuals.len())])
            .collect();
        if let Ok(p) = least_squares(design, &y_star) {
            for (slot, v) in draws.iter_mut().zip(p) {
                slot.push(v);
            }
        }
    }
    let intervals = draws
        .iter_mut()
        .map(|d| {
            d.sort_by(f64::total_cmp);
            let at = |q: f64| d[((d.len() - 1) as f64 * q).round() as usize];
            (at(0.025), at(0.975))
        })
        .collect();
    Ok(Fit {
        params,
        intervals,
        residual_sd,
    })
}
