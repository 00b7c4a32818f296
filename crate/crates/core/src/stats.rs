//! Replication statistics: moment estimates, deterministic parallel
//! reduction over replications, a uniformity test and least squares.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::pairwise_sum;
use crate::error::{Error, Result};

/// Replications are processed in fixed chunks of this size, so reductions
/// do not depend on the number of worker threads.
pub const REPLICATION_CHUNK: u64 = 64;

/// Sample mean, mean square and standard error of a replicated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub second_moment: f64,
    /// `sample std / sqrt(R)`.
    pub se: f64,
    pub reps: usize,
}

impl MomentEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::param("reps", "need at least 2 replications"));
        }
        let mean = pairwise_sum(samples) / n as f64;
        let squares: Vec<f64> = samples.iter().map(|x| x * x).collect();
        let second_moment = pairwise_sum(&squares) / n as f64;
        let centred: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&centred) / (n - 1) as f64;
        Ok(MomentEstimate {
            mean,
            second_moment,
            se: (var / n as f64).sqrt(),
            reps: n,
        })
    }

    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Evaluate `f` on replications `0..reps` in parallel and return the
/// results in replication order.
pub fn replicate<T, F>(reps: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let chunks: Vec<Result<Vec<T>>> = (0..reps.div_ceil(REPLICATION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REPLICATION_CHUNK;
            let hi = (lo + REPLICATION_CHUNK).min(reps);
            (lo..hi).map(&f).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(reps as usize);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

/// Sum of per-replication contributions over `0..reps`. `f(r, acc)` adds
/// replication `r` into `acc` (length `len`). Chunks are summed in
/// replication order and the chunk totals are merged pairwise, so the result
/// is independent of the thread count.
pub fn replicate_sum<F>(reps: u64, len: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    let partials: Vec<Result<Vec<f64>>> = (0..reps.div_ceil(REPLICATION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            let lo = c * REPLICATION_CHUNK;
            for r in lo..(lo + REPLICATION_CHUNK).min(reps) {
                f(r, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let partials = partials.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge_pairwise(&partials, len))
}

fn merge_pairwise(parts: &[Vec<f64>], len: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; len],
        1 => parts[0].clone(),
        n => {
            let (lo, hi) = parts.split_at(n / 2);
            let mut left = merge_pairwise(lo, len);
            for (l, r) in left.iter_mut().zip(merge_pairwise(hi, len)) {
                *l += r;
            }
            left
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and `Unif[0,1)`. Sorts in place.
pub fn ks_uniform_statistic(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at the 1% level for large `n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Ordinary least squares `y ~ X beta` via the normal equations.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    if design.len() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: design.len(),
        });
    }
    let p = design[0].len();
    if n < p {
        return Err(Error::param("observations", format!("{n} rows cannot fit {p} parameters")));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        for a in 0..p {
            xty[a] += row[a] * yi;
            for b in 0..p {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    solve_dense(xtx, xty)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Precondition("singular least-squares system".into()));
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_a_known_sample() {
        let est = MomentEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.second_moment, 7.5);
        let var = 5.0 / 3.0;
        assert!((est.se - (var / 4.0f64).sqrt()).abs() < 1e-15);
        assert!(MomentEstimate::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn replicate_preserves_order_for_any_pool() {
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let f = |r: u64| Ok((r as f64).sqrt());
        let a = serial.install(|| replicate(1000, f)).unwrap();
        let b = wide.install(|| replicate(1000, f)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[999], 999f64.sqrt());
    }

    #[test]
    fn replicate_sum_is_thread_independent() {
        let f = |r: u64, acc: &mut [f64]| {
            acc[0] += 1.0 / (r as f64 + 1.0);
            acc[1] += (r as f64).sin();
            Ok(())
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| replicate_sum(5000, 2, f)).unwrap();
        let b = many.install(|| replicate_sum(5000, 2, f)).unwrap();
        assert_eq!(a, b);
        let harmonic: f64 = (1..=5000).map(|k| 1.0 / k as f64).sum();
        assert!((a[0] - harmonic).abs() < 1e-10);
    }

    #[test]
    fn ks_on_a_perfect_grid() {
        let mut grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform_statistic(&mut grid) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 1.0]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 * x - 1.0).collect();
        let beta = least_squares(&design, &y).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-12 && (beta[1] + 1.0).abs() < 1e-12);
    }
}
