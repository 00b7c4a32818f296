//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Exits non-zero if any criterion
//! fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use smolyak_rqmc::analysis::{
    candidate_worst_index, convergence_study, count_admissible_levels, cross_moment, lift_block_resolution,
    lower_bound_probe, second_moment_bb, second_moment_bracket, CrossTarget, StudyConfig,
};
use smolyak_rqmc::basis::{checked_pow, MultiIndex};
use smolyak_rqmc::linalg::{spectral_radius, Matrix};
use smolyak_rqmc::nets::{faure_net, is_net};
use smolyak_rqmc::scrambling::{scramble_net, ScramblerKey};
use smolyak_rqmc::smolyak::{combination_terms, node_count, SmolyakPlan};
use smolyak_rqmc::stats::{ks_critical_1pct, ks_uniform_statistic, replicate, MomentEstimate};
use smolyak_rqmc::wavelets::{indices_of_resolution, integral_of_wavelet, psi_eval_multi, Resolution, WaveletIndex};
use smolyak_rqmc::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Faure configurations: `b in {2,3,5}`, `m <= 5`, `s <= min(b, 3)`.
fn net_configs() -> Vec<(u32, u32, usize)> {
    let mut out = Vec::new();
    for b in [2u32, 3, 5] {
        for m in 0..=5 {
            for s in 1..=(b as usize).min(3) {
                out.push((b, m, s));
            }
        }
    }
    out
}

fn c01_net_validity() -> Result<Outcome> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let configs = net_configs();
    for &(b, m, s) in &configs {
        let net = faure_net(b, m, s)?;
        if !is_net(&net.points, b, m, s)?.passed() {
            failures.push(format!("({b},{m},{s})"));
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!("{} configurations, failures {:?}, {:.2?}", configs.len(), failures, elapsed),
    ))
}

fn c02_scrambling_preserves_nets() -> Result<Outcome> {
    let start = Instant::now();
    let configs = net_configs();
    let failures: Vec<String> = configs
        .iter()
        .map(|&(b, m, s)| {
            let net = faure_net(b, m, s)?;
            let bad = replicate(100, |r| {
                let key = ScramblerKey::new(0xacce, r, 0, m, 0);
                let scrambled = scramble_net(&net, m, key, false)?;
                Ok(is_net(&scrambled.points, b, m, s)?.passed())
            })?
            .into_iter()
            .filter(|ok| !ok)
            .count();
            Ok((b, m, s, bad))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|t| t.3 > 0)
        .map(|(b, m, s, bad)| format!("({b},{m},{s}): {bad}"))
        .collect();
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!("{} configurations x 100 scramblings, failures {:?}, {:.2?}", configs.len(), failures, elapsed),
    ))
}

fn c03_uniformity() -> Result<Outcome> {
    const DRAWS: u64 = 100_000;
    let critical = ks_critical_1pct(DRAWS as usize);
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    // One fixed point of the net per replication, full-depth scrambling.
    for (b, m, s, point) in [(2u32, 3u32, 2usize, 5usize), (3, 2, 3, 4), (5, 1, 2, 3)] {
        let net = faure_net(b, m, s)?;
        let depth = smolyak_rqmc::basis::default_depth(b);
        let draws = replicate(DRAWS, |r| {
            let scrambled = scramble_net(&net, depth, ScramblerKey::new(0x5eed, r, 0, m, 0), false)?;
            Ok(scrambled.points[point].values())
        })?;
        for t in 0..s {
            let mut xs: Vec<f64> = draws.iter().map(|x| x[t]).collect();
            let d = ks_uniform_statistic(&mut xs);
            worst = worst.max(d);
            details.push(format!("b={b} t={t}: {d:.5}"));
        }
    }
    Ok(Outcome::new(
        worst <= critical,
        format!("max KS {worst:.5} vs critical {critical:.5} [{}]", details.join(", ")),
    ))
}

fn c04_weight_sum() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    let mut count = 0;
    for b in [2u32, 3] {
        for s in [1usize, 2] {
            for d in 1..=3usize {
                for level in d as u32..=d as u32 + 6 {
                    let plan = SmolyakPlan::new(b, s, d, level)?;
                    // Exact: sum_terms coeff * b^(|l|-d) * b^-(|l|-d) = sum_terms coeff.
                    exact &= plan.terms().iter().map(|t| t.coeff).sum::<i64>() == 1;
                    for rep in 0..3 {
                        let q = plan.realize(4, rep)?;
                        worst = worst.max((q.weight_sum() - 1.0).abs());
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(Outcome::new(
        exact && worst <= 1e-12,
        format!("{count} realizations, max |sum w - 1| = {worst:.3e}, integer coefficient sum exact: {exact}"),
    ))
}

fn c05_exactness() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for d in 1..=3usize {
        for level in d as u32..=d as u32 + 4 {
            let plan = SmolyakPlan::new(2, 1, d, level)?;
            let wavelets = indices_of_resolution(2, d, Resolution::AtMost(level - d as u32))?;
            for rep in 0..5 {
                let q = plan.realize(55, rep)?;
                for w in &wavelets {
                    let v = q.try_apply(|x| psi_eval_multi(w, x))?;
                    worst = worst.max((v - integral_of_wavelet(w)).abs());
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(300),
        format!("{checked} (wavelet, realization) pairs, max error {worst:.3e}, {elapsed:.2?}"),
    ))
}

fn c06_unbiasedness() -> Result<Outcome> {
    const REPS: u64 = 10_000;
    let mut details = Vec::new();
    let mut pass = true;
    // (b, s, d, L) with D = s d <= 4.
    for (b, s, d, level) in [(2u32, 1usize, 1usize, 5u32), (2, 1, 2, 5), (3, 1, 3, 5), (2, 2, 2, 4), (3, 3, 1, 3), (2, 1, 4, 6)] {
        let plan = SmolyakPlan::new(b, s, d, level)?;
        let dim = plan.dim();
        let samples = replicate(REPS, |r| plan.realize(606, r)?.apply(|x| x.iter().product()))?;
        let est = MomentEstimate::from_samples(&samples)?;
        let target = 0.5f64.powi(dim as i32);
        let ok = est.within(target, 4.0);
        pass &= ok;
        details.push(format!(
            "b={b} s={s} d={d} L={level}: {:.3}SE",
            (est.mean - target).abs() / est.se
        ));
    }
    Ok(Outcome::new(pass, details.join(", ")))
}

fn c07_second_moment_bracket() -> Result<Outcome> {
    const REPS: u64 = 4096;
    let mut pass = true;
    let mut checked = 0;
    let mut worst = Vec::new();
    for s in [1usize, 2] {
        for b in [2u32, 3] {
            for l in 1..=6u32 {
                let (lo, hi) = second_moment_bracket(b, s, l);
                let total = l + s as u32 - 1;
                for j in smolyak_rqmc::basis::compositions(total, s, 0, None)? {
                    // First and last shift, first and last shape.
                    let last_k: Vec<u64> = j.iter().map(|&jt| if jt == 0 { 0 } else { checked_pow(b, jt - 1).unwrap() - 1 }).collect();
                    for (k, shape) in [(vec![0; s], 0u32), (last_k, b - 1)] {
                        let i: Vec<u32> = j.iter().map(|&jt| if jt == 0 { 0 } else { shape }).collect();
                        let w = WaveletIndex::new(b, j.clone(), MultiIndex(i), k)?;
                        let est = second_moment_bb(l, &w, s, REPS, 707 + checked)?;
                        let ok = est.mean + 4.0 * est.se >= lo && est.mean - 4.0 * est.se <= hi;
                        if !ok {
                            worst.push(format!("{w} l={l}: {:.4e} not in [{lo:.4e}, {hi:.4e}]", est.mean));
                        }
                        pass &= ok;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(Outcome::new(pass, format!("{checked} (b, s, l, wavelet) cases, violations {worst:?}")))
}

fn random_wavelet(rng: &mut SplitMix64, b: u32, dim: usize, max_total: u32) -> Result<WaveletIndex> {
    let mut j = vec![0u32; dim];
    for _ in 0..rng.gen_range(1..=max_total) {
        j[rng.gen_range(0..dim)] += 1;
    }
    let i = j.iter().map(|&jt| if jt == 0 { 0 } else { rng.gen_range(0..b) }).collect();
    let k = j
        .iter()
        .map(|&jt| if jt == 0 { 0 } else { rng.gen_range(0..checked_pow(b, jt - 1).unwrap()) })
        .collect();
    WaveletIndex::new(b, MultiIndex(j), MultiIndex(i), k)
}

/// A partner differing in `j` or `k`; half the time `j` is kept so the
/// supports overlap.
fn random_partner(rng: &mut SplitMix64, w: &WaveletIndex, max_total: u32) -> Result<WaveletIndex> {
    loop {
        let other = if rng.gen_bool(0.5) {
            let i = w.j.iter().map(|&jt| if jt == 0 { 0 } else { rng.gen_range(0..w.b) }).collect();
            WaveletIndex::new(w.b, w.j.clone(), MultiIndex(i), shift_near(rng, w))?
        } else {
            random_wavelet(rng, w.b, w.dim(), max_total)?
        };
        if other.j != w.j || other.k != w.k {
            return Ok(other);
        }
    }
}

fn shift_near(rng: &mut SplitMix64, w: &WaveletIndex) -> Vec<u64> {
    w.j.iter()
        .zip(&w.k)
        .map(|(&jt, &kt)| {
            if jt <= 1 {
                0
            } else {
                let cap = checked_pow(w.b, jt - 1).unwrap();
                (kt + rng.gen_range(0..2)) % cap
            }
        })
        .collect()
}

fn c08_zero_cross_terms() -> Result<Outcome> {
    const REPS: u64 = 10_000;
    let mut rng = SplitMix64::seed_from_u64(808);
    let mut pass = true;
    let mut max_z: f64 = 0.0;
    let mut configs = 0;
    let mut pairs = 0;
    // Single building blocks: (b, s, l).
    for (b, s, l) in [(2u32, 1usize, 3u32), (2, 2, 3), (3, 2, 2), (3, 3, 2)] {
        configs += 1;
        for _ in 0..20 {
            let w = random_wavelet(&mut rng, b, s, l + s as u32 + 1)?;
            let v = random_partner(&mut rng, &w, l + s as u32 + 1)?;
            let m = cross_moment(CrossTarget::Block { s, levels: (l, l) }, &w, &v, REPS, rng.gen())?;
            pass &= m.mean.abs() <= 4.0 * m.se;
            if m.se > 0.0 {
                max_z = max_z.max(m.mean.abs() / m.se);
            }
            pairs += 1;
        }
    }
    // Full Smolyak realizations: (b, s, d, L).
    for (b, s, d, level) in [(2u32, 1usize, 2usize, 4u32), (3, 1, 2, 3), (2, 2, 2, 3)] {
        configs += 1;
        let plan = SmolyakPlan::new(b, s, d, level)?;
        for _ in 0..20 {
            let w = random_wavelet(&mut rng, b, plan.dim(), level + 2)?;
            let v = random_partner(&mut rng, &w, level + 2)?;
            let m = cross_moment(CrossTarget::Smolyak(&plan), &w, &v, REPS, rng.gen())?;
            pass &= m.mean.abs() <= 4.0 * m.se;
            if m.se > 0.0 {
                max_z = max_z.max(m.mean.abs() / m.se);
            }
            pairs += 1;
        }
    }
    Ok(Outcome::new(
        pass,
        format!("{pairs} pairs over {configs} configurations, max |mean|/SE = {max_z:.2}"),
    ))
}

fn c09_cardinality() -> Result<Outcome> {
    let mut exact = true;
    let mut pass = true;
    let mut bands = Vec::new();
    let mut info = Vec::new();
    for d in 1..=3usize {
        for b in [2u32, 3] {
            let mut ratios = Vec::new();
            for level in d as u32..=d as u32 + 8 {
                // Closed form from the combination terms, counted independently.
                let closed: u64 = combination_terms(level, d)?
                    .iter()
                    .map(|t| (b as u64).pow(t.levels.total() - d as u32))
                    .sum();
                exact &= node_count(level, d, b)? == closed;
                if level <= d as u32 + 4 {
                    exact &= SmolyakPlan::new(b, 1, d, level)?.realize(9, 0)?.len() as u64 == closed;
                }
                ratios.push(closed as f64 / ((b as f64).powi(level as i32) * (level as f64).powi(d as i32 - 1)));
            }
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let band = format!("d={d} b={b}: [{lo:.4}, {hi:.4}] max/min {:.2}", hi / lo);
            if d <= 2 {
                pass &= hi / lo <= 5.0;
                bands.push(band);
            } else {
                info.push(band);
            }
        }
    }
    Ok(Outcome::new(
        exact && pass,
        format!("closed form exact: {exact}; bands {}; informational {}", bands.join(", "), info.join(", ")),
    ))
}

fn c10_one_block_rate() -> Result<Outcome> {
    let start = Instant::now();
    let config = StudyConfig::new(2, 1, 1, 0.75, 3..=9);
    let study = convergence_study(&config)?;
    let slope = study.fits.slope.params[0];
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        (slope + 1.25).abs() <= 0.15 && elapsed <= Duration::from_secs(900),
        format!(
            "slope {slope:.4} (95% CI [{:.4}, {:.4}]), target -1.25 +- 0.15, {elapsed:.2?}",
            study.fits.slope.intervals[0].0, study.fits.slope.intervals[0].1
        ),
    ))
}

fn c11_two_block_rate() -> Result<Outcome> {
    let config = StudyConfig::new(2, 1, 2, 0.75, 3..=9);
    let study = convergence_study(&config)?;
    let band = study.fits.compensated_band;
    let (gamma, ci) = match &study.fits.free_log_exponent {
        Some(fit) => (fit.params[0], fit.intervals[0]),
        None => (f64::NAN, (f64::NAN, f64::NAN)),
    };
    let both = study
        .fits
        .free_both
        .as_ref()
        .map(|f| format!("both-free fit: N-exponent {:.3}, log-exponent {:.3}", f.params[0], f.params[1]))
        .unwrap_or_default();
    Ok(Outcome::new(
        band <= 10.0 && (gamma - 1.75).abs() <= 0.6,
        format!(
            "compensated max/min {band:.3}; free log-exponent {gamma:.3} (95% CI [{:.3}, {:.3}]), target 1.75 +- 0.6; {both}",
            ci.0, ci.1
        ),
    ))
}

fn c12_lower_bound_probe() -> Result<Outcome> {
    let (b, s, d) = (2u32, 1usize, 2usize);
    let mut ratios = Vec::new();
    let mut pass = true;
    let mut details = Vec::new();
    for level in d as u32 + 2..=d as u32 + 6 {
        let plan = SmolyakPlan::new(b, s, d, level)?;
        let probe = lower_bound_probe(&plan, 4096, 1212)?;
        let expected_j = lift_block_resolution(&candidate_worst_index(level, d)?, s);
        pass &= probe.j == expected_j;
        let scale = (level as f64).powi(d as i32 - 1) * (b as f64).powi(-(level as i32));
        let est = probe.estimate;
        // Significantly positive, and above the constructive bound within 4 SE.
        pass &= est.mean > 4.0 * est.se;
        pass &= est.mean + 4.0 * est.se >= probe.bound;
        ratios.push(est.mean / scale);
        details.push(format!("L={level}: {:.4e} +- {:.1e} (bound {:.4e})", est.mean, est.se, probe.bound));
    }
    let c = ratios.iter().cloned().fold(f64::MAX, f64::min);
    pass &= c > 0.0;
    Ok(Outcome::new(pass, format!("fitted c = {c:.4}; {}", details.join(", "))))
}

// ---- Oracles for criterion 13 ----

/// Expand `sum_{|l| <= L, l >= 1} prod (U_{l_n} - U_{l_n - 1})` with
/// `U_0 = 0` and collect the coefficient of every `prod U_{m_n}`.
fn telescoped_terms(level: u32, d: usize) -> BTreeMap<Vec<u32>, i64> {
    let mut acc = BTreeMap::new();
    let mut l = vec![1u32; d];
    loop {
        if l.iter().sum::<u32>() <= level {
            for mask in 0..(1u32 << d) {
                let m: Vec<u32> = (0..d).map(|n| l[n] - ((mask >> n) & 1)).collect();
                if m.iter().all(|&v| v >= 1) {
                    let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                    *acc.entry(m).or_insert(0) += sign;
                }
            }
        }
        let mut n = 0;
        loop {
            if n == d {
                acc.retain(|_, c| *c != 0);
                return acc;
            }
            l[n] += 1;
            if l[n] <= level {
                break;
            }
            l[n] = 1;
            n += 1;
        }
    }
}

#[derive(Clone, Copy)]
struct C(f64, f64);

impl C {
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C) -> C {
        let n = o.0 * o.0 + o.1 * o.1;
        C((self.0 * o.0 + self.1 * o.1) / n, (self.1 * o.0 - self.0 * o.1) / n)
    }
}

/// Monic characteristic polynomial by Faddeev-LeVerrier, highest degree first.
fn characteristic_polynomial(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    };
    let mut coeffs = vec![1.0];
    let mut mk = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let mut next = mul(m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        let am = mul(m, &next);
        coeffs.push(-(0..n).map(|i| am[i][i]).sum::<f64>() / k as f64);
        mk = next;
    }
    coeffs
}

/// All roots of a monic polynomial by Durand-Kerner, then Newton polishing.
fn polynomial_roots(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    let eval = |z: C| coeffs.iter().fold(C(0.0, 0.0), |acc, &c| acc.mul(z).add(C(c, 0.0)));
    let radius = 1.0 + coeffs[1..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut z: Vec<C> = (0..n)
        .map(|k| {
            let t = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            C(radius * t.cos(), radius * t.sin())
        })
        .collect();
    for _ in 0..2000 {
        for i in 0..n {
            let mut denom = C(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom = denom.mul(z[i].sub(z[j]));
                }
            }
            z[i] = z[i].sub(eval(z[i]).div(denom));
        }
    }
    let deriv: Vec<f64> = coeffs[..n].iter().enumerate().map(|(k, c)| c * (n - k) as f64).collect();
    let eval_real = |p: &[f64], x: f64| p.iter().fold(0.0, |acc, c| acc * x + c);
    z.iter()
        .map(|r| {
            let mut x = r.0;
            for _ in 0..5 {
                let dp = eval_real(&deriv, x);
                if dp.abs() > 1e-300 {
                    x -= eval_real(coeffs, x) / dp;
                }
            }
            x
        })
        .collect()
}

fn c13_oracles() -> Result<Outcome> {
    // Combination terms against the telescoped expansion.
    let mut terms_ok = true;
    for d in 1..=4usize {
        for level in d as u32..=d as u32 + 6 {
            let ours: BTreeMap<Vec<u32>, i64> =
                combination_terms(level, d)?.into_iter().map(|t| (t.levels.0, t.coeff)).collect();
            terms_ok &= ours == telescoped_terms(level, d);
        }
    }

    // Spectral radius against characteristic-polynomial roots.
    let mut rng = SplitMix64::seed_from_u64(1313);
    let mut worst_rho: f64 = 0.0;
    for n in 1..=6usize {
        for _ in 0..20 {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-4.0..4.0);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let oracle = polynomial_roots(&characteristic_polynomial(&rows))
                .into_iter()
                .fold(0.0f64, |a, r| a.max(r.abs()));
            let ours = spectral_radius(&Matrix::from_rows(&rows)?)?;
            worst_rho = worst_rho.max((ours - oracle).abs());
        }
    }

    // Admissible level counts against brute force.
    let mut counts_ok = true;
    for d in 1..=4usize {
        for _ in 0..25 {
            let j: Vec<u32> = (0..d).map(|_| rng.gen_range(1..=7)).collect();
            let total: u32 = j.iter().sum();
            for mu in d as u32..=total {
                let brute = brute_force_levels(&j, mu);
                counts_ok &= count_admissible_levels(&MultiIndex(j.clone()), mu)? == brute;
            }
        }
    }

    Ok(Outcome::new(
        terms_ok && worst_rho <= 1e-9 && counts_ok,
        format!("terms match: {terms_ok}; max |rho - oracle| = {worst_rho:.2e}; counts match: {counts_ok}"),
    ))
}

fn brute_force_levels(j: &[u32], mu: u32) -> u64 {
    let mut count = 0;
    let mut l = vec![1u32; j.len()];
    loop {
        if l.iter().sum::<u32>() == mu {
            count += 1;
        }
        let mut n = 0;
        loop {
            if n == j.len() {
                return count;
            }
            l[n] += 1;
            if l[n] <= j[n] {
                break;
            }
            l[n] = 1;
            n += 1;
        }
    }
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 13] = [
        ("net validity", c01_net_validity),
        ("scrambling preserves nets", c02_scrambling_preserves_nets),
        ("scrambled-point uniformity", c03_uniformity),
        ("weight sum", c04_weight_sum),
        ("exactness", c05_exactness),
        ("unbiasedness", c06_unbiasedness),
        ("second-moment bracket", c07_second_moment_bracket),
        ("zero cross-terms", c08_zero_cross_terms),
        ("cardinality", c09_cardinality),
        ("d=1 rate", c10_one_block_rate),
        ("d=2 compensated rate", c11_two_block_rate),
        ("lower-bound probe", c12_lower_bound_probe),
        ("oracle equivalences", c13_oracles),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            n + 1,
            start.elapsed()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
