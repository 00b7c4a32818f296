//! The randomized Smolyak method `A(L, d)`.
//!
//! With `d` blocks of `s` coordinates each (`D = d s`),
//!
//! ```text
//! A(L,d) = sum_{L-d+1 <= |l| <= L} (-1)^(L-|l|) C(d-1, L-|l|) (U^(1)_{l_1} x ... x U^(d)_{l_d})
//! ```
//!
//! where `U^(n)_l` is the equal-weight rule on a scrambled `(0, l-1, s)`-net.
//! One scrambled net is drawn per `(block, level)` and replication and is
//! shared by every term that references it.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{binomial, checked_pow, compositions, mixed_radix, pairwise_sum, MultiIndex};
use crate::error::{Error, Result};
use crate::nets::{default_generator, NetGenerator};
use crate::scrambling::{BlockFactory, BuildingBlock};

/// One tensor-product term of the combination formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombinationTerm {
    pub levels: MultiIndex,
    pub coeff: i64,
}

impl CombinationTerm {
    /// Weight of every node of this term as the exact rational
    /// `coeff / b^exponent`.
    pub fn exact_weight(&self) -> (i64, u32) {
        (self.coeff, self.levels.total() - self.levels.len() as u32)
    }

    pub fn weight(&self, b: u32) -> f64 {
        let (num, exp) = self.exact_weight();
        num as f64 / checked_pow(b, exp).expect("node count fits in u64") as f64
    }

    pub fn node_count(&self, b: u32) -> u64 {
        checked_pow(b, self.levels.total() - self.levels.len() as u32).expect("node count fits in u64")
    }
}

fn check_levels(level: u32, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::param("d", "need at least one block"));
    }
    if (level as usize) < d {
        return Err(Error::param("L", format!("level {level} is below the number of blocks {d}")));
    }
    Ok(())
}

/// Terms `{l : L-d+1 <= |l| <= L}` with coefficients
/// `(-1)^(L-|l|) C(d-1, L-|l|)`, ordered by `|l|` and then lexicographically.
pub fn combination_terms(level: u32, d: usize) -> Result<Vec<CombinationTerm>> {
    check_levels(level, d)?;
    let lowest = (level + 1).saturating_sub(d as u32).max(d as u32);
    let mut terms = Vec::new();
    for total in lowest..=level {
        let gap = (level - total) as u64;
        let magnitude = binomial(d as u64 - 1, gap) as i64;
        let coeff = if gap.is_multiple_of(2) { magnitude } else { -magnitude };
        for levels in compositions(total, d, 1, None)? {
            terms.push(CombinationTerm { levels, coeff });
        }
    }
    Ok(terms)
}

/// `sum_terms b^(|l| - d)`.
pub fn node_count(level: u32, d: usize, b: u32) -> Result<u64> {
    let mut total = 0u64;
    for term in combination_terms(level, d)? {
        let n = checked_pow(b, term.levels.total() - d as u32)
            .ok_or_else(|| Error::param("L", "node count overflows"))?;
        total = total.checked_add(n).ok_or_else(|| Error::param("L", "node count overflows"))?;
    }
    Ok(total)
}

/// The deterministic structure of `A(L, d)` plus the base nets it draws on.
#[derive(Debug, Clone)]
pub struct SmolyakPlan {
    b: u32,
    s: usize,
    d: usize,
    level: u32,
    terms: Vec<CombinationTerm>,
    factory: BlockFactory,
}

impl SmolyakPlan {
    pub fn new(b: u32, s: usize, d: usize, level: u32) -> Result<Self> {
        Self::with_generator(b, s, d, level, default_generator())
    }

    pub fn with_generator(b: u32, s: usize, d: usize, level: u32, generator: Arc<dyn NetGenerator>) -> Result<Self> {
        let terms = combination_terms(level, d)?;
        let factory = BlockFactory::new(b, s, level + 1 - d as u32, generator)?;
        Ok(SmolyakPlan {
            b,
            s,
            d,
            level,
            terms,
            factory,
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `D = d s`.
    pub fn dim(&self) -> usize {
        self.d * self.s
    }

    pub fn terms(&self) -> &[CombinationTerm] {
        &self.terms
    }

    pub fn factory(&self) -> &BlockFactory {
        &self.factory
    }

    /// Highest building-block level referenced, `L - d + 1`.
    pub fn max_block_level(&self) -> u32 {
        self.level + 1 - self.d as u32
    }

    pub fn node_count(&self) -> u64 {
        self.terms.iter().map(|t| t.node_count(self.b)).sum()
    }

    /// Draw every building block of one replication.
    pub fn realize_blocks(&self, master_seed: u64, replication: u64) -> Result<RealizedBlocks> {
        let ids: Vec<u32> = (0..self.d as u32).collect();
        self.realize_blocks_with_ids(master_seed, replication, &ids)
    }

    /// As [`Self::realize_blocks`], but block `n` of this plan uses the keys of
    /// block `ids[n]`. Lets a reduced plan share randomness with a larger one.
    pub fn realize_blocks_with_ids(&self, master_seed: u64, replication: u64, ids: &[u32]) -> Result<RealizedBlocks> {
        if ids.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: ids.len(),
            });
        }
        let blocks = ids
            .iter()
            .map(|&id| {
                (1..=self.max_block_level())
                    .map(|l| self.factory.realize(id, l, master_seed, replication))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RealizedBlocks {
            master_seed,
            replication,
            ids: ids.to_vec(),
            blocks,
        })
    }

    /// Explicit nodes and weights of one replication.
    pub fn realize(&self, master_seed: u64, replication: u64) -> Result<RealizedQuadrature> {
        let blocks = self.realize_blocks(master_seed, replication)?;
        Ok(self.assemble(&blocks))
    }

    pub fn assemble(&self, blocks: &RealizedBlocks) -> RealizedQuadrature {
        let dim = self.dim();
        let total = self.node_count() as usize;
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut term_ranges = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let start = weights.len();
            let parts: Vec<&BuildingBlock> = term
                .levels
                .iter()
                .enumerate()
                .map(|(n, &l)| &blocks.blocks[n][l as usize - 1])
                .collect();
            let sizes: Vec<u64> = parts.iter().map(|p| p.len() as u64).collect();
            let w = term.weight(self.b);
            for choice in mixed_radix(&sizes) {
                for (part, &c) in parts.iter().zip(&choice) {
                    nodes.extend_from_slice(part.node(c as usize));
                }
                weights.push(w);
            }
            term_ranges.push(start..weights.len());
        }
        let used = self
            .terms
            .iter()
            .flat_map(|t| t.levels.iter().enumerate().map(|(n, &l)| (blocks.ids[n], l)))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        RealizedQuadrature {
            b: self.b,
            s: self.s,
            d: self.d,
            level: self.level,
            nodes,
            weights,
            terms: self.terms.clone(),
            term_ranges,
            provenance: Provenance {
                master_seed: blocks.master_seed,
                replication: blocks.replication,
                generator: self.factory.generator_name(),
                blocks: used,
            },
        }
    }

    /// Combine per-block, per-level tables of `U^(n)_l g` into
    /// `sum_terms coeff * (table_1 x ... x table_d)`, where `x` is the
    /// Kronecker product (block 0 most significant).
    pub fn combine(&self, tables: &[Vec<Vec<f64>>]) -> Result<Vec<f64>> {
        if tables.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: tables.len(),
            });
        }
        let width: usize = tables.iter().map(|t| t.first().map_or(0, Vec::len)).product();
        let mut out = vec![0.0; width];
        let mut acc = Vec::with_capacity(width);
        for term in &self.terms {
            acc.clear();
            acc.push(term.coeff as f64);
            for (n, &l) in term.levels.iter().enumerate() {
                let table = tables[n]
                    .get(l as usize - 1)
                    .ok_or_else(|| Error::param("tables", format!("block {n} has no level {l}")))?;
                acc = acc.iter().flat_map(|&a| table.iter().map(move |&v| a * v)).collect();
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += a;
            }
        }
        Ok(out)
    }

    /// `A(L,d) f` for `f(x) = prod_n g_n(x^(n))`, where `x^(n)` is the `n`-th
    /// block of coordinates. Uses one evaluation of `g_n` per block node
    /// instead of one evaluation of `f` per tensor node.
    pub fn apply_separable<G>(&self, blocks: &RealizedBlocks, factors: &[G]) -> Result<f64>
    where
        G: Fn(&[f64]) -> f64,
    {
        if factors.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: factors.len(),
            });
        }
        let tables: Vec<Vec<Vec<f64>>> = blocks
            .blocks
            .iter()
            .zip(factors)
            .map(|(levels, g)| levels.iter().map(|blk| vec![blk.apply(g)]).collect())
            .collect();
        Ok(self.combine(&tables)?[0])
    }
}

/// Which random objects a realization used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub replication: u64,
    pub generator: &'static str,
    /// `(block key id, level)` of every scrambled net drawn.
    pub blocks: Vec<(u32, u32)>,
}

/// The building blocks `U^(n)_l`, `l = 1..=L-d+1`, of one replication.
#[derive(Debug, Clone)]
pub struct RealizedBlocks {
    pub master_seed: u64,
    pub replication: u64,
    pub ids: Vec<u32>,
    /// `blocks[n][l - 1]`.
    pub blocks: Vec<Vec<BuildingBlock>>,
}

impl RealizedBlocks {
    pub fn get(&self, block: usize, level: u32) -> &BuildingBlock {
        &self.blocks[block][level as usize - 1]
    }
}

/// One draw of `A(L, d)` as explicit nodes and (possibly negative) weights.
/// Nodes are stored term by term; coincidences across terms are not merged.
#[derive(Debug, Clone, Serialize)]
pub struct RealizedQuadrature {
    pub b: u32,
    pub s: usize,
    pub d: usize,
    pub level: u32,
    /// Row-major, `D` coordinates per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub terms: Vec<CombinationTerm>,
    pub term_ranges: Vec<std::ops::Range<usize>>,
    pub provenance: Provenance,
}

impl RealizedQuadrature {
    pub fn dim(&self) -> usize {
        self.d * self.s
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    fn finish(&self, values: Vec<f64>) -> Result<f64> {
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node,
                point: self.node(node).to_vec(),
                value: values[node],
            });
        }
        let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        Ok(pairwise_sum(&terms))
    }

    /// `sum_nu w_nu f(x_nu)`.
    pub fn apply(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let values = (0..self.len()).map(|i| f(self.node(i))).collect();
        self.finish(values)
    }

    /// As [`Self::apply`], evaluating `f` concurrently. The result is
    /// bit-identical to the serial one.
    pub fn apply_parallel(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
        let values = (0..self.len()).into_par_iter().map(|i| f(self.node(i))).collect();
        self.finish(values)
    }

    /// Fallible integrand variant of [`Self::apply`].
    pub fn try_apply(&self, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
        let values = (0..self.len()).map(|i| f(self.node(i))).collect::<Result<Vec<_>>>()?;
        self.finish(values)
    }
}

/// Pathwise check of the dimension-reduction identity. For a product
/// integrand `g_n` that is constant 1 on the blocks not listed in `active`,
/// returns per replication `(A(L,d) f, A(L-t, d-t) f')`, where `f'` keeps
/// only the active factors and the reduced method reuses the active blocks'
/// scramblings. The two entries agree up to rounding.
pub fn dimension_reduction_check<G>(
    plan: &SmolyakPlan,
    factors: &[G],
    active: &[usize],
    master_seed: u64,
    reps: u64,
) -> Result<Vec<(f64, f64)>>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let t = plan.d() - active.len();
    if t == 0 {
        return Err(Error::Precondition("every block is active, nothing to reduce".into()));
    }
    if active.is_empty() {
        return Err(Error::Precondition("no active block; the integrand is constant".into()));
    }
    if factors.len() != plan.d() || active.iter().any(|&n| n >= plan.d()) {
        return Err(Error::DimensionMismatch {
            expected: plan.d(),
            actual: factors.len(),
        });
    }
    let reduced = SmolyakPlan::with_generator(
        plan.b(),
        plan.s(),
        active.len(),
        plan.level() - t as u32,
        plan.factory().generator(),
    )?;
    let ids: Vec<u32> = active.iter().map(|&n| n as u32).collect();
    let reduced_factors: Vec<&G> = active.iter().map(|&n| &factors[n]).collect();
    crate::stats::replicate(reps, |r| {
        let full_blocks = plan.realize_blocks(master_seed, r)?;
        let full = plan.apply_separable(&full_blocks, factors)?;
        let red_blocks = reduced.realize_blocks_with_ids(master_seed, r, &ids)?;
        let part = reduced.apply_separable(&red_blocks, &reduced_factors)?;
        Ok((full, part))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scrambling::realize_building_block;
    use crate::wavelets::{indices_of_resolution, psi_eval_multi, Resolution};
    use std::collections::BTreeMap;

    /// Expand `sum_{l in N^d, |l| <= L} (x)_n (U_{l_n} - U_{l_n - 1})` with
    /// `U_0 = 0` into coefficients of tensor products of `U`'s.
    fn telescoped(level: u32, d: usize) -> BTreeMap<Vec<u32>, i64> {
        let mut out = BTreeMap::new();
        for total in d as u32..=level {
            for l in compositions(total, d, 1, None).unwrap() {
                // Each factor contributes U_{l_n} (+1) or U_{l_n - 1} (-1).
                for mask in 0u32..(1 << d) {
                    let mut levels = Vec::with_capacity(d);
                    let mut sign = 1i64;
                    for n in 0..d {
                        if mask >> n & 1 == 1 {
                            levels.push(l[n] - 1);
                            sign = -sign;
                        } else {
                            levels.push(l[n]);
                        }
                    }
                    if levels.contains(&0) {
                        continue;
                    }
                    *out.entry(levels).or_insert(0) += sign;
                }
            }
        }
        out.retain(|_, c| *c != 0);
        out
    }

    #[test]
    fn term_examples() {
        let t = combination_terms(3, 1).unwrap();
        assert_eq!(t, vec![CombinationTerm { levels: MultiIndex(vec![3]), coeff: 1 }]);
        let t = combination_terms(3, 2).unwrap();
        let as_pairs: Vec<(Vec<u32>, i64)> = t.iter().map(|t| (t.levels.0.clone(), t.coeff)).collect();
        assert_eq!(as_pairs, vec![(vec![1, 1], -1), (vec![1, 2], 1), (vec![2, 1], 1)]);
        assert!(combination_terms(1, 2).is_err());
    }

    #[test]
    fn terms_match_telescoped_expansion() {
        for d in 1..=4usize {
            for level in d as u32..=d as u32 + 6 {
                let ours: BTreeMap<Vec<u32>, i64> = combination_terms(level, d)
                    .unwrap()
                    .into_iter()
                    .map(|t| (t.levels.0, t.coeff))
                    .collect();
                assert_eq!(ours, telescoped(level, d), "L={level} d={d}");
            }
        }
    }

    #[test]
    fn alternative_weight_sum_formula() {
        for d in 1..=6u64 {
            for level in d..=d + 8 {
                let sum: i64 = (0..=(d - 1).min(level - d))
                    .map(|nu| {
                        let v = (binomial(d - 1, nu) * binomial(level - nu - 1, d - 1)) as i64;
                        if nu % 2 == 0 {
                            v
                        } else {
                            -v
                        }
                    })
                    .sum();
                assert_eq!(sum, 1);
                let coeff_sum: i64 = combination_terms(level as u32, d as usize).unwrap().iter().map(|t| t.coeff).sum();
                assert_eq!(coeff_sum, 1);
            }
        }
    }

    #[test]
    fn node_count_examples() {
        assert_eq!(node_count(5, 1, 3).unwrap(), 81);
        assert_eq!(node_count(3, 2, 2).unwrap(), 5);
        assert_eq!(node_count(8, 2, 2).unwrap(), 640);
        let mut ratios = Vec::new();
        for level in 2..=10u32 {
            let n = node_count(level, 2, 2).unwrap() as f64;
            ratios.push(n / (2f64.powi(level as i32) * level as f64));
        }
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi / lo < 5.0);
    }

    #[test]
    fn small_realizations() {
        let plan = SmolyakPlan::new(2, 1, 2, 2).unwrap();
        let q = plan.realize(1, 0).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights, vec![1.0]);

        let plan = SmolyakPlan::new(2, 1, 2, 3).unwrap();
        let q = plan.realize(1, 0).unwrap();
        assert_eq!(q.len(), 5);
        assert!((q.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_block_is_the_building_block() {
        for (b, s) in [(2, 1), (3, 2), (5, 3)] {
            let plan = SmolyakPlan::new(b, s, 1, 4).unwrap();
            let q = plan.realize(99, 7).unwrap();
            let u = realize_building_block(0, 4, s, b, 99, 7).unwrap();
            assert_eq!(q.nodes, u.nodes);
            assert!(q.weights.iter().all(|&w| w == u.weight));
        }
    }

    #[test]
    fn negative_weights_appear() {
        let plan = SmolyakPlan::new(2, 1, 2, 3).unwrap();
        let q = plan.realize(5, 0).unwrap();
        assert!(q.weights.iter().any(|&w| w < 0.0));
    }

    #[test]
    fn realized_cardinality_matches_closed_form() {
        for (b, s, d, level) in [(2, 1, 2, 5), (3, 2, 2, 4), (2, 2, 3, 5)] {
            let plan = SmolyakPlan::new(b, s, d, level).unwrap();
            let expected = node_count(level, d, b).unwrap() as usize;
            for rep in 0..100 {
                let q = plan.realize(3, rep).unwrap();
                assert_eq!(q.len(), expected);
                assert_eq!(q.nodes.len(), expected * plan.dim());
            }
        }
    }

    #[test]
    fn exact_on_low_resolution_wavelets() {
        for (d, level) in [(1, 4), (2, 5), (3, 5)] {
            let plan = SmolyakPlan::new(2, 1, d, level).unwrap();
            let q = plan.realize(11, 0).unwrap();
            for w in indices_of_resolution(2, d, Resolution::AtMost(level - d as u32)).unwrap() {
                let expected = crate::wavelets::integral_of_wavelet(&w);
                let got = q.try_apply(|x| psi_eval_multi(&w, x)).unwrap();
                assert!((got - expected).abs() < 1e-10, "{w}: {got}");
            }
        }
    }

    #[test]
    fn separable_and_node_paths_agree() {
        let plan = SmolyakPlan::new(3, 2, 2, 5).unwrap();
        let g0 = |x: &[f64]| 1.0 + x[0] * x[1];
        let g1 = |x: &[f64]| (x[0] - 0.3).abs() + x[1];
        for rep in 0..5 {
            let blocks = plan.realize_blocks(8, rep).unwrap();
            let q = plan.assemble(&blocks);
            let direct = q.apply(|x| g0(&x[0..2]) * g1(&x[2..4])).unwrap();
            let factors: [&dyn Fn(&[f64]) -> f64; 2] = [&g0, &g1];
            let fast = plan.apply_separable(&blocks, &factors).unwrap();
            assert!((direct - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_apply_is_bit_identical() {
        let plan = SmolyakPlan::new(2, 2, 2, 7).unwrap();
        let q = plan.realize(4, 2).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| (3.0 * v).sin()).product::<f64>();
        assert_eq!(q.apply(f).unwrap(), q.apply_parallel(f).unwrap());
    }

    #[test]
    fn non_finite_values_are_reported() {
        let plan = SmolyakPlan::new(2, 1, 2, 4).unwrap();
        let q = plan.realize(4, 2).unwrap();
        let err = q.apply(|x| if x[0] < 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn dimension_reduction_is_pathwise() {
        let plan = SmolyakPlan::new(2, 1, 3, 6).unwrap();
        let psi = |x: &[f64]| crate::wavelets::psi_eval_1d(3, 1, 2, x[0], 2).unwrap();
        let one = |_: &[f64]| 1.0;
        let factors: [&(dyn Fn(&[f64]) -> f64 + Sync); 3] = [&one, &psi, &one];
        let pairs = dimension_reduction_check(&plan, &factors, &[1], 21, 200).unwrap();
        for (a, b) in pairs {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(dimension_reduction_check(&plan, &factors, &[0, 1, 2], 21, 2).is_err());
    }
}
