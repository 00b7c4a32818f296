//! Random `b`-ary scramblings of finite depth and the equal-weight
//! building-block quadratures `U_l`.
//!
//! A scrambling of depth `l` maps the first `l` digits of a coordinate
//! through a tree of permutations, `y_r = pi_{x_1..x_{r-1}}(x_r)`, zeroes
//! every deeper digit and adds an independent uniform remainder scaled by
//! `b^-l`. The permutation tree is never stored: the permutation at a node
//! is derived on demand from a keyed hash of `(key, prefix)`, which gives
//! the same joint distribution as drawing the whole tree up front.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::basis::{checked_pow, pack_digits, DigitPoint};
use crate::error::{Error, Result};
use crate::nets::{default_generator, NetGenerator, NetParams, PointSet};

const TAG_PERMUTATION: u64 = 0x7065_726d_7574_6521;
const TAG_REMAINDER: u64 = 0x7265_6d61_696e_6465;

/// One step of a keyed hash chain over 64-bit words.
pub(crate) fn mix(h: u64, word: u64) -> u64 {
    let inner = SplitMix64::seed_from_u64(word).next_u64();
    SplitMix64::seed_from_u64(h.rotate_left(23) ^ inner).next_u64()
}

pub(crate) fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x5eed_5eed_5eed_5eed, |h, &w| mix(h, w))
}

/// Seed material for one independent scrambling of one coordinate.
///
/// Distinct `(master_seed, replication, block, level, coordinate)` tuples
/// give independent permutation trees and remainder streams; equal keys give
/// bit-identical scramblings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScramblerKey {
    pub master_seed: u64,
    pub replication: u64,
    pub block: u32,
    pub level: u32,
    pub coordinate: u32,
    /// Debug mode: every permutation is the identity.
    #[serde(default)]
    pub identity: bool,
}

impl ScramblerKey {
    pub fn new(master_seed: u64, replication: u64, block: u32, level: u32, coordinate: u32) -> Self {
        ScramblerKey {
            master_seed,
            replication,
            block,
            level,
            coordinate,
            identity: false,
        }
    }

    pub fn identity() -> Self {
        ScramblerKey {
            identity: true,
            ..Self::new(0, 0, 0, 0, 0)
        }
    }

    pub fn with_coordinate(self, coordinate: u32) -> Self {
        ScramblerKey { coordinate, ..self }
    }

    fn digest(&self) -> u64 {
        hash_words(&[
            self.master_seed,
            self.replication,
            self.block as u64,
            self.level as u64,
            self.coordinate as u64,
        ])
    }
}

fn binary_flip(seed: u64) -> u64 {
    SplitMix64::seed_from_u64(seed).next_u64() >> 63
}

fn permutation_from_seed(seed: u64, b: u32) -> Vec<u32> {
    if b == 2 {
        // A uniform permutation of {0, 1} is a fair coin flip.
        return if binary_flip(seed) == 1 { vec![1, 0] } else { vec![0, 1] };
    }
    let mut perm: Vec<u32> = (0..b).collect();
    perm.shuffle(&mut SplitMix64::seed_from_u64(seed));
    perm
}

fn prefix_seed(digest: u64, prefix_len: u32, prefix_value: u64) -> u64 {
    mix(mix(mix(digest, TAG_PERMUTATION), prefix_len as u64), prefix_value)
}

/// The permutation of `{0..b-1}` applied to the digit following `prefix`.
pub fn permutation_for(prefix: &[u32], key: &ScramblerKey, b: u32) -> Vec<u32> {
    if key.identity {
        return (0..b).collect();
    }
    let seed = prefix_seed(key.digest(), prefix.len() as u32, pack_digits(prefix, b));
    permutation_from_seed(seed, b)
}

/// Remainder `xi` in `[0,1)` for point `index` under `key`.
pub fn remainder_for(key: &ScramblerKey, index: u64) -> f64 {
    let seed = mix(mix(key.digest(), TAG_REMAINDER), index);
    SplitMix64::seed_from_u64(seed).gen::<f64>()
}

/// Scrambled value, at the given depth, of the integer digit string `q`
/// stored with `stored_depth` digits.
fn scramble_cell(q: u64, stored_depth: u32, depth: u32, b: u32, key: &ScramblerKey, digest: u64) -> u64 {
    let bb = b as u64;
    let mut prefix = 0u64;
    let mut out = 0u64;
    for r in 0..depth {
        let digit = (q / bb.pow(stored_depth - 1 - r)) % bb;
        let image = if key.identity {
            digit
        } else if b == 2 {
            digit ^ binary_flip(prefix_seed(digest, r, prefix))
        } else {
            permutation_from_seed(prefix_seed(digest, r, prefix), b)[digit as usize] as u64
        };
        out = out * bb + image;
        prefix = prefix * bb + digit;
    }
    out
}

/// Scramble one point: per coordinate `t`, the first `depth` digits go
/// through the permutation tree of `keys[t]`, and `remainders[t]` fills in
/// below digit `depth`.
pub fn scramble_point(p: &DigitPoint, depth: u32, keys: &[ScramblerKey], remainders: &[f64]) -> Result<DigitPoint> {
    if depth > p.depth {
        return Err(Error::param(
            "depth",
            format!("scrambling depth {depth} exceeds the {} stored digits", p.depth),
        ));
    }
    if keys.len() != p.dim() || remainders.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: keys.len().min(remainders.len()),
        });
    }
    let cells = p
        .cells
        .iter()
        .zip(keys)
        .map(|(&q, key)| scramble_cell(q, p.depth, depth, p.b, key, key.digest()))
        .collect();
    Ok(DigitPoint {
        b: p.b,
        depth,
        cells,
        remainder: remainders.to_vec(),
    })
}

/// Image of a net under independent coordinate scramblings.
#[derive(Debug, Clone)]
pub struct ScrambledNet {
    pub source: NetParams,
    pub depth: u32,
    pub keys: Vec<ScramblerKey>,
    pub points: Vec<DigitPoint>,
}

impl ScrambledNet {
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(DigitPoint::values).collect()
    }
}

/// Scramble every point of `net` to `depth` digits. Coordinate `t` uses
/// `base_key.with_coordinate(t)`; point `i` draws its remainders from the
/// keyed stream at index `i`. With `zero_remainder` all remainders are 0.
pub fn scramble_net(net: &PointSet, depth: u32, base_key: ScramblerKey, zero_remainder: bool) -> Result<ScrambledNet> {
    let s = net.params.s;
    let keys: Vec<ScramblerKey> = (0..s as u32).map(|t| base_key.with_coordinate(t)).collect();
    let digests: Vec<u64> = keys.iter().map(ScramblerKey::digest).collect();
    let mut points = Vec::with_capacity(net.len());
    for (i, p) in net.points.iter().enumerate() {
        let p = if depth > p.depth { p.extend_depth(depth)? } else { p.clone() };
        let mut cells = Vec::with_capacity(s);
        let mut remainder = Vec::with_capacity(s);
        for t in 0..s {
            cells.push(scramble_cell(p.cells[t], p.depth, depth, p.b, &keys[t], digests[t]));
            remainder.push(if zero_remainder { 0.0 } else { remainder_for(&keys[t], i as u64) });
        }
        points.push(DigitPoint {
            b: p.b,
            depth,
            cells,
            remainder,
        });
    }
    Ok(ScrambledNet {
        source: net.params,
        depth,
        keys,
        points,
    })
}

/// One realization of `U_l`: equal weights `b^-(l-1)` on a scrambled
/// `(0, l-1, s)`-net.
#[derive(Debug, Clone)]
pub struct BuildingBlock {
    pub block: u32,
    pub level: u32,
    pub s: usize,
    pub b: u32,
    /// Row-major `count x s`.
    pub nodes: Vec<f64>,
    pub weight: f64,
}

impl BuildingBlock {
    pub fn len(&self) -> usize {
        self.nodes.len() / self.s
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.s..(i + 1) * self.s]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.s)
    }

    /// `U_l f`.
    pub fn apply(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let values: Vec<f64> = self.nodes().map(f).collect();
        self.weight * crate::basis::pairwise_sum(&values)
    }
}

/// Produces building blocks for a fixed `(b, s)`, caching the deterministic
/// base nets per level.
#[derive(Clone)]
pub struct BlockFactory {
    b: u32,
    s: usize,
    generator: Arc<dyn NetGenerator>,
    nets: Vec<Arc<PointSet>>,
}

impl std::fmt::Debug for BlockFactory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockFactory")
            .field("b", &self.b)
            .field("s", &self.s)
            .field("generator", &self.generator.name())
            .field("max_level", &self.max_level())
            .finish()
    }
}

impl BlockFactory {
    /// Prepare nets for levels `1..=max_level`.
    pub fn new(b: u32, s: usize, max_level: u32, generator: Arc<dyn NetGenerator>) -> Result<Self> {
        if max_level == 0 {
            return Err(Error::param("max_level", "must be >= 1"));
        }
        let mut nets = Vec::with_capacity(max_level as usize);
        for l in 1..=max_level {
            let params = NetParams::new(b, l - 1, s)?;
            generator.supports(&params)?;
            nets.push(Arc::new(generator.generate(params)?));
        }
        Ok(BlockFactory { b, s, generator, nets })
    }

    pub fn with_default_generator(b: u32, s: usize, max_level: u32) -> Result<Self> {
        Self::new(b, s, max_level, default_generator())
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn max_level(&self) -> u32 {
        self.nets.len() as u32
    }

    pub fn generator(&self) -> Arc<dyn NetGenerator> {
        Arc::clone(&self.generator)
    }

    pub fn generator_name(&self) -> &'static str {
        self.generator.name()
    }

    pub fn base_net(&self, level: u32) -> Result<&PointSet> {
        if level == 0 || level > self.max_level() {
            return Err(Error::param("level", format!("{level} outside 1..={}", self.max_level())));
        }
        Ok(&self.nets[level as usize - 1])
    }

    pub fn scrambled_net(&self, block: u32, level: u32, master_seed: u64, replication: u64) -> Result<ScrambledNet> {
        let net = self.base_net(level)?;
        let key = ScramblerKey::new(master_seed, replication, block, level, 0);
        scramble_net(net, level - 1, key, false)
    }

    pub fn realize(&self, block: u32, level: u32, master_seed: u64, replication: u64) -> Result<BuildingBlock> {
        let scrambled = self.scrambled_net(block, level, master_seed, replication)?;
        let mut nodes = Vec::with_capacity(scrambled.points.len() * self.s);
        for p in &scrambled.points {
            for t in 0..self.s {
                nodes.push(p.value(t));
            }
        }
        let count = checked_pow(self.b, level - 1).expect("validated level") as f64;
        Ok(BuildingBlock {
            block,
            level,
            s: self.s,
            b: self.b,
            nodes,
            weight: 1.0 / count,
        })
    }
}

/// Realize `U_l` for block `n` with the default net construction.
pub fn realize_building_block(
    block: u32,
    level: u32,
    s: usize,
    b: u32,
    master_seed: u64,
    replication: u64,
) -> Result<BuildingBlock> {
    if level == 0 {
        return Err(Error::param("level", "U_0 is the null quadrature and has no nodes"));
    }
    BlockFactory::with_default_generator(b, s, level)?.realize(block, level, master_seed, replication)
}
