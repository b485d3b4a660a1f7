//! Ground-truth oracle and workload generators.
//!
//! Generators are pure functions of `(distribution, n, seed)`. Work is cut
//! into fixed-size chunks, each with its own SplitMix64 stream seeded from
//! `(seed, chunk)`, so the output does not depend on the thread count.

use std::collections::BTreeSet;
use std::str::FromStr;

use batch_ist::{Op, OpKind};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenError {
    #[error("invalid key range [{lo}, {hi}]")]
    InvalidRange { lo: i64, hi: i64 },
    #[error("cannot draw {n} distinct keys from a range of {span}")]
    RangeTooSmall { n: u64, span: u64 },
}

/// Key distributions over an inclusive range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    /// Every key of the range is included independently with probability
    /// `n / span`; output is sorted and distinct, with expected length `n`.
    UniformSubset { lo: i64, hi: i64 },
    /// `n` independent uniform draws, with repetition, in draw order.
    Uniform { lo: i64, hi: i64 },
    /// `n` draws concentrated in a few narrow clusters; not smooth.
    Clustered { lo: i64, hi: i64, clusters: u32 },
}

impl Distribution {
    pub fn range(&self) -> (i64, i64) {
        match *self {
            Distribution::UniformSubset { lo, hi }
            | Distribution::Uniform { lo, hi }
            | Distribution::Clustered { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::UniformSubset { .. } => "uniform-subset",
            Distribution::Uniform { .. } => "uniform",
            Distribution::Clustered { .. } => "clustered",
        }
    }

    /// Same shape over a different range.
    pub fn with_range(self, lo: i64, hi: i64) -> Self {
        match self {
            Distribution::UniformSubset { .. } => Distribution::UniformSubset { lo, hi },
            Distribution::Uniform { .. } => Distribution::Uniform { lo, hi },
            Distribution::Clustered { clusters, .. } => {
                Distribution::Clustered { lo, hi, clusters }
            }
        }
    }
}

/// Distribution family as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistKind {
    UniformSubset,
    Uniform,
    Clustered,
}

impl DistKind {
    pub fn over(self, lo: i64, hi: i64) -> Distribution {
        match self {
            DistKind::UniformSubset => Distribution::UniformSubset { lo, hi },
            DistKind::Uniform => Distribution::Uniform { lo, hi },
            DistKind::Clustered => Distribution::Clustered {
                lo,
                hi,
                clusters: 16,
            },
        }
    }
}

impl FromStr for DistKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-subset" => Ok(DistKind::UniformSubset),
            "uniform" => Ok(DistKind::Uniform),
            "clustered" => Ok(DistKind::Clustered),
            _ => Err(format!("unknown distribution {s:?}")),
        }
    }
}

/// Derives an independent stream seed for `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = SplitMix64::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.next_u64()
}

fn stream(seed: u64, chunk: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive_seed(seed, chunk))
}

/// Uniform draw from `[0, span)`; `span == 0` means the full 2^64 range.
fn below(rng: &mut SplitMix64, span: u64) -> u64 {
    let x = rng.next_u64();
    if span == 0 {
        x
    } else {
        ((x as u128 * span as u128) >> 64) as u64
    }
}

fn span_of(lo: i64, hi: i64) -> Result<u64, GenError> {
    if lo > hi {
        return Err(GenError::InvalidRange { lo, hi });
    }
    // Wraps to 0 for the full i64 range.
    Ok((hi as i128 - lo as i128 + 1) as u64)
}

/// Generates keys; see [`Distribution`] for the meaning of `n`.
pub fn gen_keys(dist: Distribution, n: u64, seed: u64) -> Result<Vec<i64>, GenError> {
    let (lo, hi) = dist.range();
    let span = span_of(lo, hi)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    match dist {
        Distribution::UniformSubset { .. } => {
            if span == 0 {
                // Enumerating all 2^64 candidates is not an option.
                return Err(GenError::InvalidRange { lo, hi });
            }
            if n > span {
                return Err(GenError::RangeTooSmall { n, span });
            }
            let p = n as f64 / span as f64;
            let threshold = if p >= 1.0 {
                u64::MAX
            } else {
                (p * 2f64.powi(64)) as u64
            };
            let len = span;
            let chunks = len.div_ceil(CHUNK);
            let parts: Vec<Vec<i64>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream(seed, c);
                    let start = c * CHUNK;
                    let end = (start + CHUNK).min(len);
                    (start..end)
                        .filter(|_| p >= 1.0 || rng.next_u64() < threshold)
                        .map(|off| (lo as i128 + off as i128) as i64)
                        .collect()
                })
                .collect();
            Ok(parts.concat())
        }
        Distribution::Uniform { .. } => Ok(draw(n, seed, |rng| {
            (lo as i128 + below(rng, span) as i128) as i64
        })),
        Distribution::Clustered { clusters, .. } => {
            let clusters = clusters.max(1) as u64;
            let mut crng = stream(seed, u64::MAX);
            let centers: Vec<i64> = (0..clusters)
                .map(|_| (lo as i128 + below(&mut crng, span) as i128) as i64)
                .collect();
            // Cluster width: a millionth of the range, at least 64 keys.
            let width = if span == 0 {
                1u64 << 44
            } else {
                (span / 1_000_000).max(64)
            };
            Ok(draw(n, seed, |rng| {
                let c = centers[below(rng, clusters) as usize] as i128;
                let off = below(rng, 2 * width) as i128 - width as i128;
                (c + off).clamp(lo as i128, hi as i128) as i64
            }))
        }
    }
}

fn draw(n: u64, seed: u64, f: impl Fn(&mut SplitMix64) -> i64 + Sync) -> Vec<i64> {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<i64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}

/// Relative weights of operation kinds in generated scripts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mix {
    pub insert: u32,
    pub delete: u32,
    pub contains: u32,
}

impl Mix {
    pub const INSERTS: Mix = Mix {
        insert: 1,
        delete: 0,
        contains: 0,
    };
    pub const BALANCED: Mix = Mix {
        insert: 1,
        delete: 1,
        contains: 1,
    };
    /// Mostly deletions, to pile up tombstones.
    pub const TOMBSTONE_HEAVY: Mix = Mix {
        insert: 1,
        delete: 4,
        contains: 1,
    };
}

/// `n` operations with keys drawn from `dist` (a subset distribution is
/// treated as uniform draws over its range).
pub fn gen_ops(dist: Distribution, n: u64, mix: Mix, seed: u64) -> Result<Vec<Op<i64>>, GenError> {
    let key_dist = match dist {
        Distribution::UniformSubset { lo, hi } => Distribution::Uniform { lo, hi },
        d => d,
    };
    let keys = gen_keys(key_dist, n, seed)?;
    let total = (mix.insert + mix.delete + mix.contains).max(1) as u64;
    let kseed = derive_seed(seed, 0xA11CE);
    Ok(keys
        .par_iter()
        .enumerate()
        .map(|(i, &key)| {
            let r = derive_seed(kseed, i as u64) % total;
            let kind = if r < mix.insert as u64 {
                OpKind::Insert
            } else if r < (mix.insert + mix.delete) as u64 {
                OpKind::Delete
            } else {
                OpKind::Contains
            };
            Op { key, kind }
        })
        .collect())
}

/// Replays `ops` strictly in order against a sorted set.
pub fn oracle_apply<K: Ord + Copy>(
    mut state: BTreeSet<K>,
    ops: &[Op<K>],
) -> (BTreeSet<K>, Vec<bool>) {
    let out = oracle_apply_in_place(&mut state, ops);
    (state, out)
}

pub fn oracle_apply_in_place<K: Ord + Copy>(state: &mut BTreeSet<K>, ops: &[Op<K>]) -> Vec<bool> {
    ops.iter()
        .map(|op| match op.kind {
            OpKind::Insert => state.insert(op.key),
            OpKind::Delete => state.remove(&op.key),
            OpKind::Contains => state.contains(&op.key),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let (_, out) = oracle_apply(BTreeSet::new(), &[Op::contains(1i64)]);
        assert_eq!(out, [false]);
        let (s, out) = oracle_apply(BTreeSet::new(), &[Op::insert(1i64), Op::insert(1)]);
        assert_eq!(out, [true, false]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn generators_are_deterministic() {
        for dist in [
            Distribution::UniformSubset {
                lo: 1,
                hi: 1_000_000,
            },
            Distribution::Uniform { lo: -50, hi: 50 },
            Distribution::Clustered {
                lo: 0,
                hi: 1 << 40,
                clusters: 4,
            },
        ] {
            let a = gen_keys(dist, 200_000, 42).unwrap();
            let b = gen_keys(dist, 200_000, 42).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, gen_keys(dist, 200_000, 43).unwrap());
            assert!(gen_keys(dist, 0, 1).unwrap().is_empty());
        }
    }

    #[test]
    fn generator_independent_of_thread_count() {
        let d = Distribution::Uniform { lo: 0, hi: 1 << 50 };
        let pool = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
        };
        let a = pool(1).install(|| gen_keys(d, 300_000, 9).unwrap());
        let b = pool(3).install(|| gen_keys(d, 300_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn subset_is_sorted_distinct_in_range() {
        let keys = gen_keys(
            Distribution::UniformSubset {
                lo: 1,
                hi: 2_000_000,
            },
            1_000_000,
            7,
        )
        .unwrap();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(keys[0] >= 1 && *keys.last().unwrap() <= 2_000_000);
        // Binomial(2e6, 1/2): sd ~ 707.
        assert!(
            (keys.len() as i64 - 1_000_000).abs() < 5_000,
            "{}",
            keys.len()
        );
    }

    #[test]
    fn range_errors() {
        let bad = Distribution::Uniform { lo: 5, hi: 4 };
        assert_eq!(
            gen_keys(bad, 3, 0),
            Err(GenError::InvalidRange { lo: 5, hi: 4 })
        );
        let small = Distribution::UniformSubset { lo: 0, hi: 9 };
        assert_eq!(
            gen_keys(small, 11, 0),
            Err(GenError::RangeTooSmall { n: 11, span: 10 })
        );
    }

    #[test]
    fn full_range_draws() {
        let d = Distribution::Uniform {
            lo: i64::MIN,
            hi: i64::MAX,
        };
        assert_eq!(gen_keys(d, 1000, 1).unwrap().len(), 1000);
    }

    #[test]
    fn clustered_stays_in_range() {
        let d = Distribution::Clustered {
            lo: 10,
            hi: 1000,
            clusters: 3,
        };
        let keys = gen_keys(d, 10_000, 5).unwrap();
        assert!(keys.iter().all(|&k| (10..=1000).contains(&k)));
    }

    #[test]
    fn mix_respects_weights() {
        let ops = gen_ops(
            Distribution::Uniform { lo: 0, hi: 100 },
            10_000,
            Mix::INSERTS,
            3,
        )
        .unwrap();
        assert!(ops.iter().all(|o| o.kind == OpKind::Insert));
        let ops = gen_ops(
            Distribution::Uniform { lo: 0, hi: 100 },
            60_000,
            Mix::TOMBSTONE_HEAVY,
            3,
        )
        .unwrap();
        let deletes = ops.iter().filter(|o| o.kind == OpKind::Delete).count();
        assert!((deletes as f64 / 60_000.0 - 4.0 / 6.0).abs() < 0.02);
    }
}
