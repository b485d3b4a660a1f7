//! Property checks shared by `selftest` and the acceptance suite.

use std::collections::BTreeSet;

use anyhow::{bail, ensure, Context, Result};
use batch_ist::{prim, Config, Op, OpKind, Tree};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::harness::{
    derive_seed, gen_keys, gen_ops, oracle_apply_in_place, DistKind, Distribution, Mix,
};

#[derive(Clone, Debug)]
pub enum Step {
    Single(Op<i64>),
    Batch(Vec<Op<i64>>),
}

/// A random operation script: a prefill batch followed by single operations
/// and batches, `size` operations in total.
#[derive(Clone, Debug)]
pub struct Script {
    pub dist: Distribution,
    pub mix: Mix,
    pub steps: Vec<Step>,
}

pub fn gen_script(seed: u64, size: u64, kind: DistKind, mix: Mix) -> Result<Script> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let hi = 16 + rng.next_u64() % (4 * size + 1);
    let dist = kind.over(0, hi as i64);
    let prefill_n = rng.next_u64() % (size / 2 + 1);
    let prefill = gen_keys(dist, prefill_n.min(hi), derive_seed(seed, 1))?;
    let mut steps = vec![Step::Batch(
        prefill.iter().map(|&k| Op::insert(k)).collect(),
    )];
    let mut left = size.saturating_sub(prefill.len() as u64);
    let mut stream = 2;
    while left > 0 {
        stream += 1;
        let single = rng.next_u64() % 3 == 0;
        let n = if single {
            1
        } else {
            1 + rng.next_u64() % left.min(size / 4 + 1)
        };
        let ops = gen_ops(dist, n, mix, derive_seed(seed, stream))?;
        steps.push(if single {
            Step::Single(ops[0])
        } else {
            Step::Batch(ops)
        });
        left -= n;
    }
    Ok(Script { dist, mix, steps })
}

/// Runs `script` against the tree and the sorted-set oracle, comparing every
/// outcome, the structure after every batch, and the final contents.
pub fn check_script(script: &Script, config: Config) -> Result<()> {
    let mut tree = Tree::with_config(config)?;
    let mut set = BTreeSet::new();
    for (i, step) in script.steps.iter().enumerate() {
        match step {
            Step::Single(op) => {
                let got = match op.kind {
                    OpKind::Insert => tree.insert(op.key),
                    OpKind::Delete => tree.remove(op.key),
                    OpKind::Contains => tree.contains(op.key),
                };
                let want = oracle_apply_in_place(&mut set, std::slice::from_ref(op))[0];
                ensure!(
                    got == want,
                    "step {i}: {op:?} returned {got}, oracle {want}"
                );
            }
            Step::Batch(ops) => {
                let got = tree.apply(ops).outcomes;
                let want = oracle_apply_in_place(&mut set, ops);
                if let Some(j) = (0..ops.len()).find(|&j| got[j] != want[j]) {
                    bail!(
                        "step {i}: batch op {j} {:?} returned {}, oracle {}",
                        ops[j],
                        got[j],
                        want[j]
                    );
                }
                tree.validate()
                    .with_context(|| format!("step {i}: structure after batch"))?;
            }
        }
    }
    tree.validate().context("final structure")?;
    ensure!(
        tree.len() == set.len(),
        "size {} vs oracle {}",
        tree.len(),
        set.len()
    );
    ensure!(
        tree.to_vec().iter().eq(set.iter()),
        "final contents differ from oracle"
    );
    Ok(())
}

/// Structural checks on an ideal tree of `n` keys: root spacing, every
/// node's invariants (including brute-force tables on small nodes) and the
/// doubly-logarithmic depth bound.
pub fn check_ideal(n: usize, seed: u64) -> Result<()> {
    let keys = gen_keys(
        Distribution::UniformSubset {
            lo: 1,
            hi: 2 * n as i64,
        },
        n as u64,
        seed,
    )?;
    let keys: Vec<i64> = if keys.len() >= n {
        keys[..n].to_vec()
    } else {
        // Top up deterministically above the range.
        let top = 2 * n as i64;
        keys.iter()
            .copied()
            .chain((1..=(n - keys.len()) as i64).map(|i| top + i))
            .collect()
    };
    let tree = Tree::from_sorted(&keys, Config::default())?;
    let root = tree.root().context("empty tree")?;
    if n > Config::default().leaf_cutoff {
        let step = n.isqrt();
        let expect: Vec<i64> = (1..)
            .map(|j| j * step)
            .take_while(|&p| p < n)
            .map(|p| keys[p - 1])
            .collect();
        ensure!(
            root.rep() == expect.as_slice(),
            "root representatives not at multiples of {step}"
        );
    }
    tree.validate()?;
    let bound = ideal_depth_bound(n);
    ensure!(
        tree.depth() <= bound,
        "depth {} exceeds {bound} at n={n}",
        tree.depth()
    );
    ensure!(
        tree.to_vec() == keys,
        "flatten does not reproduce the input"
    );
    Ok(())
}

/// `ceil(log2 log2 n) + 2`.
pub fn ideal_depth_bound(n: usize) -> usize {
    if n < 4 {
        return 2;
    }
    (n as f64).log2().log2().ceil() as usize + 2
}

/// Outcomes and final dump of the half-density workload at `threads` workers.
pub fn shaped_run(n: u64, batch: u64, seed: u64, threads: usize) -> Result<(Vec<bool>, String)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let dist = Distribution::UniformSubset {
        lo: 1,
        hi: 2 * n as i64,
    };
    let keys = gen_keys(dist, n, seed)?;
    let ops = gen_ops(
        Distribution::Uniform {
            lo: 1,
            hi: 2 * n as i64,
        },
        batch,
        Mix::INSERTS,
        derive_seed(seed, 1),
    )?;
    let prefill: Vec<Op<i64>> = keys.into_iter().map(Op::insert).collect();
    Ok(pool.install(|| {
        let mut tree = Tree::new();
        tree.apply(&prefill);
        let out = tree.apply(&ops).outcomes;
        (out, tree.dump())
    }))
}

/// Results and dumps agree across the given thread counts.
pub fn check_determinism(n: u64, batch: u64, seed: u64, threads: &[usize]) -> Result<()> {
    let (base_out, base_dump) = shaped_run(n, batch, seed, threads[0])?;
    for &t in &threads[1..] {
        let (out, dump) = shaped_run(n, batch, seed, t)?;
        ensure!(
            out == base_out,
            "batch outcomes differ between {} and {t} threads",
            threads[0]
        );
        ensure!(
            dump == base_dump,
            "tree dumps differ between {} and {t} threads",
            threads[0]
        );
    }
    Ok(())
}

/// Each primitive against a sequential reference on `instances` random
/// inputs with sizes up to `max_len`.
pub fn check_primitives(instances: u64, max_len: u64, seed: u64) -> Result<()> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let sorted = |rng: &mut SplitMix64| {
        let len = rng.next_u64() % (max_len + 1);
        let hi = rng.next_u64() % (2 * max_len + 2);
        let mut v: Vec<i64> = (0..len)
            .map(|_| (rng.next_u64() % (hi + 1)) as i64)
            .collect();
        v.sort_unstable();
        v
    };
    for case in 0..instances {
        let grain = 1 + (rng.next_u64() % 512) as usize;
        let xs: Vec<u64> = (0..rng.next_u64() % (max_len + 1))
            .map(|_| rng.next_u64() % 1000)
            .collect();

        let (out, total) = prim::scan_exclusive_with(&xs, grain);
        let mut acc = 0;
        let want: Vec<u64> = xs
            .iter()
            .map(|x| {
                let before = acc;
                acc += x;
                before
            })
            .collect();
        ensure!(out == want && total == acc, "scan mismatch in case {case}");

        let modulus = 1 + rng.next_u64() % 5;
        let got = prim::filter_with(&xs, |x| x % modulus == 0, grain);
        let want: Vec<u64> = xs.iter().copied().filter(|x| x % modulus == 0).collect();
        ensure!(got == want, "filter mismatch in case {case}");

        let a = sorted(&mut rng);
        let b = sorted(&mut rng);
        let got = prim::rank_by(&a, &b, |y, x| y < x, grain);
        let mut k = 0;
        let want: Vec<usize> = a
            .iter()
            .map(|x| {
                while k < b.len() && b[k] < *x {
                    k += 1;
                }
                k
            })
            .collect();
        ensure!(got == want, "rank mismatch in case {case}");

        let ta: Vec<(i64, bool)> = a.iter().map(|&x| (x, false)).collect();
        let tb: Vec<(i64, bool)> = b.iter().map(|&x| (x, true)).collect();
        let got = prim::merge_by(&ta, &tb, |p, q| p.0 < q.0, grain);
        let mut want = [ta, tb].concat();
        // Stable sort keeps `a` ahead of `b` on ties.
        want.sort_by_key(|p| p.0);
        ensure!(got == want, "merge mismatch in case {case}");
    }
    Ok(())
}
