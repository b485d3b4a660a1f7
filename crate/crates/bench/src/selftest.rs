//! Oracle-equivalence and invariant suites behind `batch-ist selftest`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use batch_ist::{Config, Op, Tree};

use crate::checks::{check_determinism, check_ideal, check_primitives, check_script, gen_script};
use crate::harness::{derive_seed, gen_keys, DistKind, Distribution, Mix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Small,
    Full,
}

impl FromStr for Scale {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            _ => bail!("unknown scale {s:?} (expected small or full)"),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Small => "small",
            Scale::Full => "full",
        })
    }
}

struct Sizes {
    scripts: u64,
    script_len: u64,
    ideal_max: usize,
    det_n: u64,
    det_batch: u64,
    prim_cases: u64,
}

impl Scale {
    fn sizes(self) -> Sizes {
        match self {
            Scale::Small => Sizes {
                scripts: 120,
                script_len: 2_000,
                ideal_max: 100_000,
                det_n: 100_000,
                det_batch: 10_000,
                prim_cases: 200,
            },
            Scale::Full => Sizes {
                scripts: 1_000,
                script_len: 10_000,
                ideal_max: 1_000_000,
                det_n: 1_000_000,
                det_batch: 100_000,
                prim_cases: 1_000,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub seconds: f64,
}

/// Runs every suite in order and stops at the first failing property.
/// `corrupt` damages a tree before its structural check, which must then
/// fail.
pub fn run(
    scale: Scale,
    seed: u64,
    corrupt: bool,
    mut progress: impl FnMut(&SuiteResult),
) -> Result<Vec<SuiteResult>> {
    let sz = scale.sizes();
    let mut done = Vec::new();
    let mut suite = |name: &'static str, f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
        let t = Instant::now();
        f().with_context(|| format!("property {name:?} failed"))?;
        let r = SuiteResult {
            name,
            seconds: t.elapsed().as_secs_f64(),
        };
        progress(&r);
        done.push(r);
        Ok(())
    };

    suite("structure-invariants", &mut || {
        let keys = gen_keys(
            Distribution::UniformSubset { lo: 1, hi: 20_000 },
            10_000,
            seed,
        )?;
        let ops: Vec<Op<i64>> = keys.iter().map(|&k| Op::insert(k)).collect();
        let mut tree = Tree::new();
        tree.apply(&ops);
        if corrupt {
            tree.debug_corrupt();
        }
        tree.validate()?;
        Ok(())
    })?;

    suite("primitives", &mut || {
        check_primitives(sz.prim_cases, 20_000, derive_seed(seed, 2))
    })?;

    suite("ideal-structure", &mut || {
        let mut n = 16;
        while n <= sz.ideal_max {
            check_ideal(n, derive_seed(seed, n as u64)).with_context(|| format!("n={n}"))?;
            n = if n == 16 { 100 } else { n * 10 };
        }
        Ok(())
    })?;

    suite("oracle-equivalence", &mut || {
        let kinds = [
            DistKind::UniformSubset,
            DistKind::Uniform,
            DistKind::Clustered,
        ];
        let mixes = [Mix::BALANCED, Mix::INSERTS, Mix::TOMBSTONE_HEAVY];
        for i in 0..sz.scripts {
            let kind = kinds[(i % 3) as usize];
            let mix = mixes[((i / 3) % 3) as usize];
            let s = derive_seed(seed, 1_000 + i);
            let size = 1 + s % sz.script_len;
            let script = gen_script(s, size, kind, mix)?;
            let config = if i % 2 == 0 {
                Config::default()
            } else {
                Config::default().with_alpha(0.75)
            };
            check_script(&script, config)
                .with_context(|| format!("script {i} (seed {s:#x}, {kind:?}, {mix:?})"))?;
        }
        Ok(())
    })?;

    suite("determinism", &mut || {
        let max = std::thread::available_parallelism().map_or(1, |n| n.get());
        let mut threads = vec![1, 2, max];
        threads.dedup();
        check_determinism(sz.det_n, sz.det_batch, derive_seed(seed, 3), &threads)
    })?;

    ensure!(!corrupt, "corruption was injected but no suite detected it");
    Ok(done)
}
