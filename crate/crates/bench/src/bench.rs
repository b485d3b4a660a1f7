//! Prefill-then-batch benchmark.
//!
//! A run prefills the tree with one bulk insert batch built from generated
//! keys, then applies `batches` batches of uniform insertions. Preparation
//! (sort and conflict resolution) and execution are timed separately; key
//! generation is not timed. A sequential `BTreeSet` replays the same work as
//! a baseline.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use batch_ist::{prepare_batch, Config, Op, Tree};

use crate::harness::{derive_seed, gen_keys, gen_ops, Distribution, Mix};

pub const CSV_HEADER: &str = "impl,n,batch_size,threads,alpha,seed,phase,mean_s,stddev_s,speedup";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    /// Prefill target size.
    pub n: u64,
    pub batch_size: u64,
    pub batches: u64,
    pub dist: Distribution,
    pub alpha: f64,
    pub threads: usize,
    pub seed: u64,
    pub repeats: usize,
}

impl RunSpec {
    /// The experiment shape: ~`n` keys drawn as a half-density subset of
    /// `[1, 2n]`, then insertion batches drawn uniformly from the same range.
    pub fn half_density(n: u64, batch_size: u64, threads: usize) -> Self {
        RunSpec {
            n,
            batch_size,
            batches: 1,
            dist: Distribution::UniformSubset {
                lo: 1,
                hi: (2 * n).max(1) as i64,
            },
            alpha: 0.5,
            threads,
            seed: 1,
            repeats: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads < 1 {
            bail!("threads must be at least 1");
        }
        if self.repeats < 1 {
            bail!("repeats must be at least 1");
        }
        Config::default().with_alpha(self.alpha).validate()?;
        Ok(())
    }

    fn config(&self) -> Config {
        Config::default().with_alpha(self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Impl {
    Ist,
    SortedSet,
}

impl Impl {
    pub fn name(self) -> &'static str {
        match self {
            Impl::Ist => "ist",
            Impl::SortedSet => "btreeset",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Prefill,
    Prepare,
    Execute,
    /// Prepare plus execute, or the whole batch replay for the baseline.
    Batch,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Prefill => "prefill",
            Phase::Prepare => "prepare",
            Phase::Execute => "execute",
            Phase::Batch => "batch",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub imp: Impl,
    pub threads: usize,
    pub phase: Phase,
    pub mean_s: f64,
    pub stddev_s: f64,
    pub speedup: f64,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub spec: RunSpec,
    pub rows: Vec<Row>,
    /// Hash of all batch outcomes of one repeat.
    pub outcome_digest: u64,
    /// Hash of the final tree dump.
    pub dump_digest: u64,
    pub final_len: usize,
}

impl Report {
    pub fn row(&self, imp: Impl, phase: Phase, threads: usize) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.imp == imp && r.phase == phase && r.threads == threads)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.3}",
                r.imp.name(),
                self.spec.n,
                self.spec.batch_size,
                r.threads,
                self.spec.alpha,
                self.spec.seed,
                r.phase.name(),
                r.mean_s,
                r.stddev_s,
                r.speedup
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let s = &self.spec;
        let _ = writeln!(
            out,
            "n={} batch_size={} batches={} dist={} alpha={} seed={} repeats={} final_size={}",
            s.n,
            s.batch_size,
            s.batches,
            s.dist.name(),
            s.alpha,
            s.seed,
            s.repeats,
            self.final_len
        );
        let _ = writeln!(
            out,
            "{:<9} {:>7} {:<8} {:>12} {:>12} {:>8}",
            "impl", "threads", "phase", "mean_s", "stddev_s", "speedup"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<9} {:>7} {:<8} {:>12.6} {:>12.6} {:>8.2}",
                r.imp.name(),
                r.threads,
                r.phase.name(),
                r.mean_s,
                r.stddev_s,
                r.speedup
            );
        }
        let _ = writeln!(
            out,
            "outcomes={:016x} dump={:016x}",
            self.outcome_digest, self.dump_digest
        );
        out
    }
}

/// Inputs of a run, generated once and shared by every repeat and thread count.
struct Workload {
    prefill: Vec<Op<i64>>,
    batches: Vec<Vec<Op<i64>>>,
}

fn workload(spec: &RunSpec) -> Result<Workload> {
    let keys = gen_keys(spec.dist, spec.n, spec.seed).context("phase keygen")?;
    let prefill = keys.into_iter().map(Op::insert).collect();
    let (lo, hi) = spec.dist.range();
    let ins = Distribution::Uniform { lo, hi };
    let batches = (0..spec.batches)
        .map(|b| {
            gen_ops(
                ins,
                spec.batch_size,
                Mix::INSERTS,
                derive_seed(spec.seed, 1 + b),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .context("phase keygen")?;
    Ok(Workload { prefill, batches })
}

/// Rough resident size per key of a tree built from sorted keys.
const TREE_BYTES_PER_KEY: u64 = 96;

fn check_memory(spec: &RunSpec) -> Result<()> {
    let Some(avail) = available_memory() else {
        return Ok(());
    };
    let keys = spec.n + spec.batch_size * spec.batches;
    // Tree, flatten buffers during rebuilds, the workload and the baseline set.
    let need = keys * (TREE_BYTES_PER_KEY + 3 * 8 + 16) + keys * 64;
    if need > avail {
        bail!(
            "phase prefill: estimated {:.1} GiB needed but only {:.1} GiB available",
            need as f64 / (1u64 << 30) as f64,
            avail as f64 / (1u64 << 30) as f64
        );
    }
    Ok(())
}

fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

struct Sample {
    prefill: f64,
    prepare: f64,
    execute: f64,
    outcome_digest: u64,
    dump_digest: u64,
    final_len: usize,
}

fn timed<T>(work: usize, f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    let secs = if work == 0 {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    };
    (out, secs)
}

fn run_ist(spec: &RunSpec, w: &Workload) -> Result<Sample> {
    let mut tree = Tree::<i64>::with_config(spec.config())?;
    let (_, prefill) = timed(w.prefill.len(), || tree.apply(&w.prefill));
    let mut hasher = DefaultHasher::new();
    let (mut prepare, mut execute) = (0.0, 0.0);
    for ops in &w.batches {
        let (batch, p) = timed(ops.len(), || prepare_batch(ops));
        let (out, e) = timed(ops.len(), || tree.execute_batch(&batch));
        out.outcomes.hash(&mut hasher);
        prepare += p;
        execute += e;
    }
    let mut dump = DefaultHasher::new();
    tree.dump().hash(&mut dump);
    Ok(Sample {
        prefill,
        prepare,
        execute,
        outcome_digest: hasher.finish(),
        dump_digest: dump.finish(),
        final_len: tree.len(),
    })
}

fn run_baseline(w: &Workload) -> (f64, f64) {
    let mut set = BTreeSet::new();
    let (_, prefill) = timed(w.prefill.len(), || {
        for op in &w.prefill {
            set.insert(op.key);
        }
    });
    let mut batch = 0.0;
    for ops in &w.batches {
        let (_, t) = timed(ops.len(), || {
            for op in ops {
                set.insert(op.key);
            }
        });
        batch += t;
    }
    (prefill, batch)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")
}

/// Times the IST at `threads` workers, `repeats` times.
fn measure(spec: &RunSpec, w: &Workload, threads: usize) -> Result<Vec<Sample>> {
    let pool = pool(threads)?;
    (0..spec.repeats)
        .map(|_| pool.install(|| run_ist(spec, w)))
        .collect()
}

fn summarize(samples: &[Sample]) -> [(Phase, (f64, f64)); 4] {
    let col = |f: fn(&Sample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    [
        (Phase::Prefill, mean_sd(&col(|s| s.prefill))),
        (Phase::Prepare, mean_sd(&col(|s| s.prepare))),
        (Phase::Execute, mean_sd(&col(|s| s.execute))),
        (Phase::Batch, mean_sd(&col(|s| s.prepare + s.execute))),
    ]
}

fn speedup(base: f64, t: f64) -> f64 {
    if t > 0.0 && base > 0.0 {
        base / t
    } else {
        1.0
    }
}

/// Runs the benchmark. When `spec.threads > 1` the same workload is also
/// timed on one thread to compute speedups.
pub fn run(spec: &RunSpec) -> Result<Report> {
    spec.validate()?;
    check_memory(spec)?;
    let w = workload(spec)?;

    let par = measure(spec, &w, spec.threads)?;
    let seq_summary = if spec.threads > 1 {
        let seq = measure(spec, &w, 1)?;
        if seq[0].outcome_digest != par[0].outcome_digest
            || seq[0].dump_digest != par[0].dump_digest
        {
            bail!("results differ between 1 and {} threads", spec.threads);
        }
        Some(summarize(&seq))
    } else {
        None
    };
    let par_summary = summarize(&par);

    let mut rows = Vec::new();
    if let Some(seq) = &seq_summary {
        for (phase, (mean, sd)) in seq {
            rows.push(Row {
                imp: Impl::Ist,
                threads: 1,
                phase: *phase,
                mean_s: *mean,
                stddev_s: *sd,
                speedup: 1.0,
            });
        }
    }
    for (i, (phase, (mean, sd))) in par_summary.iter().enumerate() {
        let base = seq_summary.as_ref().map_or(*mean, |s| s[i].1 .0);
        rows.push(Row {
            imp: Impl::Ist,
            threads: spec.threads,
            phase: *phase,
            mean_s: *mean,
            stddev_s: *sd,
            speedup: speedup(base, *mean),
        });
    }

    let base: Vec<(f64, f64)> = (0..spec.repeats).map(|_| run_baseline(&w)).collect();
    let (pm, ps) = mean_sd(&base.iter().map(|b| b.0).collect::<Vec<_>>());
    let (bm, bs) = mean_sd(&base.iter().map(|b| b.1).collect::<Vec<_>>());
    rows.push(Row {
        imp: Impl::SortedSet,
        threads: 1,
        phase: Phase::Prefill,
        mean_s: pm,
        stddev_s: ps,
        speedup: 1.0,
    });
    rows.push(Row {
        imp: Impl::SortedSet,
        threads: 1,
        phase: Phase::Batch,
        mean_s: bm,
        stddev_s: bs,
        speedup: 1.0,
    });

    Ok(Report {
        spec: *spec,
        rows,
        outcome_digest: par[0].outcome_digest,
        dump_digest: par[0].dump_digest,
        final_len: par[0].final_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(threads: usize) -> RunSpec {
        RunSpec {
            repeats: 2,
            batches: 2,
            ..RunSpec::half_density(20_000, 2_000, threads)
        }
    }

    #[test]
    fn empty_run_reports_zeros() {
        let spec = RunSpec {
            batch_size: 0,
            ..RunSpec::half_density(0, 0, 1)
        };
        let r = run(&spec).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.mean_s == 0.0 && row.stddev_s == 0.0));
        assert_eq!(r.final_len, 0);
    }

    #[test]
    fn single_thread_speedup_is_one() {
        let r = run(&small(1)).unwrap();
        assert!(r.rows.iter().all(|row| row.speedup == 1.0));
    }

    #[test]
    fn same_seed_same_results() {
        let a = run(&small(2)).unwrap();
        let b = run(&small(2)).unwrap();
        assert_eq!(a.outcome_digest, b.outcome_digest);
        assert_eq!(a.dump_digest, b.dump_digest);
        assert!(a.row(Impl::Ist, Phase::Execute, 1).is_some());
        assert!(a.row(Impl::Ist, Phase::Execute, 2).is_some());
    }

    #[test]
    fn csv_schema() {
        let r = run(&small(1)).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for line in lines {
            assert_eq!(line.split(',').count(), 10, "{line}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(run(&RunSpec {
            threads: 0,
            ..small(1)
        })
        .is_err());
        assert!(run(&RunSpec {
            repeats: 0,
            ..small(1)
        })
        .is_err());
        assert!(run(&RunSpec {
            alpha: 1.0,
            ..small(1)
        })
        .is_err());
    }
}
