use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use batch_ist_bench::bench::{self, RunSpec};
use batch_ist_bench::harness::DistKind;
use batch_ist_bench::selftest::{self, Scale};
use clap::{Parser, Subcommand, ValueEnum};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "batch-ist",
    version,
    about = "Batch-parallel interpolation search tree driver"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prefill a tree, apply insertion batches and report timings.
    Bench(BenchArgs),
    /// Run the oracle-equivalence and invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Parser)]
struct BenchArgs {
    /// Prefill size.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 100_000)]
    batch_size: u64,
    #[arg(long, default_value_t = 1)]
    batches: u64,
    #[arg(long, value_enum, default_value_t = Dist::UniformSubset)]
    dist: Dist,
    /// Keys are drawn from [1, range-max]; defaults to 2n.
    #[arg(long)]
    range_max: Option<i64>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "BATCH_IST_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Timed repetitions averaged per phase.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write CSV rows to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct SelftestArgs {
    #[arg(long, value_enum, default_value_t = ScaleArg::Small)]
    scale: ScaleArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_corruption: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    UniformSubset,
    Uniform,
    Clustered,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Small,
    Full,
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let kind = match a.dist {
        Dist::UniformSubset => DistKind::UniformSubset,
        Dist::Uniform => DistKind::Uniform,
        Dist::Clustered => DistKind::Clustered,
    };
    let hi = a.range_max.unwrap_or((2 * a.n).max(1) as i64);
    let spec = RunSpec {
        batches: a.batches,
        dist: kind.over(1, hi),
        alpha: a.alpha,
        seed: a.seed,
        repeats: a.repeats,
        ..RunSpec::half_density(a.n, a.batch_size, threads)
    };
    let report = bench::run(&spec)?;
    match a.format {
        Format::Table => print!("{}", report.to_table()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    if let Some(path) = a.out {
        fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn selftest_cmd(a: SelftestArgs) -> Result<()> {
    let scale = match a.scale {
        ScaleArg::Small => Scale::Small,
        ScaleArg::Full => Scale::Full,
    };
    let done = selftest::run(scale, a.seed, a.inject_corruption, |r| {
        println!("ok   {:<22} {:>8.2}s", r.name, r.seconds);
    })?;
    println!("selftest {scale}: {} suites passed", done.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Bench(a) => bench_cmd(a),
        Cmd::Selftest(a) => selftest_cmd(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
