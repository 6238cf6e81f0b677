use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use multiqueue::harness::{self, BenchResult};
use multiqueue::quality::{self, OpLog, RankErrorStats, TheoryModel};
use multiqueue::workload::{DEFAULT_KEY_MAX, DEFAULT_MONOTONIC_INCREMENT, DEFAULT_PREFILL};
use multiqueue::{MultiQueueConfig, WorkloadMode, WorkloadSpec, DEFAULT_ARITY, DEFAULT_SEED};
use serde_json::json;

/// Directory for machine-readable output when `--output` is not given.
const OUTPUT_DIR_ENV: &str = "MQ_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "mq", version, about = "MultiQueue throughput and rank-error experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-threaded throughput run (alternating insert / delete-min).
    Bench(BenchArgs),
    /// Rank-error distribution via the sorted-sequence oracle.
    Quality(QualityArgs),
    /// Tail and pmf table of the geometric rank model.
    Theory(TheoryArgs),
    /// Throughput run with unique payloads and a post-run conservation check.
    Verify(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct QueueArgs {
    /// Thread count p.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Queue factor c; the queue has ceil(c*p) local heaps.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Override the number of local heaps.
    #[arg(long)]
    num_queues: Option<usize>,
    /// Heap arity.
    #[arg(long, default_value_t = DEFAULT_ARITY)]
    d: usize,
    /// Re-check the cached minimum after locking.
    #[arg(long)]
    strict_min: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Machine-readable output file; `-` for stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BenchArgs {
    #[command(flatten)]
    queue: QueueArgs,
    #[arg(long, default_value = "uniform", value_parser = parse_mode)]
    mode: WorkloadMode,
    /// Initial number of elements n0.
    #[arg(long, default_value_t = DEFAULT_PREFILL)]
    n0: usize,
    #[arg(long, default_value_t = DEFAULT_KEY_MAX)]
    key_max: u32,
    #[arg(long, default_value_t = 1000)]
    duration_ms: u64,
    #[arg(long, default_value_t = DEFAULT_MONOTONIC_INCREMENT)]
    increment_max: u32,
    /// Initial sizes for `--mode size-sweep` (default: decades 1..10^6).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Clone)]
struct QualityArgs {
    #[command(flatten)]
    queue: QueueArgs,
    #[arg(long, default_value_t = DEFAULT_PREFILL)]
    n0: usize,
    #[arg(long, default_value_t = DEFAULT_KEY_MAX)]
    key_max: u32,
    /// Operations after prefill, alternating insert / delete-min.
    #[arg(long, default_value_t = 10_000_000)]
    ops: u64,
    #[arg(long, default_value = "uniform", value_parser = parse_mode)]
    mode: WorkloadMode,
    /// Record a genuinely concurrent log with this many threads and replay it.
    #[arg(long, conflicts_with = "replay")]
    threads: Option<usize>,
    /// Replay an existing log file instead of running anything.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Replay logs flagged as multi-socket.
    #[arg(long)]
    force: bool,
    /// Save the recorded log here.
    #[arg(long)]
    log_out: Option<PathBuf>,
    /// Also write the `rank,count` histogram here.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Clone)]
struct TheoryArgs {
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 56.0)]
    p: f64,
    #[arg(long, default_value_t = 300)]
    k_max: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_mode(s: &str) -> Result<WorkloadMode, String> {
    s.parse().map_err(|e: multiqueue::Error| e.to_string())
}

impl QueueArgs {
    fn config(&self) -> MultiQueueConfig {
        let mut cfg = MultiQueueConfig::new(self.p, self.c)
            .with_arity(self.d)
            .with_seed(self.seed)
            .with_strict_min(self.strict_min);
        cfg.num_queues = self.num_queues;
        cfg
    }
}

/// Opens the machine-output sink: `--output`, else `$MQ_OUTPUT_DIR/<name>`,
/// else stdout. Returns whether it is stdout.
fn sink(out: &OutputArgs, default_name: &str) -> Result<(Box<dyn Write>, bool)> {
    let path = match (&out.output, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(p), _) if p.as_os_str() == "-" => None,
        (Some(p), Some(dir)) if p.is_relative() => Some(Path::new(&dir).join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(Path::new(&dir).join(default_name)),
        (None, None) => None,
    };
    match path {
        Some(p) => {
            let f = File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok((Box::new(BufWriter::new(f)), false))
        }
        None => Ok((Box::new(io::stdout().lock()), true)),
    }
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn bench(args: &BenchArgs, verify: bool) -> Result<()> {
    let cfg = args.queue.config();
    let w = WorkloadSpec {
        mode: args.mode,
        key_max: args.key_max,
        prefill: args.n0,
        threads: args.queue.p,
        duration: Duration::from_millis(args.duration_ms),
        monotonic_increment_max: args.increment_max,
        seed: args.queue.seed,
        verify,
        ..WorkloadSpec::default()
    };
    let results: Vec<BenchResult> = if args.mode == WorkloadMode::SizeSweep {
        let sizes = if args.sizes.is_empty() {
            harness::decade_sizes(6)
        } else {
            args.sizes.clone()
        };
        harness::run_size_sweep(&cfg, &w, &sizes)?
    } else {
        vec![harness::run_throughput(&cfg, &w)?]
    };

    let format = args.out.format.unwrap_or(Format::Csv);
    let name = if verify { "verify" } else { "bench" };
    let (mut out, to_stdout) = sink(&args.out, &format!("{name}.{}", ext(format)))?;
    match format {
        Format::Csv => harness::write_csv(&mut out, &results)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &results)?;
            writeln!(out)?;
        }
    }
    out.flush()?;

    let mut human: Box<dyn Write> = if to_stdout { Box::new(io::stderr()) } else { Box::new(io::stdout()) };
    for r in &results {
        writeln!(
            human,
            "p={} queues={} n0={} mode={}: {} ops in {:.3}s ({:.3e} ops/s), {:.3} lock attempts/op",
            r.threads,
            r.num_queues,
            r.prefill,
            r.mode,
            r.total_ops,
            r.seconds,
            r.ops_per_second,
            r.lock_stats.mean_attempts_per_op()
        )?;
        if let Some(note) = &r.pinning.note {
            writeln!(human, "warning: {note}")?;
        }
        if let Some(c) = &r.conservation {
            writeln!(
                human,
                "conservation ok: {} inserted = {} deleted + {} drained",
                c.inserted, c.deleted, c.drained
            )?;
        }
    }
    Ok(())
}

fn quality(args: &QualityArgs) -> Result<()> {
    let cfg = args.queue.config();
    let w = WorkloadSpec {
        mode: args.mode,
        key_max: args.key_max,
        prefill: args.n0,
        threads: args.threads.unwrap_or(1),
        op_count: args.ops,
        seed: args.queue.seed,
        ..WorkloadSpec::default()
    };
    let stats: RankErrorStats = if let Some(path) = &args.replay {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let log = OpLog::parse(BufReader::new(f))?;
        quality::replay_log(&log, args.force)?
    } else if args.threads.is_some() || args.log_out.is_some() {
        let log = if args.threads.is_some() {
            quality::record_concurrent_log(&cfg, &w, args.ops)?
        } else {
            quality::record_serial_log(&cfg, &w, args.ops)?
        };
        if let Some(path) = &args.log_out {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut f = BufWriter::new(f);
            log.write_to(&mut f)?;
            f.flush()?;
        }
        quality::replay_log(&log, args.force)?
    } else {
        quality::simulate_quality(&cfg, &w, args.ops)?
    };

    if let Some(path) = &args.histogram {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut f = BufWriter::new(f);
        stats.write_csv(&mut f)?;
        f.flush()?;
    }

    let summary = stats.summary();
    let format = args.out.format.unwrap_or(Format::Json);
    let (mut out, to_stdout) = sink(&args.out, &format!("quality.{}", ext(format)))?;
    match format {
        Format::Json => {
            let num_queues = cfg.resolved_num_queues()?;
            let doc = json!({
                "c": args.queue.c,
                "p": args.queue.p,
                "num_queues": num_queues,
                "n0": args.n0,
                "ops": args.ops,
                "seed": args.queue.seed,
                "total_deletes": summary.total_deletes,
                "mean": summary.mean_rank,
                "quartiles": summary.quartiles,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => stats.write_csv(&mut out)?,
    }
    out.flush()?;
    if !to_stdout {
        println!(
            "{} deletes, mean rank {:.2}, quartiles 0/25/50/75/100% = {}/{}/{}/{}/{}",
            summary.total_deletes,
            summary.mean_rank,
            summary.quartile(0),
            summary.quartile(25),
            summary.quartile(50),
            summary.quartile(75),
            summary.quartile(100)
        );
    }
    Ok(())
}

fn theory(args: &TheoryArgs) -> Result<()> {
    let q = 2.0 / (args.c * args.p);
    if !(q.is_finite() && q > 0.0 && q <= 1.0) {
        bail!("the model needs 0 < 2/(c*p) <= 1 (c={}, p={})", args.c, args.p);
    }
    let m = TheoryModel::new(args.c, args.p);
    let format = args.out.format.unwrap_or(Format::Csv);
    let (mut out, _) = sink(&args.out, &format!("theory.{}", ext(format)))?;
    match format {
        Format::Csv => {
            writeln!(out, "k,tail,pmf")?;
            for k in 0..=args.k_max {
                writeln!(out, "{k},{:.12e},{:.12e}", m.tail(k), m.rank_pmf(k))?;
            }
        }
        Format::Json => {
            let rows: Vec<_> = (0..=args.k_max)
                .map(|k| json!({ "k": k, "tail": m.tail(k), "pmf": m.rank_pmf(k) }))
                .collect();
            let doc = json!({
                "c": args.c,
                "p": args.p,
                "expected_rank": m.expected_rank(),
                "tail_threshold": m.tail_threshold(1.0),
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Bench(a) => bench(a, false),
        Command::Verify(a) => bench(a, true),
        Command::Quality(a) => quality(a),
        Command::Theory(a) => theory(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
