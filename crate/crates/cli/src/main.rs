use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mcdc::pipeline::{write_bench_csv, CompatFlags};
use mcdc::{
    drop_missing, evaluate, generate_synthetic, load_csv, read_labels, run_bench, run_cluster, write_csv, write_labels,
    BenchAxis, BenchConfig, CsvOptions, RunConfig, SynthSpec, Variant,
};

#[derive(Parser)]
#[command(name = "mcdc", version, about = "Categorical clustering with automatic granularity discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a categorical CSV file and report the result as JSON.
    Cluster(ClusterArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic categorical data set with known clusters.
    Synth(SynthArgs),
    /// Time the pipeline along one size axis.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write final labels here, one per line.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Write the granularity label matrix as CSV.
    #[arg(long)]
    emit_gamma: Option<PathBuf>,
    /// Include every granularity level's labels in the report.
    #[arg(long)]
    emit_levels: bool,
    /// Ground-truth column (header name, or zero-based index with --no-header).
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, default_value = "?")]
    missing_token: String,
    /// Treat every cell, including the missing token, as an ordinary value.
    #[arg(long, conflicts_with = "drop_missing")]
    no_missing_token: bool,
    /// Discard rows that contain a missing cell.
    #[arg(long)]
    drop_missing: bool,
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value_t = 0.03)]
    eta: f64,
    #[arg(long)]
    k0: Option<usize>,
    /// Sought number of clusters.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "full", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    #[arg(long, default_value_t = 50)]
    max_epochs: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Aggregation seedings per run; the one with the lowest objective is kept.
    #[arg(long, default_value_t = 10)]
    came_restarts: usize,
    /// Keep the 1/d prefactor on weighted similarity.
    #[arg(long)]
    literal_similarity: bool,
    /// Start each learning epoch from the previous partition instead of fresh seeds.
    #[arg(long)]
    carry_members: bool,
    /// Count an object in its own cluster while scoring it.
    #[arg(long)]
    include_self: bool,
    /// Keep aggregation modes at their seed rows.
    #[arg(long)]
    frozen_modes: bool,
    /// Stop the learner when a partition repeats rather than its cluster count.
    #[arg(long)]
    partition_stop: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Data CSV destination; a `class` column holds the generating cluster.
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth label file destination.
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 0.9)]
    purity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_axis)]
    axis: BenchAxis,
    /// Comma-separated, strictly increasing grid points.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Object count when it is not the swept axis.
    #[arg(long)]
    n: Option<usize>,
    /// Feature count when it is not the swept axis.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 20)]
    k0: usize,
    /// Sought cluster count when it is not the swept axis.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    came_iterations: usize,
    /// Passes per learning epoch on the n and d axes, always run in full.
    #[arg(long, default_value_t = 10)]
    max_passes: usize,
    /// Epoch cap on the n and d axes.
    #[arg(long, default_value_t = 1)]
    max_epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: mcdc::Error| e.to_string())
}

fn parse_axis(s: &str) -> Result<BenchAxis, String> {
    s.parse().map_err(|e: mcdc::Error| e.to_string())
}

/// Output produced by a command, written only once everything has succeeded.
struct Pending {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl Pending {
    fn new() -> Self {
        Self { files: Vec::new(), stdout: Vec::new() }
    }

    fn emit(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        match path {
            Some(p) => self.files.push((p.to_path_buf(), bytes)),
            None => self.stdout.extend(bytes),
        }
    }

    fn flush(self) -> anyhow::Result<()> {
        for (path, bytes) in self.files {
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        let mut out = io::stdout().lock();
        out.write_all(&self.stdout)?;
        out.flush()?;
        Ok(())
    }
}

fn json_bytes<T: serde::Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cluster(args: ClusterArgs) -> anyhow::Result<Pending> {
    let config = RunConfig {
        eta: args.eta,
        k0: args.k0,
        k: args.k,
        seed: args.seed,
        max_passes: args.max_passes,
        max_epochs: args.max_epochs,
        max_iter: args.max_iter,
        came_restarts: args.came_restarts,
        variant: args.variant,
        compat: CompatFlags {
            literal_similarity: args.literal_similarity,
            carry_members: args.carry_members,
            include_self: args.include_self,
            frozen_modes: args.frozen_modes,
            partition_stop: args.partition_stop,
        },
        repeats: args.repeats,
        emit_levels: args.emit_levels,
    };
    config.validate()?;
    if args.emit_gamma.is_some() && matches!(args.variant, Variant::Mcdc1 | Variant::Mcdc2 | Variant::Kmodes) {
        bail!("--emit-gamma needs a variant that learns granularity levels (full, mcdc3, mcdc4)");
    }

    let options = CsvOptions {
        has_header: !args.no_header,
        label_column: args.label_column,
        missing_token: (!args.no_missing_token).then_some(args.missing_token),
    };
    let mut ds = load_csv(&args.input, &options)?;
    if args.drop_missing {
        ds = drop_missing(&ds)?;
    }

    let run_config = RunConfig { emit_levels: config.emit_levels || args.emit_gamma.is_some(), ..config.clone() };
    let mut report = run_cluster(&ds, &run_config)?;
    report.config = config;

    let mut pending = Pending::new();
    if let Some(path) = &args.emit_gamma {
        let levels = report.levels.as_deref().unwrap_or_default();
        let kappa = report.kappa.as_deref().unwrap_or_default();
        pending.emit(Some(path), gamma_csv(kappa, levels));
    }
    if !args.emit_levels {
        report.levels = None;
    }
    if let Some(path) = &args.labels_out {
        let mut bytes = Vec::new();
        write_labels(&mut bytes, &report.labels)?;
        pending.emit(Some(path), bytes);
    }
    pending.emit(args.output.as_deref(), json_bytes(&report)?);
    Ok(pending)
}

fn gamma_csv(kappa: &[usize], levels: &[Vec<usize>]) -> Vec<u8> {
    let mut out = String::new();
    let header: Vec<String> = kappa.iter().map(|k| format!("k{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let n = levels.first().map_or(0, Vec::len);
    for i in 0..n {
        let row: Vec<String> = levels.iter().map(|l| l[i].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn eval(args: EvalArgs) -> anyhow::Result<Pending> {
    let pred = read_labels(&args.pred)?;
    let truth = read_labels(&args.truth)?;
    let scores = evaluate(&pred, &truth)?;
    let mut pending = Pending::new();
    pending.emit(args.output.as_deref(), json_bytes(&scores)?);
    Ok(pending)
}

fn synth(args: SynthArgs) -> anyhow::Result<Pending> {
    let spec = SynthSpec { n: args.n, d: args.d, k_true: args.k, purity: args.purity, m: args.m, seed: args.seed };
    let (ds, truth) = generate_synthetic(&spec)?;
    let mut data = Vec::new();
    write_csv(&ds, &mut data, "?", Some(("class", &truth)))?;
    let mut pending = Pending::new();
    pending.emit(Some(&args.output), data);
    if let Some(path) = &args.truth_out {
        let mut bytes = Vec::new();
        write_labels(&mut bytes, &truth)?;
        pending.emit(Some(path), bytes);
    }
    Ok(pending)
}

fn bench(args: BenchArgs) -> anyhow::Result<Pending> {
    let mut cfg = BenchConfig::new(args.axis, args.grid);
    cfg.repeats = args.repeats;
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.d = args.d.unwrap_or(cfg.d);
    cfg.k0 = args.k0;
    cfg.k = args.k;
    cfg.came_iterations = args.came_iterations;
    cfg.max_passes = args.max_passes;
    cfg.max_epochs = args.max_epochs;
    cfg.seed = args.seed;
    cfg.validate()?;
    let rows = run_bench(&cfg)?;
    let mut bytes = Vec::new();
    write_bench_csv(&mut bytes, cfg.axis, &rows)?;
    let mut pending = Pending::new();
    pending.emit(args.output.as_deref(), bytes);
    Ok(pending)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
    }
    .and_then(Pending::flush);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = matches!(
                e.downcast_ref::<mcdc::Error>(),
                Some(mcdc::Error::Config(_) | mcdc::Error::InvalidArgument(_))
            );
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
