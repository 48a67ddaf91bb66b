use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use michs_cli::commands;
use michs_cli::{CliError, Command, RunConfig};

/// Multi-view image classification with class-specific spike-and-slab priors.
#[derive(Parser, Debug)]
#[command(name = "michs", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Generate a synthetic multi-view dataset (matrices + manifests).
    Synth,
    /// Build a dictionary from a training manifest.
    BuildDict,
    /// Classify test matrices drawn from a test manifest.
    Classify,
    /// Run the method × T × TPC accuracy grid on synthetic data.
    Benchmark,
    /// Dump one Gibbs chain's support sequence.
    ChainTrace,
}

impl Cmd {
    fn command(self) -> Command {
        match self {
            Cmd::Synth => Command::Synth,
            Cmd::BuildDict => Command::BuildDict,
            Cmd::Classify => Command::Classify,
            Cmd::Benchmark => Command::Benchmark,
            Cmd::ChainTrace => Command::ChainTrace,
        }
    }
}

/// Flags override the config file. `--method`, `--views` and `--tpc` also
/// pin the corresponding benchmark axis to that single value.
#[derive(Args, Debug)]
struct Opts {
    /// key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<String>,
    /// michs | src_l1
    #[arg(long, global = true)]
    method: Option<String>,
    /// Views per test matrix (T).
    #[arg(long, global = true, value_name = "T")]
    views: Option<String>,
    /// Training vectors per class.
    #[arg(long, global = true, value_name = "N")]
    tpc: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// cost | residual
    #[arg(long, global = true)]
    assign_by: Option<String>,
    #[arg(long, global = true, value_name = "C")]
    classes: Option<String>,
    /// Feature dimension.
    #[arg(long, global = true, value_name = "M")]
    dim: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    trials: Option<String>,
    /// Dictionary CSV written by build-dict.
    #[arg(long, global = true, value_name = "PATH")]
    dict: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<String>,
    /// Manifest entry traced by chain-trace.
    #[arg(long, global = true)]
    sample: Option<String>,
    /// Hypothesized class for chain-trace (default: the sample's own).
    #[arg(long, global = true)]
    class: Option<String>,
    /// Record wall-clock times in the outputs.
    #[arg(long, global = true)]
    timing: bool,
    /// Any other config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(opts: &Opts) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        cfg.merge_file(path)?;
    }
    for kv in &opts.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set {kv}: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("seed", &opts.seed),
        ("method", &opts.method),
        ("views", &opts.views),
        ("tpc", &opts.tpc),
        ("out", &opts.out),
        ("assign_by", &opts.assign_by),
        ("classes", &opts.classes),
        ("dim", &opts.dim),
        ("trials", &opts.trials),
        ("dict", &opts.dict),
        ("manifest", &opts.manifest),
        ("sample", &opts.sample),
        ("class", &opts.class),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    let axes = [
        ("bench_methods", &opts.method),
        ("bench_views", &opts.views),
        ("bench_tpcs", &opts.tpc),
    ];
    for (axis, value) in axes {
        if let Some(v) = value {
            cfg.set(axis, v)?;
        }
    }
    if opts.timing {
        cfg.timing = true;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli.opts)?;
    let command = cli.command.command();
    cfg.validate(command)?;
    log::debug!("{} with {cfg:?}", command.name());
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Synth => commands::synth(&cfg, &mut out).map(drop),
        Command::BuildDict => commands::build_dict(&cfg, &mut out).map(drop),
        Command::Classify => commands::classify(&cfg, &mut out).map(drop),
        Command::Benchmark => commands::benchmark(&cfg, &mut out).map(drop),
        Command::ChainTrace => commands::chain_trace(&cfg, &mut out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
