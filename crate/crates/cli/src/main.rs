//! `proxyforest`: one executable for the Monte Carlo comparison study,
//! free-text label clustering, and the field-interview pipeline.
//!
//! Every stochastic command takes its randomness from a required --seed;
//! rerunning any command with identical flags rewrites identical bytes.
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod cmd_cluster;
mod cmd_pipeline;
mod cmd_simulate;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use overlay::Overlay;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }
}

impl From<proxyforest_core::Error> for CliError {
    fn from(e: proxyforest_core::Error) -> CliError {
        match e {
            proxyforest_core::Error::Config(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::Runtime(format!("csv error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output directory for this run's files, from the environment variable
/// when neither the flag nor the config file names one.
pub const OUT_DIR_ENV: &str = "PROXYFOREST_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "proxyforest",
    version,
    about = "Two-layer random forests, string clustering, and interview-record analysis",
    disable_help_subcommand = true
)]
struct Cli {
    /// TOML file that may preset any flag (command-line flags win)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory artifacts are written to
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Worker thread bound; results do not depend on it
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the paired-arm Monte Carlo study and write tables and plots
    Simulate(cmd_simulate::SimulateArgs),
    /// Cluster a CSV of free-text labels by phonetic string distance
    Cluster(cmd_cluster::ClusterArgs),
    /// Generate, model, and forecast field-interview records
    #[command(subcommand)]
    Pipeline(cmd_pipeline::PipelineCmd),
}

/// Global settings resolved from flags, the config file, and environment.
pub struct Context {
    pub overlay: Overlay,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[derive(Args, Debug)]
pub struct SeedArg {
    /// RNG seed; required, all randomness derives from it
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    /// Flag, else config; never a wall-clock default.
    pub fn resolve(&self, ctx: &Context, section: &[&str]) -> CliResult<u64> {
        match self.seed.or(ctx.overlay.u64_opt(section, "seed")?) {
            Some(s) => Ok(s),
            None => Err(CliError::usage("--seed is required (set it on the command line or in the config file)")),
        }
    }
}

fn build_context(cli: &Cli) -> CliResult<Context> {
    let overlay = match &cli.config {
        Some(path) => Overlay::load(path)?,
        None => Overlay::empty(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or(overlay.path_opt(&[], "out_dir")?)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    Ok(Context { overlay, out_dir })
}

fn run(cli: &Cli) -> CliResult<()> {
    let ctx = build_context(cli)?;
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => ctx.overlay.usize_opt(&[], "threads")?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // ignore the error from a second initialization in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::Simulate(args) => cmd_simulate::run(args, &ctx),
        Command::Cluster(args) => cmd_cluster::run(args, &ctx),
        Command::Pipeline(cmd) => cmd_pipeline::run(cmd, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
