//! `camokit` command-line front end.
//!
//! Every subcommand resolves its configuration as defaults, then flags, then
//! the JSON object given with `--config` (file keys win), writes its reports
//! as JSON and records a [`manifest::RunManifest`]. Exit codes: 0 on success,
//! 1 on invalid arguments, configurations or failed checks, 2 on I/O or
//! format errors.
//!
//! Batch work runs on a rayon pool sized by `CAMOKIT_THREADS` (default: all
//! cores). Per-item seeds come from `(seed, item index)`, so outputs do not
//! depend on the thread count.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
pub mod error;
pub mod manifest;

use error::{CliError, CliResult, EXIT_OK, EXIT_VALIDATION};
use manifest::RunManifest;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CAMOKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "camokit", version, about = "Sketch augmentation, boundary-aware losses and evaluation tools")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Suppress human-readable progress lines (reports and manifests are still written).
    #[arg(long, global = true)]
    quiet: bool,
    /// JSON configuration or run manifest; its keys override flags.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Record the wall-clock time in the manifest.
    #[arg(long, global = true)]
    timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic camouflage samples.
    Synth(commands::synth::SynthArgs),
    /// Refit and perturb sketches.
    Augment(commands::augment::AugmentArgs),
    /// Score a prediction against a mask with every loss.
    Loss(commands::loss::LossArgs),
    /// Evaluate a directory of predictions against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Run the toy fusion block and check its gradients.
    FusionDemo(commands::neural::FusionDemoArgs),
    /// Check an analytic gradient against central differences.
    Gradcheck(commands::neural::GradcheckArgs),
}

/// Settings shared by every subcommand.
pub(crate) struct Context {
    quiet: bool,
    config: Option<PathBuf>,
    manifest: Option<PathBuf>,
    timestamp: bool,
    pool: rayon::ThreadPool,
}

impl Context {
    pub(crate) fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub(crate) fn config_file(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Write `manifest` to `--manifest` if given, else to `default`.
    pub(crate) fn write_manifest(&self, mut manifest: RunManifest, default: PathBuf) -> CliResult<()> {
        if self.timestamp {
            manifest.stamp();
        }
        let path = self.manifest.clone().unwrap_or(default);
        manifest::write_json(&path, &manifest)
    }
}

fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let threads = thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::invalid(format!("cannot start {threads} worker threads: {e}")))?;
    let ctx = Context {
        quiet: cli.global.quiet,
        config: cli.global.config,
        manifest: cli.global.manifest,
        timestamp: cli.global.timestamp,
        pool,
    };
    match cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Augment(a) => commands::augment::run(&ctx, a),
        Command::Loss(a) => commands::loss::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::FusionDemo(a) => commands::neural::fusion_demo(&ctx, a),
        Command::Gradcheck(a) => commands::neural::gradcheck(&ctx, a),
    }
}

/// Parse `argv` (program name first), run the subcommand and return the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
