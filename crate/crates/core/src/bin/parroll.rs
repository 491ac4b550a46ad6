use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use parroll::config::RunConfig;
use parroll::pipeline::{self, Command};
use parroll::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Spectrum,
    FitFilter,
    Simulate,
    Moments,
    FitPdf,
    ExportClosures,
    Validate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::FitFilter => Command::FitFilter,
            Cmd::Simulate => Command::Simulate,
            Cmd::Moments => Command::Moments,
            Cmd::FitPdf => Command::FitPdf,
            Cmd::ExportClosures => Command::ExportClosures,
            Cmd::Validate => Command::Validate,
        }
    }
}

/// Parametric roll in irregular longitudinal waves.
///
/// Exit codes: 0 success, 2 config error, 3 numerical failure,
/// 4 acceptance failure. PARROLL_THREADS caps the worker count.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("parroll: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = args.out {
        cfg.outputs.directory = o;
    }
    match pipeline::run(args.command.into(), &cfg, pipeline::threads_from_env()) {
        Ok(outcome) => {
            for f in &outcome.manifest.files {
                println!("{}", cfg.outputs.directory.join(&f.path).display());
            }
            if outcome.failed_checks > 0 {
                eprintln!(
                    "parroll: {} acceptance check(s) failed",
                    outcome.failed_checks
                );
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("parroll: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
