use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bohm_core::experiments::PRESET_NAMES;
use bohm_core::io::{execute, RunOptions, EXIT_ERROR};

/// Run a pilot-wave experiment and write trajectories, fields and a manifest.
#[derive(Debug, Parser)]
#[command(name = "bohm", version, about)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed for particle sampling.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Preset name; overrides the configuration.
    #[arg(long, value_name = "NAME", value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    experiment: Option<String>,
    /// Comma-separated checks that decide the exit status (default: all).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    check: Option<Vec<String>>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        experiment: cli.experiment,
        checks: cli.check,
        threads: cli.threads,
    };
    match execute(&opts) {
        Ok(outcome) => {
            for c in &outcome.manifest.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                let note = if c.enabled { "" } else { " (not enforced)" };
                println!(
                    "{status} {}: {:.6e} {} {:.6e}{note}",
                    c.name, c.measured, c.relation, c.threshold
                );
            }
            println!(
                "{} in {:.2}s -> {}",
                outcome.manifest.status,
                outcome.manifest.runtime_seconds,
                outcome.out_dir.display()
            );
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
