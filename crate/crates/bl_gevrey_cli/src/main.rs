use std::path::PathBuf;
use std::process::ExitCode;

use bl_gevrey_cli::config::OUTPUT_ENV;
use bl_gevrey_cli::runner::{self, Overrides, RunManifest};
use bl_gevrey_cli::{suites, CliError, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bl-gevrey", version, about = "Boundary-layer Gevrey laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write outputs.
    Run {
        config: PathBuf,
        /// Output directory; beats the environment and the config file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a property suite: dyadic, spaces, solver-mms, aux-residuals, monitors or all.
    Verify { suite: String },
    /// Continue a run from a snapshot.
    Resume {
        snapshot: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Print a snapshot header.
    Inspect { snapshot: PathBuf },
}

fn env_output() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()).map(PathBuf::from)
}

fn report(m: &RunManifest) -> ExitCode {
    let name = serde_json::to_string(&m.termination).expect("termination serializes");
    println!("termination {name} at t = {} after {} steps", m.t_final, m.steps);
    if let Some(e) = &m.error {
        eprintln!("error: {e}");
    }
    if m.termination.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.output_dir = output.or_else(env_output).unwrap_or(cfg.output_dir);
            Ok(report(&runner::run(&cfg)?))
        }
        Command::Verify { suite } => {
            let checks = suites::verify(&suite)?;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Resume {
            snapshot,
            output,
            t_end,
        } => {
            let overrides = Overrides {
                output_dir: output.or_else(env_output),
                t_end,
                snapshot_every: None,
            };
            Ok(report(&runner::resume(&snapshot, &overrides)?))
        }
        Command::Inspect { snapshot } => {
            println!("{}", runner::inspect(&snapshot)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
