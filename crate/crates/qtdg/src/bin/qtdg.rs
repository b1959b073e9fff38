//! Command-line front end: parse a run configuration file, execute the
//! requested study, print CSV to stdout, and optionally write the tables
//! to an output directory. Exit codes: 0 on success, 2 when any solver
//! level was flagged, 1 on configuration or i/o errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtdg::driver::{self, RunConfig, RunOutcome};
use qtdg::error::Result;

#[derive(Parser)]
#[command(name = "qtdg", version, about = "Space-time quasi-Trefftz DG convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration file (line-oriented key = value).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one discrete space over the configured refinements and print
    /// the convergence table.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Write CSV files into this directory (overrides the config key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver worker threads (overrides the config key).
        #[arg(long)]
        workers: Option<usize>,
        /// Gauss points per direction (overrides the config key).
        #[arg(long)]
        quad_order: Option<usize>,
    },
    /// Solve every configured space on the same meshes and print the
    /// merged table with a leading space column.
    Compare {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Print the coarsest configured mesh as text.
    MeshDump {
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn report_notes(outcome: &RunOutcome) {
    for row in &outcome.rows {
        if let Some(note) = &row.note {
            eprintln!(
                "flagged: space {:?} p {} h {}: {note}",
                row.space, row.degree, row.h
            );
        }
    }
}

fn write_table(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run {
            config,
            out,
            workers,
            quad_order,
        } => {
            let mut config = RunConfig::from_file(&config.config)?;
            if let Some(dir) = out {
                config.out_dir = Some(dir);
            }
            if let Some(n) = workers {
                config.workers = n;
            }
            if quad_order.is_some() {
                config.quad_order = quad_order;
            }
            let outcome = driver::run(&config)?;
            let csv = driver::run_csv(&outcome);
            print!("{csv}");
            report_notes(&outcome);
            if let Some(dir) = &config.out_dir {
                let space = format!("{:?}", config.spaces[0]).to_lowercase();
                write_table(dir, &format!("{}_{}.csv", config.problem, space), &csv)?;
            }
            Ok(outcome.any_flagged)
        }
        Command::Compare { config } => {
            let config = RunConfig::from_file(&config.config)?;
            let outcome = driver::compare(&config)?;
            let csv = driver::compare_csv(&outcome);
            print!("{csv}");
            report_notes(&outcome);
            if let Some(dir) = &config.out_dir {
                write_table(dir, &format!("{}_compare.csv", config.problem), &csv)?;
            }
            Ok(outcome.any_flagged)
        }
        Command::MeshDump { config } => {
            let config = RunConfig::from_file(&config.config)?;
            let dump = driver::mesh_dump(&config)?;
            print!("{dump}");
            if let Some(dir) = &config.out_dir {
                write_table(dir, &format!("{}_mesh.txt", config.problem), &dump)?;
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
