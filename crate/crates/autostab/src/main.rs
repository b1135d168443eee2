use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use autostab::analytic::compare_analytic;
use autostab::config::{load_config, resolve, ScenarioKind};
use autostab::output::{load_result, write_outputs};
use autostab::runner::{run, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "autostab", version, about = "Simulate autonomous two-qubit stabilization scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write result.csv, summary.json and plots/.
    Run {
        config: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the scenario kinds and the figures they mirror.
    ListScenarios,
    /// Check a config against the schema and print the resolved scenario.
    Validate { config: PathBuf },
    /// Compare a result against the four-state rate model.
    Compare {
        /// A run directory or a file inside it.
        result: PathBuf,
        #[arg(long)]
        analytic: bool,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, out, seed, workers } => {
            let mut cfg = load_config(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            let scenario = resolve(&cfg)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
            let result = run(&scenario, RunOptions { workers })?;
            let summary = write_outputs(&dir, &cfg, &result)?;
            println!(
                "{} ({}): {} rows -> {} [hash {}, seed {}]",
                summary.kind,
                summary.figure,
                summary.rows,
                dir.display(),
                &summary.config_hash[..12],
                summary.seed
            );
            if !summary.failures.is_empty() {
                for f in &summary.failures {
                    eprintln!("failed point {}: {}", f.point, f.message);
                }
                eprintln!("{} point(s) failed; their rows are flagged in result.csv", summary.failures.len());
                return Ok(ExitCode::from(1));
            }
        }
        Command::ListScenarios => {
            for kind in ScenarioKind::ALL {
                println!("{:<22} {:<26} {}", kind.label(), kind.figure(), kind.description());
            }
        }
        Command::Validate { config } => {
            let scenario = resolve(&load_config(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&scenario)?);
            eprintln!("valid {} config, hash {}", scenario.kind, scenario.config_hash());
        }
        Command::Compare { result, analytic } => {
            if !analytic {
                bail!("compare needs --analytic");
            }
            let (summary, table) = load_result(&result)?;
            let rows = compare_analytic(&summary.resolved, &table)?;
            println!("{:>14} {:>12} {:>12} {:>12}", rows[0].x_name, "lindblad", "rate_model", "abs_diff");
            for r in &rows {
                println!("{:>14.4} {:>12.6} {:>12.6} {:>12.6}", r.x, r.lindblad, r.rate_model, r.abs_diff);
            }
            let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
            println!("max abs_diff {worst:.6} over {} rows", rows.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}
