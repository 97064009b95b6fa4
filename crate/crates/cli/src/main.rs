use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use uplin_cli::acceptance::{run_suite, SUITES};
use uplin_cli::comparator::find_comparator;
use uplin_cli::config::ExperimentConfig;
use uplin_cli::experiment::run_experiment;

#[derive(Parser)]
#[command(
    name = "uplin",
    about = "Online maximization of monotone non-concave objectives via linear surrogates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config and write
    /// regret.csv / summary.json / regret.svg.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory (falls back to $UPLIN_OUT, then the config's
        /// output_dir, then ./uplin-out).
        #[arg(long, env = "UPLIN_OUT")]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite and print one pass/fail line per check.
    Accept {
        /// One of: geometry, classes, linearization, sampler, regret,
        /// offline, all.
        #[arg(long)]
        suite: String,
        /// Emit the checks as JSON instead of text lines.
        #[arg(long)]
        json: bool,
    },
    /// Compute the comparator optimum for a config's objective over K*.
    Opt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        budget: usize,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            cfg.validate()?;
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("uplin-out"));
            let summary = run_experiment(&cfg, &out_dir)?;
            println!(
                "alpha = {:.12}, OPT = {:.12} ({}), B1 = {:.6}, D = {:.6}",
                summary.alpha, summary.opt, summary.comparator.method, summary.b1, summary.diameter
            );
            for c in &summary.checkpoints {
                println!(
                    "[{}] t={}: mean regret {:.6} (std {:.6}) vs bound {:.6} (ratio {:.4})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.t,
                    c.mean_regret,
                    c.std_regret,
                    c.bound,
                    c.envelope_ratio
                );
            }
            if let Some(slope) = summary.loglog_slope_last_decade {
                println!("log-log slope over the last decade: {slope:.4}");
            }
            if let Some(otb) = &summary.otb {
                println!(
                    "[{}] offline mean value {:.6} vs threshold {:.6}",
                    if otb.pass { "PASS" } else { "FAIL" },
                    otb.mean_value,
                    otb.threshold
                );
            }
            println!("artifacts written to {}", out_dir.display());
            Ok(summary.pass)
        }
        Command::Accept { suite, json } => {
            let checks = run_suite(&suite)?;
            let all_pass = checks.iter().all(|c| c.pass);
            if json {
                println!("{}", serde_json::to_string_pretty(&checks)?);
            } else {
                for check in &checks {
                    println!("{check}");
                }
                println!(
                    "{}: {} checks, {} failed (suites: {})",
                    if all_pass { "PASS" } else { "FAIL" },
                    checks.len(),
                    checks.iter().filter(|c| !c.pass).count(),
                    SUITES.join(", ")
                );
            }
            Ok(all_pass)
        }
        Command::Opt { config, budget } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let set: uplin::ConstraintSet64 = cfg.constraint.build()?;
            let kstar = set.maximal_convex_subset();
            let objectives = cfg
                .objective_specs()
                .iter()
                .map(|s| s.build::<f64>())
                .collect::<uplin::Result<Vec<_>>>()?;
            let result = find_comparator(&kstar, &objectives, budget, 0)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
