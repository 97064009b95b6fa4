//! Experiment runner: builds the cell from a config, runs every seed, writes
//! `regret.csv`, `summary.json`, and `regret.svg`, and evaluates the
//! pass/fail gates (regret envelope, square-root rate, offline guarantee).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use uplin::domains::{ConstraintSet, Point};
use uplin::linearization::LinearizationContext;
use uplin::objectives::Objective;
use uplin::online::{online_to_batch, run_online, FixedAdversary, CyclicAdversary, RegretTrace};
use uplin::oracles::QueryOracle;

use crate::comparator::{find_comparator, ComparatorResult};
use crate::config::{ExperimentConfig, Mode};

/// Maximum log-log slope of mean regret over the last decade that still
/// counts as a square-root rate.
pub const RATE_SLOPE_LIMIT: f64 = 0.55;

/// Stream split between the sampler randomness (the seed itself) and the
/// oracle noise.
pub const ORACLE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub t: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    /// `(3/2) B1 D sqrt(t)`.
    pub bound: f64,
    pub envelope_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OtbSummary {
    pub mean_value: f64,
    /// `alpha OPT - 1.5 B1 D / sqrt(T)`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub alpha: f64,
    pub opt: f64,
    pub comparator: ComparatorResult,
    pub b1: f64,
    pub diameter: f64,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Log-log slope of mean regret between `T/10` and `T`; absent when the
    /// regret is non-positive there (the rate gate is then vacuous).
    pub loglog_slope_last_decade: Option<f64>,
    pub otb: Option<OtbSummary>,
    pub pass: bool,
}

/// Everything derived from the config that the per-seed runs share.
pub struct PreparedCell {
    pub kstar: ConstraintSet<f64>,
    pub ctx: LinearizationContext<f64>,
    pub objectives: Vec<Objective<f64>>,
    pub alpha: f64,
    pub b1: f64,
    pub diameter: f64,
    pub comparator: ComparatorResult,
}

pub struct SeedOutcome {
    pub seed: u64,
    pub trace: RegretTrace<f64>,
    pub otb_value: Option<f64>,
}

pub fn prepare(config: &ExperimentConfig) -> Result<PreparedCell> {
    config.validate()?;
    let set: ConstraintSet<f64> = config.constraint.build()?;
    let kstar = set.maximal_convex_subset();
    let theta = config.theta.build()?;
    let ctx = LinearizationContext::for_set(config.gamma, theta, &set)?;
    let alpha = ctx.alpha_star(&kstar)?;
    let objectives: Vec<Objective<f64>> = config
        .objective_specs()
        .iter()
        .map(|spec| spec.build::<f64>().map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let noise = config.noise.build::<f64>();
    let b1 = objectives
        .iter()
        .map(|f| f.grad_bound())
        .fold(0.0f64, f64::max)
        + noise.radius();
    let comparator = find_comparator(&kstar, &objectives, config.comparator_budget, 0)?;
    Ok(PreparedCell {
        diameter: kstar.diameter(),
        kstar,
        ctx,
        objectives,
        alpha,
        b1,
        comparator,
    })
}

pub fn run_seed(config: &ExperimentConfig, cell: &PreparedCell, seed: u64) -> Result<SeedOutcome> {
    let noise = config.noise.build::<f64>();
    let comparator_point = Point::new(cell.comparator.point.clone());
    let oracle_seed = |i: u64| seed.wrapping_mul(ORACLE_SEED_SALT).wrapping_add(i);
    let run = |adv: &mut dyn AdvDyn| -> Result<SeedOutcome> {
        match config.mode {
            Mode::Online => {
                let trace = adv.run_online(
                    &cell.kstar,
                    &cell.ctx,
                    cell.alpha,
                    &comparator_point,
                    config.t_rounds,
                    &config.effective_checkpoints(),
                    seed,
                )?;
                Ok(SeedOutcome { seed, trace, otb_value: None })
            }
            Mode::Otb => {
                let (point, trace) = adv.online_to_batch(
                    &cell.kstar,
                    &cell.ctx,
                    cell.alpha,
                    &comparator_point,
                    config.t_rounds,
                    seed,
                )?;
                let value = cell
                    .objectives
                    .iter()
                    .map(|f| f.value(&point))
                    .sum::<f64>()
                    / cell.objectives.len() as f64;
                Ok(SeedOutcome { seed, trace, otb_value: Some(value) })
            }
        }
    };
    if cell.objectives.len() == 1 {
        let f = cell.objectives[0].clone();
        let oracle = QueryOracle::first_order(f.clone(), noise, oracle_seed(0))?;
        let mut adv = FixedAdversary::new(f, oracle);
        run(&mut adv)
    } else {
        let oracles: Vec<_> = cell
            .objectives
            .iter()
            .enumerate()
            .map(|(i, f)| QueryOracle::first_order(f.clone(), noise, oracle_seed(i as u64)))
            .collect::<uplin::Result<_>>()?;
        let mut adv = CyclicAdversary::new(cell.objectives.clone(), oracles)?;
        run(&mut adv)
    }
}

// Object-safe shim so fixed and cyclic adversaries share the run paths.
trait AdvDyn {
    fn run_online(
        &mut self,
        kstar: &ConstraintSet<f64>,
        ctx: &LinearizationContext<f64>,
        alpha: f64,
        comparator: &Point<f64>,
        t: usize,
        checkpoints: &[usize],
        seed: u64,
    ) -> Result<RegretTrace<f64>>;
    fn online_to_batch(
        &mut self,
        kstar: &ConstraintSet<f64>,
        ctx: &LinearizationContext<f64>,
        alpha: f64,
        comparator: &Point<f64>,
        t: usize,
        seed: u64,
    ) -> Result<(Point<f64>, RegretTrace<f64>)>;
}

impl<A: uplin::online::Adversary<f64>> AdvDyn for A {
    fn run_online(
        &mut self,
        kstar: &ConstraintSet<f64>,
        ctx: &LinearizationContext<f64>,
        alpha: f64,
        comparator: &Point<f64>,
        t: usize,
        checkpoints: &[usize],
        seed: u64,
    ) -> Result<RegretTrace<f64>> {
        Ok(run_online(kstar, ctx, self, alpha, comparator, t, checkpoints, seed)?)
    }

    fn online_to_batch(
        &mut self,
        kstar: &ConstraintSet<f64>,
        ctx: &LinearizationContext<f64>,
        alpha: f64,
        comparator: &Point<f64>,
        t: usize,
        seed: u64,
    ) -> Result<(Point<f64>, RegretTrace<f64>)> {
        Ok(online_to_batch(kstar, ctx, self, alpha, comparator, t, seed)?)
    }
}

/// `(3/2) B1 D sqrt(t)`.
pub fn regret_bound(b1: f64, diameter: f64, t: usize) -> f64 {
    1.5 * b1 * diameter * (t as f64).sqrt()
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs every seed, writes the artifacts into `out_dir`, and returns the
/// summary. Files: `regret.csv` (`seed,t,x0..,f,cum_regret`, one row per
/// seed and round, 17 significant digits), `summary.json`, `regret.svg`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    let cell = prepare(config)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut outcomes = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        outcomes.push(run_seed(config, &cell, seed)?);
    }

    // regret.csv
    let d = cell.kstar.dim();
    let csv_path = out_dir.join("regret.csv");
    {
        let file = fs::File::create(&csv_path)
            .with_context(|| format!("creating {}", csv_path.display()))?;
        let mut w = BufWriter::new(file);
        let mut header = String::from("seed,t");
        for i in 0..d {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",f,cum_regret");
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        for outcome in &outcomes {
            let mut payoff = 0.0f64;
            let mut comp = 0.0f64;
            for r in &outcome.trace.rounds {
                payoff += r.value;
                comp += r.comparator_value;
                let cum = cell.alpha * comp - payoff;
                let mut line = format!("{},{}", outcome.seed, r.t);
                for i in 0..d {
                    line.push(',');
                    line.push_str(&fmt17(r.action[i]));
                }
                line.push(',');
                line.push_str(&fmt17(r.value));
                line.push(',');
                line.push_str(&fmt17(cum));
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
    }

    // Aggregate regret across seeds per checkpoint.
    let checkpoints = config.effective_checkpoints();
    let n_seeds = outcomes.len() as f64;
    let mut checkpoint_summaries = Vec::with_capacity(checkpoints.len());
    for &t in &checkpoints {
        let regrets: Vec<f64> = outcomes.iter().map(|o| o.trace.regret_at(t)).collect();
        let mean = regrets.iter().sum::<f64>() / n_seeds;
        let var = regrets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n_seeds;
        let bound = regret_bound(cell.b1, cell.diameter, t);
        checkpoint_summaries.push(CheckpointSummary {
            t,
            mean_regret: mean,
            std_regret: var.sqrt(),
            bound,
            envelope_ratio: mean / bound,
            pass: mean <= bound,
        });
    }

    // Square-root rate over the last decade, when the regret is positive
    // there; non-positive regret satisfies any sublinear envelope.
    let t_end = config.t_rounds;
    let t_start = t_end / 10;
    let slope = if t_start >= 1 {
        let r1: f64 = outcomes.iter().map(|o| o.trace.regret_at(t_start)).sum::<f64>() / n_seeds;
        let r2: f64 = outcomes.iter().map(|o| o.trace.regret_at(t_end)).sum::<f64>() / n_seeds;
        if r1 > 0.0 && r2 > 0.0 {
            Some((r2 / r1).ln() / (t_end as f64 / t_start as f64).ln())
        } else {
            None
        }
    } else {
        None
    };

    let otb = match config.mode {
        Mode::Online => None,
        Mode::Otb => {
            let mean_value = outcomes
                .iter()
                .filter_map(|o| o.otb_value)
                .sum::<f64>()
                / n_seeds;
            let threshold = cell.alpha * cell.comparator.opt
                - 1.5 * cell.b1 * cell.diameter / (config.t_rounds as f64).sqrt();
            Some(OtbSummary { mean_value, threshold, pass: mean_value >= threshold })
        }
    };

    let pass = checkpoint_summaries.iter().all(|c| c.pass)
        && slope.map_or(true, |s| s <= RATE_SLOPE_LIMIT)
        && otb.as_ref().map_or(true, |o| o.pass);

    let summary = Summary {
        config: config.clone(),
        alpha: cell.alpha,
        opt: cell.comparator.opt,
        comparator: cell.comparator.clone(),
        b1: cell.b1,
        diameter: cell.diameter,
        checkpoints: checkpoint_summaries,
        loglog_slope_last_decade: slope,
        otb,
        pass,
    };

    let json_path = out_dir.join("summary.json");
    let file = fs::File::create(&json_path)
        .with_context(|| format!("creating {}", json_path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summary)?;

    // regret.svg: mean cumulative regret per round with the envelope.
    {
        let t_rounds = config.t_rounds;
        let mut mean_cum = vec![0.0f64; t_rounds];
        for outcome in &outcomes {
            let mut payoff = 0.0;
            let mut comp = 0.0;
            for (i, r) in outcome.trace.rounds.iter().enumerate() {
                payoff += r.value;
                comp += r.comparator_value;
                mean_cum[i] += (cell.alpha * comp - payoff) / n_seeds;
            }
        }
        let stride = (t_rounds / 400).max(1);
        let regret_pts: Vec<(f64, f64)> = (0..t_rounds)
            .step_by(stride)
            .chain(std::iter::once(t_rounds - 1))
            .map(|i| ((i + 1) as f64, mean_cum[i]))
            .collect();
        let envelope_pts: Vec<(f64, f64)> = (0..t_rounds)
            .step_by(stride)
            .chain(std::iter::once(t_rounds - 1))
            .map(|i| ((i + 1) as f64, regret_bound(cell.b1, cell.diameter, i + 1)))
            .collect();
        crate::svg::line_plot(
            "mean alpha-regret vs t",
            "t",
            "alpha-regret",
            &[
                crate::svg::Series {
                    label: "mean alpha-regret",
                    color: "#1f77b4",
                    points: &regret_pts,
                },
                crate::svg::Series {
                    label: "(3/2) B1 D sqrt(t)",
                    color: "#d62728",
                    points: &envelope_pts,
                },
            ],
            &out_dir.join("regret.svg"),
        )?;
    }

    Ok(summary)
}
