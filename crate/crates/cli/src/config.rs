//! Experiment configuration: the JSON schema the CLI consumes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use uplin::domains::{ConstraintSpec, ThetaSpec};
use uplin::objectives::ObjectiveSpec;
use uplin::oracles::NoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Online run with per-checkpoint alpha-regret.
    Online,
    /// Online-to-batch conversion: report the value of a uniformly drawn
    /// iterate per seed.
    Otb,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaConfig {
    ConstantOne,
    PNormPower { p: f64, sigma: f64 },
}

impl ThetaConfig {
    pub fn build(&self) -> Result<ThetaSpec<f64>> {
        Ok(match self {
            ThetaConfig::ConstantOne => ThetaSpec::constant_one(),
            ThetaConfig::PNormPower { p, sigma } => ThetaSpec::p_norm_power(*p, *sigma)?,
        })
    }
}

fn default_mode() -> Mode {
    Mode::Online
}

fn default_budget() -> usize {
    20_000
}

/// One experiment cell: a constraint set, one objective (or a sequence the
/// adversary cycles through), the scaling function and curvature, a noise
/// model, the horizon, and the seeds to aggregate over.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub constraint: ConstraintSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectives: Option<Vec<ObjectiveSpec>>,
    pub theta: ThetaConfig,
    pub gamma: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub t_rounds: usize,
    pub seeds: Vec<u64>,
    /// Rounds at which alpha-regret is reported; defaults to `[t_rounds]`.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub comparator_budget: usize,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_rounds == 0 {
            bail!("t_rounds must be >= 1");
        }
        if self.seeds.is_empty() {
            bail!("seeds must be nonempty");
        }
        match (&self.objective, &self.objectives) {
            (None, None) => bail!("one of `objective` or `objectives` is required"),
            (Some(_), Some(_)) => bail!("give either `objective` or `objectives`, not both"),
            (Some(f), None) => {
                if f.dim() != self.constraint.d {
                    bail!("objective dimension {} != constraint dimension {}", f.dim(), self.constraint.d);
                }
            }
            (None, Some(fs)) => {
                if fs.is_empty() {
                    bail!("`objectives` must be nonempty");
                }
                for f in fs {
                    if f.dim() != self.constraint.d {
                        bail!("objective dimension {} != constraint dimension {}", f.dim(), self.constraint.d);
                    }
                }
            }
        }
        for &c in &self.checkpoints {
            if c == 0 || c > self.t_rounds {
                bail!("checkpoint {c} outside 1..={}", self.t_rounds);
            }
        }
        if self.comparator_budget == 0 {
            bail!("comparator_budget must be >= 1");
        }
        Ok(())
    }

    pub fn objective_specs(&self) -> Vec<ObjectiveSpec> {
        match (&self.objective, &self.objectives) {
            (Some(f), _) => vec![f.clone()],
            (_, Some(fs)) => fs.clone(),
            _ => Vec::new(),
        }
    }

    pub fn effective_checkpoints(&self) -> Vec<usize> {
        if self.checkpoints.is_empty() {
            vec![self.t_rounds]
        } else {
            let mut cps = self.checkpoints.clone();
            cps.sort_unstable();
            cps.dedup();
            cps
        }
    }
}
