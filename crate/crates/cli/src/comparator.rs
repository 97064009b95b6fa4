//! Desk-scale comparator oracle: the best fixed feasible point, found by the
//! union of vertex enumeration, projected grids, and multistart projected
//! ascent. The result is a numerical lower bound on OPT, not a guarantee;
//! the method and probe count are reported so thresholds can be audited.

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use uplin::domains::{ConstraintSet, Point};
use uplin::objectives::Objective;

const MULTISTARTS: usize = 64;
const ASCENT_ITERS: usize = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparatorResult {
    /// Best fixed point found (feasible for the searched set).
    pub point: Vec<f64>,
    /// Its (average) objective value.
    pub opt: f64,
    /// Which probe family produced the winner.
    pub method: String,
    /// Improvement still found by a final polish ascent from the winner; a
    /// small value indicates the search had converged.
    pub gap_estimate: f64,
    /// Total number of evaluated candidates.
    pub probes: usize,
}

/// Mean value/gradient over the objective list (the static comparator of a
/// cyclic adversary maximizes the average round payoff).
fn mean_value(objectives: &[Objective<f64>], x: &Point<f64>) -> f64 {
    objectives.iter().map(|f| f.value(x)).sum::<f64>() / objectives.len() as f64
}

fn mean_gradient(objectives: &[Objective<f64>], x: &Point<f64>) -> Point<f64> {
    let d = x.dim();
    let mut acc = vec![0.0; d];
    for f in objectives {
        for (a, g) in acc.iter_mut().zip(f.gradient(x).as_slice()) {
            *a += g;
        }
    }
    Point::new(acc.into_iter().map(|a| a / objectives.len() as f64).collect())
}

struct Search<'a> {
    objectives: &'a [Objective<f64>],
    best_value: f64,
    best_point: Point<f64>,
    best_method: &'static str,
    probes: usize,
}

impl<'a> Search<'a> {
    fn consider(&mut self, x: Point<f64>, method: &'static str) {
        self.probes += 1;
        let v = mean_value(self.objectives, &x);
        if v > self.best_value {
            self.best_value = v;
            self.best_point = x;
            self.best_method = method;
        }
    }

    fn ascend(
        &mut self,
        kstar: &ConstraintSet<f64>,
        start: Point<f64>,
        grad_scale: f64,
        method: &'static str,
    ) {
        let diameter = kstar.diameter().max(1e-9);
        let mut x = start;
        for it in 1..=ASCENT_ITERS {
            let eta = diameter / (grad_scale * (it as f64).sqrt());
            let stepped = x.add_scaled(eta, &mean_gradient(self.objectives, &x));
            x = kstar.project(&stepped).expect("projection of finite iterate");
            self.consider(x.clone(), method);
        }
    }
}

/// Finds the best fixed point of `K*` for the (average of the) objectives.
///
/// Probes, in order: every vertex of `K*` (when enumerable), projected grids
/// of all resolutions up to `budget^(1/d)` (only for `d <= 10`; cumulative
/// resolutions keep OPT monotone in the budget), and 64 multistart projected
/// ascents. A final polish ascent from the winner measures the residual gap.
pub fn find_comparator(
    kstar: &ConstraintSet<f64>,
    objectives: &[Objective<f64>],
    budget: usize,
    rng_seed: u64,
) -> Result<ComparatorResult> {
    if budget == 0 {
        bail!("infeasible budget: must be >= 1");
    }
    if objectives.is_empty() {
        bail!("no objectives given");
    }
    let d = kstar.dim();
    let mut search = Search {
        objectives,
        best_value: f64::NEG_INFINITY,
        best_point: kstar.lex_smallest_vertex(),
        best_method: "vertex-enum",
        probes: 0,
    };
    search.consider(kstar.lex_smallest_vertex(), "vertex-enum");

    // (a) Vertex enumeration.
    if let Ok(vertices) = kstar.vertices() {
        for v in vertices {
            search.consider(v, "vertex-enum");
        }
    }

    // (b) Projected grids, cumulative over resolutions.
    if d <= 10 {
        let max_res = (budget as f64).powf(1.0 / d as f64).floor() as usize;
        for res in 2..=max_res {
            let mut idx = vec![0usize; d];
            'grid: loop {
                let coords: Vec<f64> =
                    idx.iter().map(|&i| i as f64 / (res - 1) as f64).collect();
                let projected = kstar.project(&Point::new(coords))?;
                search.consider(projected, "grid");
                let mut carry = 0;
                loop {
                    idx[carry] += 1;
                    if idx[carry] < res {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                    if carry == d {
                        break 'grid;
                    }
                }
            }
        }
    }

    // (c) Multistart projected ascent on the exact average gradient.
    let grad_scale = objectives
        .iter()
        .map(|f| f.grad_bound())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..MULTISTARTS {
        let start = kstar.sample(&mut rng);
        search.ascend(kstar, start, grad_scale, "multistart-ascent");
    }

    // Polish from the winner; the residual improvement estimates how far the
    // search was from a stationary point.
    let before_polish = search.best_value;
    let winner = search.best_point.clone();
    let winner_method = search.best_method;
    search.ascend(kstar, winner, grad_scale, winner_method);
    let gap_estimate = search.best_value - before_polish;

    Ok(ComparatorResult {
        point: search.best_point.as_slice().to_vec(),
        opt: search.best_value,
        method: search.best_method.to_string(),
        gap_estimate,
        probes: search.probes,
    })
}
