//! Projected online gradient ascent driven by surrogate estimates, regret
//! bookkeeping, and an online-to-batch conversion.
//!
//! Each round plays the current action (the action map is the identity on
//! the maximal convex subset), draws one surrogate estimate, and ascends:
//! `x_{t+1} = P_{K*}(x_t + eta_t g_t)` with `eta_t = D / (B1 sqrt(t))`,
//! where `D` is the diameter of `K*` and `B1` the oracle bound. With these
//! step sizes the payoff shortfall against `alpha OPT` is bounded by
//! `(3/2) B1 D sqrt(T)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domains::{ConstraintSet, Point};
use crate::error::{Error, Result};
use crate::linearization::{estimate_surrogate, LinearizationContext, SurrogateEstimate};
use crate::objectives::Objective;
use crate::oracles::QueryOracle;
use crate::real::{real, Real};

/// State of the projected-ascent base algorithm.
#[derive(Debug, Clone)]
pub struct OgaState<T> {
    action: Point<T>,
    step: usize,
    diameter: T,
    grad_bound: T,
}

impl<T: Real> OgaState<T> {
    /// Starts from an explicit feasible point.
    pub fn new(x1: Point<T>, diameter: T, grad_bound: T) -> Result<Self> {
        if !x1.is_finite() {
            return Err(Error::NonFinite("initial action"));
        }
        if !(grad_bound > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "gradient bound B1={grad_bound} must be positive"
            )));
        }
        if diameter < T::zero() || !diameter.is_finite() {
            return Err(Error::InvalidParameter(format!("diameter D={diameter} is invalid")));
        }
        Ok(OgaState { action: x1, step: 1, diameter, grad_bound })
    }

    /// Starts from the deterministic rule: the lexicographically smallest
    /// vertex of `K*`, with `D` its exact diameter.
    pub fn start(kstar: &ConstraintSet<T>, grad_bound: T) -> Result<Self> {
        Self::new(kstar.lex_smallest_vertex(), kstar.diameter(), grad_bound)
    }

    pub fn action(&self) -> &Point<T> {
        &self.action
    }

    /// Current round index `t` (1-based).
    pub fn round(&self) -> usize {
        self.step
    }

    /// `x_{t+1} = P_{K*}(x_t + (D / (B1 sqrt(t))) g_t)`, then `t` advances.
    pub fn step(&mut self, g: &Point<T>, kstar: &ConstraintSet<T>) -> Result<()> {
        if !g.is_finite() {
            return Err(Error::NonFinite("surrogate estimate"));
        }
        let eta = self.diameter / (self.grad_bound * real::<T>(self.step as f64).sqrt());
        self.action = kstar.project(&self.action.add_scaled(eta, g))?;
        self.step += 1;
        Ok(())
    }
}

/// One meta-round: play `y_t = x_t`, draw a single-query surrogate estimate
/// at `x_t`, and pass it to the ascent step.
pub fn ombq_round<T: Real, R: Rng + ?Sized>(
    state: &mut OgaState<T>,
    ctx: &LinearizationContext<T>,
    oracle: &mut QueryOracle<T>,
    kstar: &ConstraintSet<T>,
    rng: &mut R,
) -> Result<(Point<T>, SurrogateEstimate<T>)> {
    let play = state.action().clone();
    let est = estimate_surrogate(ctx, oracle, &play, rng)?;
    state.step(&est.gradient, kstar)?;
    Ok((play, est))
}

/// The per-round objective/oracle pair supplied by the environment. The
/// oracle of round `t` must answer queries about the objective of round `t`,
/// and all oracles share the declared bound.
pub trait Adversary<T> {
    fn dim(&self) -> usize;
    /// Common bound `B1` on every oracle sample.
    fn bound(&self) -> T;
    fn round(&mut self, t: usize) -> (&Objective<T>, &mut QueryOracle<T>);
}

/// The same objective and oracle every round.
#[derive(Debug)]
pub struct FixedAdversary<T> {
    objective: Objective<T>,
    oracle: QueryOracle<T>,
}

impl<T: Real> FixedAdversary<T> {
    pub fn new(objective: Objective<T>, oracle: QueryOracle<T>) -> Self {
        FixedAdversary { objective, oracle }
    }
}

impl<T: Real> Adversary<T> for FixedAdversary<T> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn bound(&self) -> T {
        self.oracle.bound()
    }

    fn round(&mut self, _t: usize) -> (&Objective<T>, &mut QueryOracle<T>) {
        (&self.objective, &mut self.oracle)
    }
}

/// Cycles through a fixed list of objective/oracle pairs.
#[derive(Debug)]
pub struct CyclicAdversary<T> {
    objectives: Vec<Objective<T>>,
    oracles: Vec<QueryOracle<T>>,
}

impl<T: Real> CyclicAdversary<T> {
    pub fn new(objectives: Vec<Objective<T>>, oracles: Vec<QueryOracle<T>>) -> Result<Self> {
        if objectives.is_empty() || objectives.len() != oracles.len() {
            return Err(Error::InvalidParameter(
                "need one oracle per objective, at least one".into(),
            ));
        }
        let d = objectives[0].dim();
        if objectives.iter().any(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: 0 });
        }
        Ok(CyclicAdversary { objectives, oracles })
    }
}

impl<T: Real> Adversary<T> for CyclicAdversary<T> {
    fn dim(&self) -> usize {
        self.objectives[0].dim()
    }

    fn bound(&self) -> T {
        self.oracles.iter().map(|o| o.bound()).fold(T::zero(), T::max)
    }

    fn round(&mut self, t: usize) -> (&Objective<T>, &mut QueryOracle<T>) {
        let i = (t - 1) % self.objectives.len();
        (&self.objectives[i], &mut self.oracles[i])
    }
}

/// Per-round record: the action played (the play equals the action), the
/// surrogate estimate used, the true objective value at the play, and the
/// true value at the comparator.
#[derive(Debug, Clone)]
pub struct RoundRecord<T> {
    pub t: usize,
    pub action: Point<T>,
    pub surrogate: Point<T>,
    pub value: T,
    pub comparator_value: T,
}

/// Full run record with the alpha-regret at the requested checkpoints:
/// `regret(t) = alpha * sum_{s<=t} f_s(u*) - sum_{s<=t} f_s(x_s)`.
#[derive(Debug, Clone)]
pub struct RegretTrace<T> {
    pub alpha: T,
    pub rounds: Vec<RoundRecord<T>>,
    pub checkpoints: Vec<(usize, T)>,
    pub total_payoff: T,
    pub comparator_total: T,
    pub path_length: T,
    pub queries: u64,
}

impl<T: Real> RegretTrace<T> {
    /// Cumulative alpha-regret after `t` rounds.
    pub fn regret_at(&self, t: usize) -> T {
        let t = t.min(self.rounds.len());
        let mut payoff = T::zero();
        let mut comp = T::zero();
        for r in &self.rounds[..t] {
            payoff = payoff + r.value;
            comp = comp + r.comparator_value;
        }
        self.alpha * comp - payoff
    }
}

/// Runs `t_rounds` meta-rounds against the adversary and measures
/// alpha-regret against the fixed comparator. Values entering the regret are
/// taken from the exact evaluators (regret is a property of the true
/// objectives, not of the oracle noise); the oracles only drive the updates.
pub fn run_online<T: Real, A: Adversary<T>>(
    kstar: &ConstraintSet<T>,
    ctx: &LinearizationContext<T>,
    adversary: &mut A,
    alpha: T,
    comparator: &Point<T>,
    t_rounds: usize,
    checkpoints: &[usize],
    seed: u64,
) -> Result<RegretTrace<T>> {
    if t_rounds == 0 {
        return Err(Error::InvalidParameter("t_rounds must be >= 1".into()));
    }
    if adversary.dim() != kstar.dim() {
        return Err(Error::DimensionMismatch { expected: kstar.dim(), got: adversary.dim() });
    }
    if comparator.dim() != kstar.dim() {
        return Err(Error::DimensionMismatch { expected: kstar.dim(), got: comparator.dim() });
    }
    let mut state = OgaState::start(kstar, adversary.bound())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(t_rounds);
    let mut queries = 0u64;
    let mut path_length = T::zero();
    let mut prev_action = state.action().clone();
    for t in 1..=t_rounds {
        let (objective, oracle) = adversary.round(t);
        let (play, est) = ombq_round(&mut state, ctx, oracle, kstar, &mut rng)?;
        queries += est.queries;
        path_length = path_length + play.distance(&prev_action);
        prev_action = play.clone();
        rounds.push(RoundRecord {
            t,
            value: objective.value(&play),
            comparator_value: objective.value(comparator),
            action: play,
            surrogate: est.gradient,
        });
    }
    let total_payoff = rounds.iter().map(|r| r.value).sum();
    let comparator_total = rounds.iter().map(|r| r.comparator_value).sum();
    let mut trace = RegretTrace {
        alpha,
        rounds,
        checkpoints: Vec::new(),
        total_payoff,
        comparator_total,
        path_length,
        queries,
    };
    let mut cps: Vec<usize> = if checkpoints.is_empty() {
        vec![t_rounds]
    } else {
        checkpoints.iter().copied().filter(|&c| c >= 1 && c <= t_rounds).collect()
    };
    cps.sort_unstable();
    cps.dedup();
    trace.checkpoints = cps.into_iter().map(|c| (c, trace.regret_at(c))).collect();
    Ok(trace)
}

/// Online-to-batch conversion for a fixed objective: run the online
/// algorithm and return the action of a uniformly drawn round, so that
/// `E[f(x_tau)] >= alpha OPT - regret / T`.
pub fn online_to_batch<T: Real, A: Adversary<T>>(
    kstar: &ConstraintSet<T>,
    ctx: &LinearizationContext<T>,
    adversary: &mut A,
    alpha: T,
    comparator: &Point<T>,
    t_rounds: usize,
    seed: u64,
) -> Result<(Point<T>, RegretTrace<T>)> {
    let trace = run_online(kstar, ctx, adversary, alpha, comparator, t_rounds, &[], seed)?;
    // Separate stream so the draw of tau does not perturb the run.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_F42D_4C95_7F2D);
    let tau = rng.random_range(0..t_rounds);
    Ok((trace.rounds[tau].action.clone(), trace))
}
