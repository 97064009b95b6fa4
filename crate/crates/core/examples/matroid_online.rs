//! Surrogate-driven online ascent of a linear objective over the basis
//! polytope of a uniform matroid (the README walkthrough).

use uplin::domains::{ConstraintSet, Point, ThetaSpec};
use uplin::linearization::LinearizationContext;
use uplin::objectives::Objective;
use uplin::online::{run_online, FixedAdversary};
use uplin::oracles::{NoiseModel, QueryOracle};

fn main() -> uplin::Result<()> {
    // Rank-3 uniform matroid on 8 elements; optimize over its basis polytope.
    let set = ConstraintSet::<f64>::make_uniform_matroid(8, 3, false)?;
    let kstar = set.maximal_convex_subset();

    let f = Objective::linear(vec![1.2, 0.9, 0.6, 1.1, 0.8, 1.0, 0.7, 1.3])?;
    let ctx = LinearizationContext::for_set(1.0, ThetaSpec::constant_one(), &set)?;
    let alpha = ctx.alpha_star(&kstar)?;

    let oracle =
        QueryOracle::first_order(f.clone(), NoiseModel::BoundedSphere { radius: 0.1 }, 7)?;
    let mut adversary = FixedAdversary::new(f, oracle);

    // Best fixed point of K* (for linear objectives: the top-k vertex).
    let comparator = Point::new(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let trace = run_online(
        &kstar,
        &ctx,
        &mut adversary,
        alpha,
        &comparator,
        10_000,
        &[100, 1_000, 10_000],
        1,
    )?;
    for (t, regret) in &trace.checkpoints {
        println!("t = {t}: alpha-regret = {regret:.4}");
    }
    Ok(())
}
