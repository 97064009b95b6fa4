//! Seeded Monte-Carlo checks: estimator unbiasedness, the sampler law, the
//! surrogate inequality on feasible pairs, and query accounting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uplin::domains::{ConstraintSet, Point, ThetaSpec};
use uplin::linearization::{
    surrogate_exact, LinearizationContext, SurrogateSampler, ZSampler,
};
use uplin::objectives::{ClassTag, Objective};
use uplin::online::{run_online, Adversary, CyclicAdversary};
use uplin::oracles::{NoiseModel, QueryOracle};

fn dr_quadratic_4d() -> Objective<f64> {
    let a = vec![1.2, 1.0, 0.9, 1.1];
    let mut h = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            h[i][j] = 0.2 / (1.0 + (i as f64 - j as f64).abs());
        }
    }
    Objective::monotone_quadratic(a, h).unwrap()
}

// Componentwise mean of single-query estimates stays within 4 standard
// errors of the exact surrogate quadrature.
#[test]
fn estimator_is_unbiased() {
    let f = dr_quadratic_4d();
    let ctx = LinearizationContext::new(1.0, ThetaSpec::constant_one(), 1.0).unwrap();
    let mut oracle =
        QueryOracle::first_order(f.clone(), NoiseModel::BoundedSphere { radius: 0.15 }, 41).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(4, 2, true).unwrap();
    for trial in 0..3 {
        let x = kstar.sample(&mut rng);
        let exact = surrogate_exact(&ctx, &f, &x).unwrap();
        let sampler = SurrogateSampler::new(&ctx, &x);
        let n = 50_000usize;
        let mut sum = vec![0.0f64; 4];
        let mut sumsq = vec![0.0f64; 4];
        for _ in 0..n {
            let est = sampler.estimate(&mut oracle, &mut rng).unwrap();
            for i in 0..4 {
                sum[i] += est.gradient[i];
                sumsq[i] += est.gradient[i] * est.gradient[i];
            }
        }
        for i in 0..4 {
            let mean = sum[i] / n as f64;
            let var = (sumsq[i] / n as f64 - mean * mean).max(0.0);
            let stderr = (var / n as f64).sqrt().max(1e-12);
            assert!(
                (mean - exact[i]).abs() <= 4.0 * stderr,
                "trial {trial} component {i}: mean {mean} vs exact {} ({}x stderr)",
                exact[i],
                (mean - exact[i]).abs() / stderr
            );
        }
    }
}

// Empirical law of Z_x against a high-resolution reference CDF for several
// curvature exponents.
#[test]
fn sampler_matches_reference_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    for sigma in [0.0, 1.0, 2.0] {
        let theta = ThetaSpec::l1_power(sigma).unwrap();
        let r_max = 2.0f64.powf(sigma);
        let ctx = LinearizationContext::new(1.0, theta, r_max).unwrap();
        let x = Point::new(vec![0.9, 0.7]);
        let sampler = ZSampler::new(&ctx, &x);

        // Reference: dense trapezoid of the closed-form integrand.
        let c = ctx.gamma() / ctx.theta_max() * x.l1_norm().powf(sigma) / (sigma + 1.0);
        let pow = if sigma == 0.0 { 1.0 } else { sigma + 1.0 };
        let dens = |r: f64| (-c * (1.0 - r.powf(pow))).exp();
        let m = 20_000usize;
        let mut cum = vec![0.0f64; m + 1];
        for j in 0..m {
            let (a, b) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
            cum[j + 1] = cum[j] + 0.5 * (dens(a) + dens(b)) * (b - a);
        }
        let total = cum[m];
        let cdf = |z: f64| {
            let idx = ((z * m as f64) as usize).min(m);
            cum[idx] / total
        };

        let n = 30_000usize;
        let mut samples: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &z) in samples.iter().enumerate() {
            let fz = cdf(z);
            ks = ks.max((fz - i as f64 / n as f64).abs());
            ks = ks.max((fz - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.015, "sigma={sigma}: KS statistic {ks}");
    }
}

// The surrogate inequality <g(f,x), y-x> >= alpha_x f(y) - f(x) on feasible
// pairs, in both the pointwise and the uniform-coefficient form.
#[test]
fn surrogate_inequality_on_feasible_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let cases: Vec<(Objective<f64>, ConstraintSet<f64>)> = vec![
        (dr_quadratic_4d(), ConstraintSet::make_uniform_matroid(4, 2, false).unwrap()),
        (Objective::norm_power(4, 2.0).unwrap(), ConstraintSet::make_uniform_matroid(4, 2, false).unwrap()),
        (Objective::norm_power(3, 3.0).unwrap(), ConstraintSet::make_box(3).unwrap()),
        (Objective::linear(vec![0.8, 0.3, 1.1]).unwrap(), ConstraintSet::make_box(3).unwrap()),
    ];
    for (f, set) in &cases {
        let (gamma, theta) = match f.class() {
            ClassTag::PSigma { gamma, sigma, .. } => (gamma, ThetaSpec::l1_power(sigma).unwrap()),
            ClassTag::DrSubmodular { gamma } => (gamma, ThetaSpec::constant_one()),
            other => panic!("uncertified objective {other:?}"),
        };
        let ctx = LinearizationContext::for_set(gamma, theta, set).unwrap();
        let kstar = set.maximal_convex_subset();
        let alpha = ctx.alpha_star(&kstar).unwrap();
        for _ in 0..300 {
            // Pointwise form on pairs from the ambient set.
            let x = set.sample(&mut rng);
            let y = set.sample(&mut rng);
            let g = surrogate_exact(&ctx, f, &x).unwrap();
            let lhs = g.dot(&y.sub(&x));
            let rhs = ctx.alpha_at(&x) * f.value(&y) - f.value(&x);
            assert!(lhs >= rhs - 1e-6, "pointwise: {lhs} < {rhs}");

            // Uniform form on pairs from the maximal subset.
            let xs = kstar.sample(&mut rng);
            let ys = kstar.sample(&mut rng);
            let gs = surrogate_exact(&ctx, f, &xs).unwrap();
            let lhs = gs.dot(&ys.sub(&xs));
            let rhs = alpha * f.value(&ys) - f.value(&xs);
            assert!(lhs >= rhs - 1e-6, "uniform: {lhs} < {rhs}");
        }
    }
}

// Total query count equals the number of rounds even when the adversary
// cycles through several objectives.
#[test]
fn query_accounting_over_cyclic_adversary() {
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(3, 2, true).unwrap();
    let ctx = LinearizationContext::new(1.0, ThetaSpec::constant_one(), 1.0).unwrap();
    let objectives = vec![
        Objective::linear(vec![1.0, 0.4, 0.2]).unwrap(),
        Objective::linear(vec![0.2, 0.4, 1.0]).unwrap(),
    ];
    let oracles: Vec<_> = objectives
        .iter()
        .enumerate()
        .map(|(i, f)| {
            QueryOracle::first_order(f.clone(), NoiseModel::BoundedUniform { radius: 0.05 }, i as u64)
                .unwrap()
        })
        .collect();
    let mut adv = CyclicAdversary::new(objectives, oracles).unwrap();
    let t = 257usize;
    let trace = run_online(
        &kstar,
        &ctx,
        &mut adv,
        1.0 - (-1.0f64).exp(),
        &Point::new(vec![1.0, 1.0, 0.0]),
        t,
        &[t],
        11,
    )
    .unwrap();
    assert_eq!(trace.queries, t as u64);
    let (_, o1) = adv.round(1);
    let q1 = o1.queries();
    let (_, o2) = adv.round(2);
    assert_eq!(q1 + o2.queries(), t as u64);
}
