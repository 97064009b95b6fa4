//! Stochastic query oracles.
//!
//! A first-order oracle returns `grad f(y) + xi`, a zeroth-order oracle
//! returns `f(y) + xi`, with `xi` zero-mean and compactly supported so the
//! declared bound `B` holds almost surely (Gaussian noise would break it).
//! The bound is `sup ||grad f||` (resp. `sup |f|`) plus the noise radius;
//! there is no runtime clipping, which would bias the samples. Each oracle
//! owns its RNG and query counter, so an instance is single-threaded; give
//! every concurrent trial its own instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domains::Point;
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::real::{real, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleOrder {
    First,
    Zeroth,
}

/// Additive zero-mean noise, supported on a ball or sphere of the given
/// radius (an interval or `{-r, +r}` in the scalar case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel<T> {
    None,
    BoundedUniform { radius: T },
    BoundedSphere { radius: T },
}

impl<T: Real> NoiseModel<T> {
    pub fn radius(&self) -> T {
        match self {
            NoiseModel::None => T::zero(),
            NoiseModel::BoundedUniform { radius } | NoiseModel::BoundedSphere { radius } => *radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSample<T> {
    Gradient(Point<T>),
    Value(T),
}

/// Stochastic query oracle for one objective.
#[derive(Debug, Clone)]
pub struct QueryOracle<T> {
    order: OracleOrder,
    objective: Objective<T>,
    noise: NoiseModel<T>,
    bound: T,
    queries: u64,
    rng: ChaCha8Rng,
}

impl<T: Real> QueryOracle<T> {
    /// First-order oracle bounded by `B1 = sup ||grad f|| + radius`.
    pub fn first_order(objective: Objective<T>, noise: NoiseModel<T>, seed: u64) -> Result<Self> {
        Self::validate_noise(&noise)?;
        let bound = objective.grad_bound() + noise.radius();
        Ok(QueryOracle {
            order: OracleOrder::First,
            objective,
            noise,
            bound,
            queries: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Zeroth-order oracle bounded by `B0 = sup |f| + radius`.
    pub fn zeroth_order(objective: Objective<T>, noise: NoiseModel<T>, seed: u64) -> Result<Self> {
        Self::validate_noise(&noise)?;
        let bound = objective.value_bound() + noise.radius();
        Ok(QueryOracle {
            order: OracleOrder::Zeroth,
            objective,
            noise,
            bound,
            queries: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn validate_noise(noise: &NoiseModel<T>) -> Result<()> {
        if noise.radius() < T::zero() {
            return Err(Error::InvalidParameter("noise radius must be >= 0".into()));
        }
        Ok(())
    }

    pub fn order(&self) -> OracleOrder {
        self.order
    }

    /// Declared almost-sure bound on sample norms.
    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn objective(&self) -> &Objective<T> {
        &self.objective
    }

    /// One query at `y in [0,1]^d`. Increments the counter by exactly one.
    pub fn query(&mut self, y: &Point<T>) -> Result<OracleSample<T>> {
        if y.dim() != self.objective.dim() {
            return Err(Error::DimensionMismatch { expected: self.objective.dim(), got: y.dim() });
        }
        if !y.in_unit_box(real(crate::domains::MEMBERSHIP_TOL)) {
            return Err(Error::PointOutsideBox);
        }
        self.queries += 1;
        Ok(match self.order {
            OracleOrder::First => {
                let mut g = self.objective.gradient(y).into_vec();
                if let Some(xi) = self.vector_noise(g.len()) {
                    for (gi, ni) in g.iter_mut().zip(xi) {
                        *gi = *gi + ni;
                    }
                }
                OracleSample::Gradient(Point::new(g))
            }
            OracleOrder::Zeroth => {
                OracleSample::Value(self.objective.value(y) + self.scalar_noise())
            }
        })
    }

    /// First-order convenience; errors on a zeroth-order oracle.
    pub fn query_gradient(&mut self, y: &Point<T>) -> Result<Point<T>> {
        if self.order != OracleOrder::First {
            return Err(Error::OracleOrderMismatch { expected: "first" });
        }
        match self.query(y)? {
            OracleSample::Gradient(g) => Ok(g),
            OracleSample::Value(_) => unreachable!(),
        }
    }

    /// Zeroth-order convenience; errors on a first-order oracle.
    pub fn query_value(&mut self, y: &Point<T>) -> Result<T> {
        if self.order != OracleOrder::Zeroth {
            return Err(Error::OracleOrderMismatch { expected: "zeroth" });
        }
        match self.query(y)? {
            OracleSample::Value(v) => Ok(v),
            OracleSample::Gradient(_) => unreachable!(),
        }
    }

    fn vector_noise(&mut self, d: usize) -> Option<Vec<T>> {
        let (radius, on_sphere) = match self.noise {
            NoiseModel::None => return None,
            NoiseModel::BoundedUniform { radius } => (radius, false),
            NoiseModel::BoundedSphere { radius } => (radius, true),
        };
        // Direction from normalized Gaussians; length r (sphere) or
        // r u^{1/d} (uniform in the ball).
        let dir: Vec<f64> = loop {
            let cand: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            let norm = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break cand.iter().map(|v| v / norm).collect();
            }
        };
        let len = if on_sphere {
            radius
        } else {
            radius * real::<T>(self.rng.random::<f64>().powf(1.0 / d as f64))
        };
        Some(dir.into_iter().map(|v| real::<T>(v) * len).collect())
    }

    fn scalar_noise(&mut self) -> T {
        match self.noise {
            NoiseModel::None => T::zero(),
            NoiseModel::BoundedUniform { radius } => {
                radius * real::<T>(2.0 * self.rng.random::<f64>() - 1.0)
            }
            NoiseModel::BoundedSphere { radius } => {
                if self.rng.random::<f64>() < 0.5 {
                    -radius
                } else {
                    radius
                }
            }
        }
    }
}

/// JSON description of a noise model, as used by the harness config:
/// `{"kind": "none"}` or `{"kind": "bounded_uniform"|"bounded_sphere",
/// "radius": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    BoundedUniform { radius: f64 },
    BoundedSphere { radius: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::None
    }
}

impl NoiseSpec {
    pub fn build<T: Real>(&self) -> NoiseModel<T> {
        match self {
            NoiseSpec::None => NoiseModel::None,
            NoiseSpec::BoundedUniform { radius } => {
                NoiseModel::BoundedUniform { radius: real(*radius) }
            }
            NoiseSpec::BoundedSphere { radius } => {
                NoiseModel::BoundedSphere { radius: real(*radius) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> Objective<f64> {
        Objective::monotone_quadratic(vec![2.0, 2.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]])
            .unwrap()
    }

    #[test]
    fn zero_noise_is_exact() {
        let f = quadratic();
        let y = Point::new(vec![0.25, 0.75]);
        let exact_g = f.gradient(&y);
        let exact_v = f.value(&y);
        let mut first = QueryOracle::first_order(f.clone(), NoiseModel::None, 0).unwrap();
        let mut zeroth = QueryOracle::zeroth_order(f, NoiseModel::None, 0).unwrap();
        assert_eq!(first.query_gradient(&y).unwrap(), exact_g);
        assert_eq!(zeroth.query_value(&y).unwrap(), exact_v);
        assert_eq!(first.queries(), 1);
        assert_eq!(zeroth.queries(), 1);
    }

    #[test]
    fn rejects_points_outside_box() {
        let mut o = QueryOracle::first_order(quadratic(), NoiseModel::None, 0).unwrap();
        assert!(matches!(
            o.query(&Point::new(vec![1.2, 0.0])),
            Err(Error::PointOutsideBox)
        ));
        assert!(matches!(
            o.query(&Point::new(vec![0.2])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(o.queries(), 0);
    }

    #[test]
    fn order_mismatch_rejected() {
        let mut first = QueryOracle::first_order(quadratic(), NoiseModel::None, 0).unwrap();
        assert!(first.query_value(&Point::new(vec![0.0, 0.0])).is_err());
        let mut zeroth = QueryOracle::zeroth_order(quadratic(), NoiseModel::None, 0).unwrap();
        assert!(zeroth.query_gradient(&Point::new(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let y = Point::new(vec![0.4, 0.6]);
        let run = |seed: u64| -> Vec<Point<f64>> {
            let mut o = QueryOracle::first_order(
                quadratic(),
                NoiseModel::BoundedUniform { radius: 0.3 },
                seed,
            )
            .unwrap();
            (0..32).map(|_| o.query_gradient(&y).unwrap()).collect()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn declared_bound_never_exceeded() {
        // 10^6 randomized queries split across both noise models.
        let f = quadratic();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for noise in [
            NoiseModel::BoundedUniform { radius: 0.5 },
            NoiseModel::BoundedSphere { radius: 0.5 },
        ] {
            let mut o = QueryOracle::first_order(f.clone(), noise, 1).unwrap();
            let b = o.bound();
            for _ in 0..500_000 {
                let y = Point::<f64>::sample_unit_box(2, &mut rng);
                let g = o.query_gradient(&y).unwrap();
                assert!(g.l2_norm() <= b + 1e-12, "{} > {}", g.l2_norm(), b);
            }
        }
    }

    #[test]
    fn counter_increments_once_per_query() {
        let mut o =
            QueryOracle::zeroth_order(quadratic(), NoiseModel::BoundedSphere { radius: 0.1 }, 3)
                .unwrap();
        let y = Point::new(vec![0.5, 0.5]);
        for i in 1..=257u64 {
            o.query(&y).unwrap();
            assert_eq!(o.queries(), i);
        }
    }

    #[test]
    fn sphere_noise_is_zero_mean() {
        // Componentwise mean over 10^5 queries at a fixed point stays within
        // 3 standard errors of the exact gradient.
        let f = quadratic();
        let y = Point::new(vec![0.3, 0.9]);
        let exact = f.gradient(&y);
        let radius = 0.1;
        let mut o =
            QueryOracle::first_order(f, NoiseModel::BoundedSphere { radius }, 20_240_601).unwrap();
        let n = 100_000usize;
        let mut sum = [0.0f64; 2];
        let mut sumsq = [0.0f64; 2];
        for _ in 0..n {
            let g = o.query_gradient(&y).unwrap();
            for i in 0..2 {
                sum[i] += g[i];
                sumsq[i] += g[i] * g[i];
            }
        }
        for i in 0..2 {
            let mean = sum[i] / n as f64;
            let var = (sumsq[i] / n as f64 - mean * mean).max(0.0);
            let stderr = (var / n as f64).sqrt();
            assert!(
                (mean - exact[i]).abs() <= 3.0 * stderr.max(1e-12),
                "component {i}: mean {mean} vs exact {} (stderr {stderr})",
                exact[i]
            );
        }
    }

    #[test]
    fn noise_spec_builds() {
        let spec: NoiseSpec = serde_json::from_str(r#"{"kind":"bounded_sphere","radius":0.25}"#).unwrap();
        assert_eq!(spec.build::<f64>(), NoiseModel::BoundedSphere { radius: 0.25 });
        let spec: NoiseSpec = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(spec.build::<f64>(), NoiseModel::None);
    }
}
