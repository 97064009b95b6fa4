//! Linear surrogates for weakly up-concave objectives.
//!
//! For a scaling function `theta`, curvature `gamma`, and `R_theta` taken
//! from the ambient feasible set, the exponent
//! `l(r, x) = -(gamma / R_theta) * integral_r^1 theta(s x) ds` defines
//!
//! * the exact surrogate `g(f, x) = integral_0^1 e^{l(r,x)} grad f(r x) dr`,
//! * the per-point approximation coefficient
//!   `alpha_x = 1 - exp(-(gamma / R_theta) * integral_0^1 theta(s x) ds)`,
//! * the sampling distribution `Z_x` on `[0,1]` with density proportional to
//!   `e^{l(r,x)}`, and
//! * the unbiased single-query estimator
//!   `w(x) * Q_f(z x)` with `z ~ Z_x` and `w(x) = integral_0^1 e^{l(r,x)} dr`.
//!
//! The surrogate satisfies `<g(f,x), y - x> >= alpha_x f(y) - f(x)` for
//! feasible pairs, which is what the online module exploits. Norm-power and
//! constant `theta` use closed-form exponents; custom `theta` falls back to
//! composite Simpson quadrature.

use rand::Rng;

use crate::domains::{ConstraintSet, Point, ThetaSpec};
use crate::error::{Error, Result};
use crate::oracles::{OracleOrder, QueryOracle};
use crate::real::{real, Real};

/// Sup-norm tolerance for the refined surrogate quadrature.
const SURROGATE_TOL: f64 = 1e-8;
/// Node cap for the refined surrogate quadrature.
const SURROGATE_MAX_NODES: usize = 4097;
/// Cells in the sampler's cumulative-integral table.
const SAMPLER_CELLS: usize = 256;

/// Composite Simpson with `n` nodes (odd, `n >= 3`) on `[a, b]`.
fn simpson<T: Real, F: FnMut(T) -> T>(n: usize, a: T, b: T, mut f: F) -> T {
    debug_assert!(n >= 3 && n % 2 == 1);
    let m = n - 1;
    let h = (b - a) / real::<T>(m as f64);
    let four = real::<T>(4.0);
    let two = real::<T>(2.0);
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { four } else { two };
        acc = acc + w * f(a + h * real::<T>(i as f64));
    }
    acc * h / real::<T>(3.0)
}

/// Parameters the surrogate machinery needs: curvature `gamma`, the scaling
/// function, `R_theta` of the ambient set, the quadrature node count, and the
/// inverse-CDF tolerance.
#[derive(Debug, Clone)]
pub struct LinearizationContext<T> {
    gamma: T,
    theta: ThetaSpec<T>,
    theta_max: T,
    nodes: usize,
    cdf_tol: T,
}

impl<T: Real> LinearizationContext<T> {
    /// `theta_max` is `R_theta` of the ambient set; see [`Self::for_set`].
    pub fn new(gamma: T, theta: ThetaSpec<T>, theta_max: T) -> Result<Self> {
        if gamma <= T::zero() || gamma > T::one() {
            return Err(Error::InvalidParameter(format!("gamma={gamma} must be in (0, 1]")));
        }
        if !(theta_max > T::zero()) || !theta_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "R_theta={theta_max} must be positive and finite"
            )));
        }
        Ok(LinearizationContext { gamma, theta, theta_max, nodes: 129, cdf_tol: real(1e-10) })
    }

    /// Builds the context with `R_theta` computed from the given set (custom
    /// `theta` is spot-checked for monotonicity and positivity first).
    pub fn for_set(gamma: T, theta: ThetaSpec<T>, set: &ConstraintSet<T>) -> Result<Self> {
        theta.spot_check(set.dim(), 256, 0x7E7A)?;
        let r_max = set.radial_bounds(&theta)?.r_max;
        Self::new(gamma, theta, r_max)
    }

    /// Overrides the quadrature node count (odd, `>= 3`).
    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        if nodes < 3 || nodes % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "node count {nodes} must be odd and >= 3"
            )));
        }
        self.nodes = nodes;
        Ok(self)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn theta(&self) -> &ThetaSpec<T> {
        &self.theta
    }

    /// `R_theta` of the ambient set.
    pub fn theta_max(&self) -> T {
        self.theta_max
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn cdf_tol(&self) -> T {
        self.cdf_tol
    }

    /// The exponent `l(r, x)`; always `<= 0`, with `l(1, x) = 0`. Norm-power
    /// `theta` uses `-(gamma ||x||_p^sigma / R_theta) (1 - r^{sigma+1}) /
    /// (sigma+1)`; custom `theta` integrates `theta(s x)` over `[r, 1]` by
    /// Simpson with the context's node count.
    pub fn ell(&self, r: T, x: &Point<T>) -> T {
        let ratio = self.gamma / self.theta_max;
        match &self.theta {
            ThetaSpec::ConstantOne => -ratio * (T::one() - r),
            ThetaSpec::PNormPower { p, sigma } => {
                if *sigma == T::zero() {
                    return -ratio * (T::one() - r);
                }
                let pow = *sigma + T::one();
                let nx = x.lp_norm(*p).powf(*sigma);
                -ratio * nx * (T::one() - r.powf(pow)) / pow
            }
            ThetaSpec::Custom(_) => {
                if r >= T::one() {
                    return T::zero();
                }
                let inner = simpson(self.nodes, r, T::one(), |s| {
                    self.theta.eval(x.scaled(s).as_slice())
                });
                -ratio * inner
            }
        }
    }

    /// `w(x) = integral_0^1 e^{l(r,x)} dr`, by composite Simpson over the
    /// closed-form integrand. Lies in `(e^{l(0,x)}, 1]`.
    pub fn weight_integral(&self, x: &Point<T>) -> T {
        simpson(self.nodes, T::zero(), T::one(), |r| self.ell(r, x).exp())
    }

    /// `alpha_x = 1 - exp(-(gamma / R_theta) integral_0^1 theta(s x) ds)`.
    pub fn alpha_at(&self, x: &Point<T>) -> T {
        let ratio = self.gamma / self.theta_max;
        let inner = match &self.theta {
            ThetaSpec::ConstantOne => T::one(),
            ThetaSpec::PNormPower { p, sigma } => {
                if *sigma == T::zero() {
                    T::one()
                } else {
                    x.lp_norm(*p).powf(*sigma) / (*sigma + T::one())
                }
            }
            ThetaSpec::Custom(_) => {
                simpson(self.nodes, T::zero(), T::one(), |s| {
                    self.theta.eval(x.scaled(s).as_slice())
                })
            }
        };
        T::one() - (-ratio * inner).exp()
    }

    /// Uniform coefficient over the maximal convex subset:
    /// `alpha = 1 - exp(-(gamma / R_theta) inf_{x in K*} integral_0^1
    /// theta(s x) ds)`. For norm powers this is
    /// `1 - exp(-(gamma/(sigma+1)) (r_p/R_p)^sigma)` through the radial
    /// bounds; custom `theta` minimizes the inner integral over the vertices
    /// of `K*`.
    pub fn alpha_star(&self, kstar: &ConstraintSet<T>) -> Result<T> {
        let ratio = self.gamma / self.theta_max;
        let inner = match &self.theta {
            ThetaSpec::ConstantOne => T::one(),
            ThetaSpec::PNormPower { sigma, .. } => {
                if *sigma == T::zero() {
                    T::one()
                } else {
                    let r_theta = kstar.radial_bounds(&self.theta)?.r_min;
                    r_theta / (*sigma + T::one())
                }
            }
            ThetaSpec::Custom(_) => {
                let mut best = T::infinity();
                for v in kstar.vertices()? {
                    let inner = simpson(self.nodes, T::zero(), T::one(), |s| {
                        self.theta.eval(v.scaled(s).as_slice())
                    });
                    best = best.min(inner);
                }
                best
            }
        };
        Ok(T::one() - (-ratio * inner).exp())
    }
}

/// Fixed-node composite Simpson of the surrogate integrand
/// `e^{l(r,x)} grad f(r x)`.
pub fn surrogate_fixed_nodes<T: Real>(
    ctx: &LinearizationContext<T>,
    f: &crate::objectives::Objective<T>,
    x: &Point<T>,
    nodes: usize,
) -> Point<T> {
    debug_assert!(nodes >= 3 && nodes % 2 == 1);
    let d = x.dim();
    let m = nodes - 1;
    let h = T::one() / real::<T>(m as f64);
    let four = real::<T>(4.0);
    let two = real::<T>(2.0);
    let mut acc = vec![T::zero(); d];
    let mut scaled = vec![T::zero(); d];
    for i in 0..=m {
        let r = real::<T>(i as f64) * h;
        let w = if i == 0 || i == m {
            T::one()
        } else if i % 2 == 1 {
            four
        } else {
            two
        };
        let e = ctx.ell(r, x).exp() * w;
        for (s, &xi) in scaled.iter_mut().zip(x.as_slice()) {
            *s = r * xi;
        }
        for (a, g) in acc.iter_mut().zip(f.gradient_at(&scaled)) {
            *a = *a + e * g;
        }
    }
    let three = real::<T>(3.0);
    Point::new(acc.into_iter().map(|a| a * h / three).collect())
}

/// The exact surrogate `g(f, x)`, refined by doubling the node count until
/// successive estimates agree to `1e-8` in sup norm (node cap 4097). On
/// non-convergence the error reports the last residual.
pub fn surrogate_exact<T: Real>(
    ctx: &LinearizationContext<T>,
    f: &crate::objectives::Objective<T>,
    x: &Point<T>,
) -> Result<Point<T>> {
    let tol = real::<T>(SURROGATE_TOL);
    let mut nodes = ctx.nodes();
    let mut prev = surrogate_fixed_nodes(ctx, f, x, nodes);
    let mut residual = T::infinity();
    while 2 * nodes - 1 <= SURROGATE_MAX_NODES {
        nodes = 2 * nodes - 1;
        let next = surrogate_fixed_nodes(ctx, f, x, nodes);
        residual = next
            .as_slice()
            .iter()
            .zip(prev.as_slice())
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        if residual < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged {
        residual: residual.to_f64().unwrap_or(f64::NAN),
        nodes,
    })
}

/// Inverse-CDF sampler for `Z_x`, with
/// `P(Z_x <= z) = integral_0^z e^{l(r,x)} dr / integral_0^1 e^{l(r,x)} dr`.
///
/// A cumulative table of per-cell Simpson integrals over a fixed grid makes
/// CDF evaluation O(1); quantiles come from bisection on the strictly
/// increasing CDF (at most 60 iterations, to the context's tolerance in `z`).
#[derive(Debug, Clone)]
pub struct ZSampler<T> {
    integrand: Integrand<T>,
    cum: Vec<T>,
    weight: T,
    cdf_tol: T,
}

#[derive(Debug, Clone)]
enum Integrand<T> {
    /// `exp(-c (1 - r^pow))`.
    Exponent { c: T, pow: T },
    /// Custom `theta`: the exponent is quadratured per evaluation.
    Quadratured { theta: ThetaSpec<T>, x: Point<T>, ratio: T, nodes: usize },
}

impl<T: Real> Integrand<T> {
    fn eval(&self, r: T) -> T {
        match self {
            Integrand::Exponent { c, pow } => (-*c * (T::one() - r.powf(*pow))).exp(),
            Integrand::Quadratured { theta, x, ratio, nodes } => {
                if r >= T::one() {
                    return T::one();
                }
                let inner =
                    simpson(*nodes, r, T::one(), |s| theta.eval(x.scaled(s).as_slice()));
                (-*ratio * inner).exp()
            }
        }
    }
}

impl<T: Real> ZSampler<T> {
    pub fn new(ctx: &LinearizationContext<T>, x: &Point<T>) -> Self {
        let ratio = ctx.gamma() / ctx.theta_max();
        let integrand = match ctx.theta() {
            ThetaSpec::ConstantOne => Integrand::Exponent { c: ratio, pow: T::one() },
            ThetaSpec::PNormPower { p, sigma } => {
                if *sigma == T::zero() {
                    Integrand::Exponent { c: ratio, pow: T::one() }
                } else {
                    let pow = *sigma + T::one();
                    Integrand::Exponent { c: ratio * x.lp_norm(*p).powf(*sigma) / pow, pow }
                }
            }
            theta @ ThetaSpec::Custom(_) => Integrand::Quadratured {
                theta: theta.clone(),
                x: x.clone(),
                ratio,
                nodes: ctx.nodes(),
            },
        };
        let m = SAMPLER_CELLS;
        let h = T::one() / real::<T>(m as f64);
        let four = real::<T>(4.0);
        let six = real::<T>(6.0);
        let half = real::<T>(0.5);
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(T::zero());
        let mut lo_val = integrand.eval(T::zero());
        for j in 0..m {
            let lo = real::<T>(j as f64) * h;
            let hi = lo + h;
            let hi_val = integrand.eval(hi);
            let mid_val = integrand.eval(lo + half * h);
            let cell = h / six * (lo_val + four * mid_val + hi_val);
            cum.push(cum[j] + cell);
            lo_val = hi_val;
        }
        let weight = cum[m];
        ZSampler { integrand, cum, weight, cdf_tol: ctx.cdf_tol() }
    }

    /// Table-resolution `integral_0^1 e^{l} dr` used to normalize the CDF.
    pub fn weight(&self) -> T {
        self.weight
    }

    /// `P(Z_x <= z)`: nondecreasing, `cdf(0) = 0`, `cdf(1) = 1`.
    pub fn cdf(&self, z: T) -> T {
        let z = z.max(T::zero()).min(T::one());
        let m = self.cum.len() - 1;
        let mf = real::<T>(m as f64);
        let cell = (z * mf).to_f64().map(|v| v.floor() as usize).unwrap_or(0).min(m - 1);
        let lo = real::<T>(cell as f64) / mf;
        let dz = z - lo;
        let four = real::<T>(4.0);
        let six = real::<T>(6.0);
        let half = real::<T>(0.5);
        let partial = if dz > T::zero() {
            dz / six
                * (self.integrand.eval(lo)
                    + four * self.integrand.eval(lo + half * dz)
                    + self.integrand.eval(z))
        } else {
            T::zero()
        };
        ((self.cum[cell] + partial) / self.weight).min(T::one())
    }

    /// Inverse CDF by bisection: `quantile(0) = 0`, `quantile(1) = 1`.
    pub fn quantile(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        if u >= T::one() {
            return T::one();
        }
        let mut lo = T::zero();
        let mut hi = T::one();
        let half = real::<T>(0.5);
        for _ in 0..60 {
            if hi - lo <= self.cdf_tol {
                break;
            }
            let mid = half * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        half * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(real(rng.random::<f64>()))
    }
}

/// One draw from `Z_x`.
pub fn sample_z<T: Real, R: Rng + ?Sized>(
    ctx: &LinearizationContext<T>,
    x: &Point<T>,
    rng: &mut R,
) -> T {
    ZSampler::new(ctx, x).sample(rng)
}

/// Single-query surrogate estimate: the weighted oracle sample
/// `w(x) * Q_f(z x)`, its weight, the sampled `z`, and the queries consumed.
#[derive(Debug, Clone)]
pub struct SurrogateEstimate<T> {
    pub gradient: Point<T>,
    pub weight: T,
    pub z: T,
    pub queries: u64,
}

/// Reusable estimator for a fixed query point: the weight integral and the
/// sampler table are built once, each [`Self::estimate`] call costs one
/// oracle query.
#[derive(Debug, Clone)]
pub struct SurrogateSampler<T> {
    x: Point<T>,
    weight: T,
    z: ZSampler<T>,
}

impl<T: Real> SurrogateSampler<T> {
    pub fn new(ctx: &LinearizationContext<T>, x: &Point<T>) -> Self {
        SurrogateSampler {
            x: x.clone(),
            weight: ctx.weight_integral(x),
            z: ZSampler::new(ctx, x),
        }
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    /// Unbiased estimate of the surrogate from exactly one first-order query
    /// at `z x`; the output norm is bounded by the oracle bound since the
    /// weight is at most 1.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        oracle: &mut QueryOracle<T>,
        rng: &mut R,
    ) -> Result<SurrogateEstimate<T>> {
        if oracle.order() != OracleOrder::First {
            return Err(Error::OracleOrderMismatch { expected: "first" });
        }
        let z = self.z.sample(rng);
        let sample = oracle.query_gradient(&self.x.scaled(z))?;
        Ok(SurrogateEstimate {
            gradient: sample.scaled(self.weight),
            weight: self.weight,
            z,
            queries: 1,
        })
    }
}

/// One-shot variant of [`SurrogateSampler::estimate`].
pub fn estimate_surrogate<T: Real, R: Rng + ?Sized>(
    ctx: &LinearizationContext<T>,
    oracle: &mut QueryOracle<T>,
    x: &Point<T>,
    rng: &mut R,
) -> Result<SurrogateEstimate<T>> {
    if oracle.order() != OracleOrder::First {
        return Err(Error::OracleOrderMismatch { expected: "first" });
    }
    SurrogateSampler::new(ctx, x).estimate(oracle, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Objective;
    use crate::oracles::NoiseModel;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point<f64> {
        Point::new(v.to_vec())
    }

    fn ctx_sigma0() -> LinearizationContext<f64> {
        LinearizationContext::new(1.0, ThetaSpec::constant_one(), 1.0).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(LinearizationContext::new(0.0, ThetaSpec::<f64>::constant_one(), 1.0).is_err());
        assert!(LinearizationContext::new(1.5, ThetaSpec::<f64>::constant_one(), 1.0).is_err());
        assert!(LinearizationContext::new(1.0, ThetaSpec::<f64>::constant_one(), 0.0).is_err());
        assert!(ctx_sigma0().with_nodes(4).is_err());
        assert!(ctx_sigma0().with_nodes(1).is_err());
    }

    #[test]
    fn ell_closed_forms() {
        let ctx = ctx_sigma0();
        let x = pt(&[0.3, 0.8]);
        assert_relative_eq!(ctx.ell(0.0, &x), -1.0, epsilon = 1e-15);
        assert_relative_eq!(ctx.ell(0.25, &x), -0.75, epsilon = 1e-15);
        assert_eq!(ctx.ell(1.0, &x), 0.0);

        // sigma > 0 at the origin: theta(s 0) = 0, so l is identically 0.
        let ctx1 =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(1.0).unwrap(), 3.0).unwrap();
        let zero = pt(&[0.0, 0.0]);
        assert_eq!(ctx1.ell(0.0, &zero), 0.0);
        assert_eq!(ctx1.ell(0.5, &zero), 0.0);

        // l1^sigma closed form: -(gamma ||x||_1^s / R) (1 - r^{s+1})/(s+1).
        let x = pt(&[0.5, 1.0]);
        let expect = |r: f64| -(1.5 / 3.0) * (1.0 - r * r) / 2.0;
        for r in [0.0, 0.3, 0.9, 1.0] {
            assert_relative_eq!(ctx1.ell(r, &x), expect(r), epsilon = 1e-14);
        }
    }

    // Dual route: the closed-form exponent must agree with a custom theta
    // wrapping the same function, evaluated by quadrature.
    #[test]
    fn ell_closed_form_matches_quadrature() {
        let sigma = 2.0;
        let closed =
            LinearizationContext::new(0.8, ThetaSpec::l1_power(sigma).unwrap(), 5.0).unwrap();
        let quad = LinearizationContext::new(
            0.8,
            ThetaSpec::custom(move |v: &[f64]| {
                v.iter().map(|c| c.abs()).sum::<f64>().powf(sigma)
            }),
            5.0,
        )
        .unwrap()
        .with_nodes(513)
        .unwrap();
        let x = pt(&[0.7, 0.2, 0.9]);
        for r in [0.0, 0.2, 0.5, 0.8, 1.0] {
            assert_relative_eq!(closed.ell(r, &x), quad.ell(r, &x), epsilon = 1e-9);
        }
        assert_relative_eq!(
            closed.weight_integral(&x),
            quad.weight_integral(&x),
            epsilon = 1e-9
        );
        assert_relative_eq!(closed.alpha_at(&x), quad.alpha_at(&x), epsilon = 1e-9);
    }

    #[test]
    fn weight_integral_values() {
        // integral_0^1 e^{r-1} dr = 1 - 1/e.
        let ctx = ctx_sigma0();
        let x = pt(&[0.5]);
        assert_relative_eq!(ctx.weight_integral(&x), 1.0 - (-1.0f64).exp(), epsilon = 1e-9);

        // gamma -> 0: l -> 0 and the weight tends to 1.
        let tiny = LinearizationContext::new(1e-9, ThetaSpec::constant_one(), 1.0).unwrap();
        assert!((tiny.weight_integral(&x) - 1.0).abs() < 1e-8);

        // x = 0 with sigma > 0: l is identically 0, weight exactly 1.
        let ctx1 =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(2.0).unwrap(), 4.0).unwrap();
        assert!((ctx1.weight_integral(&pt(&[0.0, 0.0])) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn surrogate_linear_is_weighted_gradient() {
        let ctx = ctx_sigma0();
        let a = vec![0.7, 0.2, 1.3];
        let f = Objective::linear(a.clone()).unwrap();
        let x = pt(&[0.4, 0.9, 0.1]);
        let w = ctx.weight_integral(&x);
        let g = surrogate_exact(&ctx, &f, &x).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g[i], w * a[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn surrogate_at_origin() {
        let ctx1 =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(1.0).unwrap(), 3.0).unwrap();
        let f = Objective::monotone_quadratic(
            vec![2.0, 2.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let zero = pt(&[0.0, 0.0]);
        let g = surrogate_exact(&ctx1, &f, &zero).unwrap();
        // w(0) = 1 and grad f(0) = a.
        assert_relative_eq!(g[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(g[1], 2.0, epsilon = 1e-10);
    }

    // Independent quadrature route: dense trapezoid with 10^5 intervals.
    #[test]
    fn surrogate_matches_dense_trapezoid() {
        let ctx = ctx_sigma0();
        let f = Objective::monotone_quadratic(
            vec![2.0, 2.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let x = pt(&[0.8, 0.35]);
        let n = 100_000usize;
        let h = 1.0 / n as f64;
        let mut acc = [0.0f64; 2];
        for i in 0..=n {
            let r = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let e = (r - 1.0f64).exp() * w;
            let g = f.gradient(&x.scaled(r));
            acc[0] += e * g[0];
            acc[1] += e * g[1];
        }
        let reference = [acc[0] * h, acc[1] * h];
        let g = surrogate_exact(&ctx, &f, &x).unwrap();
        assert_relative_eq!(g[0], reference[0], epsilon = 1e-8);
        assert_relative_eq!(g[1], reference[1], epsilon = 1e-8);
    }

    #[test]
    fn surrogate_doubling_is_converged() {
        let ctx =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(2.0).unwrap(), 9.0).unwrap();
        let f = Objective::norm_power(3, 3.0).unwrap();
        let x = pt(&[0.9, 0.5, 0.7]);
        let a = surrogate_fixed_nodes(&ctx, &f, &x, 2049);
        let b = surrogate_fixed_nodes(&ctx, &f, &x, 4097);
        let diff = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(&u, &v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "doubling still moves the estimate by {diff}");
    }

    #[test]
    fn surrogate_nonconvergence_reported() {
        // A discontinuous scaling function defeats the quadrature; the
        // refinement must report its last residual instead of silently
        // returning.
        let theta = ThetaSpec::custom(|v: &[f64]| {
            let s: f64 = v.iter().sum();
            if s > 0.4 {
                s + 1000.0
            } else {
                s
            }
        });
        let ctx = LinearizationContext::new(1.0, theta, 1001.0).unwrap();
        let f = Objective::linear(vec![1.0]).unwrap();
        match surrogate_exact(&ctx, &f, &pt(&[0.9])) {
            Err(Error::QuadratureNotConverged { residual, nodes }) => {
                assert!(residual > 1e-8);
                assert_eq!(nodes, 4097);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn alpha_values() {
        // theta = 1, gamma = 1: alpha_x = 1 - 1/e for every x.
        let ctx = ctx_sigma0();
        for x in [pt(&[0.0, 0.0]), pt(&[0.3, 0.9]), pt(&[1.0, 1.0])] {
            assert_relative_eq!(ctx.alpha_at(&x), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        }

        // x = 0 with sigma > 0: alpha_0 = 0.
        let ctx1 =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(1.0).unwrap(), 3.0).unwrap();
        assert_eq!(ctx1.alpha_at(&pt(&[0.0, 0.0, 0.0])), 0.0);

        // ||x||_1 = R_theta with sigma = 1: alpha_x = 1 - e^{-1/2}.
        let x = pt(&[1.0, 1.0, 1.0]);
        assert_relative_eq!(ctx1.alpha_at(&x), 1.0 - (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn alpha_star_closed_forms() {
        let basis = ConstraintSet::<f64>::make_uniform_matroid(8, 3, true).unwrap();

        let ctx = LinearizationContext::for_set(1.0, ThetaSpec::constant_one(), &basis).unwrap();
        assert!((ctx.alpha_star(&basis).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-12);

        let ctx =
            LinearizationContext::for_set(1.0, ThetaSpec::l1_power(1.0).unwrap(), &basis).unwrap();
        assert!((ctx.alpha_star(&basis).unwrap() - (1.0 - (-0.5f64).exp())).abs() < 1e-12);

        let ctx =
            LinearizationContext::for_set(1.0, ThetaSpec::l1_power(2.0).unwrap(), &basis).unwrap();
        assert!((ctx.alpha_star(&basis).unwrap() - (1.0 - (-1.0f64 / 3.0).exp())).abs() < 1e-12);
    }

    #[test]
    fn sampler_cdf_endpoints_and_monotonicity() {
        let ctx =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(1.0).unwrap(), 2.0).unwrap();
        let s = ZSampler::new(&ctx, &pt(&[0.9, 0.8]));
        assert_eq!(s.cdf(0.0), 0.0);
        assert!((s.cdf(1.0) - 1.0).abs() <= 1e-12);
        assert_eq!(s.quantile(0.0), 0.0);
        assert_eq!(s.quantile(1.0), 1.0);
        let mut prev = 0.0;
        for i in 0..=200 {
            let f = s.cdf(i as f64 / 200.0);
            assert!(f >= prev - 1e-15, "CDF must be nondecreasing");
            prev = f;
        }
    }

    #[test]
    fn sampler_median_sigma0() {
        // F(z) = (e^z - 1)/(e - 1); the median is ln((e+1)/2).
        let ctx = ctx_sigma0();
        let s = ZSampler::new(&ctx, &pt(&[0.5]));
        let median = s.quantile(0.5);
        assert!((median - 0.6201145069582775).abs() < 1e-6, "median {median}");
    }

    #[test]
    fn sampler_uniform_when_exponent_vanishes() {
        // x = 0 with sigma > 0 makes l identically 0, so Z is uniform.
        let ctx =
            LinearizationContext::new(1.0, ThetaSpec::l1_power(1.0).unwrap(), 2.0).unwrap();
        let s = ZSampler::new(&ctx, &pt(&[0.0, 0.0]));
        for u in [0.1, 0.25, 0.5, 0.75, 0.9] {
            assert_relative_eq!(s.quantile(u), u, epsilon = 1e-9);
        }
    }

    #[test]
    fn sampler_ks_against_closed_form() {
        // sigma = 0 has the analytic CDF (e^{gamma z} - 1)/(e^{gamma} - 1).
        let ctx = ctx_sigma0();
        let s = ZSampler::new(&ctx, &pt(&[0.4]));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 20_000usize;
        let mut samples: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |z: f64| (z.exp() - 1.0) / (1.0f64.exp() - 1.0);
        let mut ks = 0.0f64;
        for (i, &z) in samples.iter().enumerate() {
            let f = cdf(z);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn estimator_linear_is_exact() {
        let ctx = ctx_sigma0();
        let a = vec![1.0, 0.5];
        let f = Objective::linear(a.clone()).unwrap();
        let mut oracle = QueryOracle::first_order(f, NoiseModel::None, 0).unwrap();
        let x = pt(&[0.6, 0.8]);
        let w = ctx.weight_integral(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..16 {
            let est = estimate_surrogate(&ctx, &mut oracle, &x, &mut rng).unwrap();
            // Constant gradient: every single estimate equals w(x) a exactly.
            assert_eq!(est.gradient.as_slice(), &[w * a[0], w * a[1]]);
            assert_eq!(est.queries, 1);
            assert!(est.z >= 0.0 && est.z <= 1.0);
            assert!(est.weight > 0.0 && est.weight <= 1.0);
        }
        assert_eq!(oracle.queries(), 16);
    }

    #[test]
    fn estimator_respects_bound_and_order() {
        let ctx = ctx_sigma0();
        let f = Objective::monotone_quadratic(
            vec![2.0, 2.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let mut zeroth = QueryOracle::zeroth_order(f.clone(), NoiseModel::None, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(estimate_surrogate(&ctx, &mut zeroth, &pt(&[0.1, 0.1]), &mut rng).is_err());

        let mut oracle =
            QueryOracle::first_order(f, NoiseModel::BoundedSphere { radius: 0.2 }, 0).unwrap();
        let b1 = oracle.bound();
        let x = pt(&[0.9, 0.4]);
        let sampler = SurrogateSampler::new(&ctx, &x);
        for _ in 0..2000 {
            let est = sampler.estimate(&mut oracle, &mut rng).unwrap();
            assert!(est.gradient.l2_norm() <= b1 + 1e-12);
        }
    }
}
