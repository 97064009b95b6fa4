//! Test objectives and curvature-class checkers.
//!
//! Objectives carry exact value/gradient evaluators on `[0,1]^d`, a declared
//! class tag, and the bounds `M0` (value) and `B` (gradient norm) the oracles
//! are built from. The checkers produce numerical membership certificates for
//! weak up-concavity (both directional inequalities), one-sided smoothness,
//! and the containment chain between the two.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{Point, ThetaSpec};
use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Declared curvature class of an objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassTag<T> {
    DrSubmodular { gamma: T },
    UpConcave { gamma: T },
    PSigma { gamma: T, p: T, sigma: T },
    Oss { sigma: T },
    Unknown,
}

type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Differentiable monotone objective on `[0,1]^d` with exact evaluators.
#[derive(Clone)]
pub struct Objective<T> {
    dim: usize,
    value: ValueFn<T>,
    gradient: GradFn<T>,
    class: ClassTag<T>,
    value_bound: T,
    grad_bound: T,
}

impl<T: Real> Objective<T> {
    /// Wraps caller-supplied evaluators. The constructors below are the
    /// vetted built-in families; this is the escape hatch for custom ones.
    pub fn from_fns(
        dim: usize,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        class: ClassTag<T>,
        value_bound: T,
        grad_bound: T,
    ) -> Self {
        Objective {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            class,
            value_bound,
            grad_bound,
        }
    }

    /// `f(x) = a'x - x'Hx/2` with `a >= H1` entrywise, `a >= 0`, `H >= 0`
    /// symmetric. The gradient `a - Hx` is then nonnegative on the box, the
    /// function is monotone and nonnegative, and `gamma grad f(y) <= grad f(x)`
    /// holds with `gamma = 1` for `y >= x`. Bounds: `B = ||a||_2`,
    /// `M0 = f(1)`.
    pub fn monotone_quadratic(a: Vec<T>, h: Vec<Vec<T>>) -> Result<Self> {
        let d = a.len();
        if d == 0 {
            return Err(Error::InvalidObjective("dimension must be >= 1".into()));
        }
        if h.len() != d || h.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidObjective(format!("H must be {d}x{d}")));
        }
        for i in 0..d {
            if a[i] < T::zero() {
                return Err(Error::InvalidObjective(format!("a[{i}] < 0")));
            }
            for j in 0..d {
                if h[i][j] < T::zero() {
                    return Err(Error::InvalidObjective(format!("H[{i}][{j}] < 0")));
                }
                if h[i][j] != h[j][i] {
                    return Err(Error::InvalidObjective("H must be symmetric".into()));
                }
            }
            let row_sum: T = h[i].iter().copied().sum();
            if a[i] < row_sum {
                return Err(Error::InvalidObjective(format!(
                    "a[{i}] = {} < (H 1)[{i}] = {}; gradient would go negative on the box",
                    a[i], row_sum
                )));
            }
        }
        let grad_bound = a.iter().map(|&v| v * v).sum::<T>().sqrt();
        let half = real::<T>(0.5);
        let ones_quad: T = h.iter().flatten().copied().sum();
        let value_bound = a.iter().copied().sum::<T>() - half * ones_quad;
        let (av, hv) = (a.clone(), h.clone());
        let value = move |x: &[T]| {
            let lin: T = av.iter().zip(x).map(|(&ai, &xi)| ai * xi).sum();
            let quad: T = hv
                .iter()
                .zip(x)
                .map(|(row, &xi)| xi * row.iter().zip(x).map(|(&hij, &xj)| hij * xj).sum::<T>())
                .sum();
            lin - half * quad
        };
        let gradient = move |x: &[T]| {
            a.iter()
                .zip(&h)
                .map(|(&ai, row)| ai - row.iter().zip(x).map(|(&hij, &xj)| hij * xj).sum::<T>())
                .collect()
        };
        Ok(Objective {
            dim: d,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            class: ClassTag::DrSubmodular { gamma: T::one() },
            value_bound,
            grad_bound,
        })
    }

    /// Linear objective `f(x) = a'x` (a monotone quadratic with `H = 0`).
    pub fn linear(a: Vec<T>) -> Result<Self> {
        let d = a.len();
        Self::monotone_quadratic(a, vec![vec![T::zero(); d]; d])
    }

    /// `f(x) = ||x||_1^m` for `m >= 1`. Gradient `m ||x||_1^{m-1} 1`, so
    /// `B = m d^{m-1} sqrt(d)` and `M0 = d^m`. The candidate class
    /// `(gamma, p, sigma) = (1, 1, m-1)` is certified at construction by the
    /// up-concavity checker on 10^4 pairs; on failure the tag is `Unknown`.
    pub fn norm_power(d: usize, m: T) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidObjective("dimension must be >= 1".into()));
        }
        if m < T::one() {
            return Err(Error::InvalidObjective(format!("exponent m={m} must be >= 1")));
        }
        let df = real::<T>(d as f64);
        let value = move |x: &[T]| x.iter().map(|c| c.abs()).sum::<T>().powf(m);
        let gradient = move |x: &[T]| {
            let s: T = x.iter().map(|c| c.abs()).sum();
            let g = m * s.powf(m - T::one());
            vec![g; x.len()]
        };
        let mut obj = Objective {
            dim: d,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            class: ClassTag::Unknown,
            value_bound: df.powf(m),
            grad_bound: m * df.powf(m - T::one()) * df.sqrt(),
        };
        let sigma = m - T::one();
        let theta = ThetaSpec::l1_power(sigma)?;
        let report = check_up_concave(&obj, T::one(), &theta, 10_000, CERTIFICATION_SEED)?;
        if report.max_violation() <= real(1e-9) {
            obj.class = ClassTag::PSigma { gamma: T::one(), p: T::one(), sigma };
        }
        Ok(obj)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self) -> ClassTag<T> {
        self.class
    }

    /// Value bound `M0` over the box.
    pub fn value_bound(&self) -> T {
        self.value_bound
    }

    /// Gradient norm bound `B` over the box.
    pub fn grad_bound(&self) -> T {
        self.grad_bound
    }

    pub fn value(&self, x: &Point<T>) -> T {
        debug_assert_eq!(x.dim(), self.dim);
        (self.value)(x.as_slice())
    }

    pub fn gradient(&self, x: &Point<T>) -> Point<T> {
        debug_assert_eq!(x.dim(), self.dim);
        Point::new((self.gradient)(x.as_slice()))
    }

    pub fn value_at(&self, x: &[T]) -> T {
        (self.value)(x)
    }

    pub fn gradient_at(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }
}

impl<T: fmt::Debug> fmt::Debug for Objective<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim)
            .field("class", &self.class)
            .field("value_bound", &self.value_bound)
            .field("grad_bound", &self.grad_bound)
            .finish()
    }
}

const CERTIFICATION_SEED: u64 = 0xC0FF_EE00;

/// Points with any coordinate below this are excluded as the `x` of a checker
/// pair: the definitions only quantify over `y >= x != 0`.
const MIN_X_INF_NORM: f64 = 1e-3;

/// Numerical membership certificate. Violations are the positive parts of
/// the checked inequalities, maximized over tested pairs; the witness is the
/// pair (`x`, `y`) attaining the worst margin.
#[derive(Debug, Clone)]
pub struct MembershipReport<T> {
    pub pairs_tested: usize,
    pub max_lower_violation: T,
    pub max_upper_violation: T,
    pub witness: Option<(Point<T>, Point<T>)>,
}

impl<T: Real> MembershipReport<T> {
    pub fn max_violation(&self) -> T {
        self.max_lower_violation.max(self.max_upper_violation)
    }
}

/// Draws `x` uniform on the box (resampling until `||x||_inf >= 1e-3`) and
/// `y = x + u` with `u` uniform on `[0, 1-x]` coordinate-wise.
fn sample_ordered_pair<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> (Point<T>, Point<T>) {
    let min_inf = real::<T>(MIN_X_INF_NORM);
    let x = loop {
        let cand = Point::<T>::sample_unit_box(d, rng);
        if cand.linf_norm() >= min_inf {
            break cand;
        }
    };
    let y: Vec<T> = x
        .as_slice()
        .iter()
        .map(|&xi| xi + real::<T>(rng.random::<f64>()) * (T::one() - xi))
        .collect();
    (x, Point::new(y))
}

/// Tests both weak `theta`-up-concavity inequalities,
/// `gamma theta(x)/theta(y) <grad f(y), y-x>  <=  f(y) - f(x)  <=
///  theta(y)/(gamma theta(x)) <grad f(x), y-x>`,
/// on `n_pairs` random ordered pairs and reports the worst violations.
pub fn check_up_concave<T: Real>(
    f: &Objective<T>,
    gamma: T,
    theta: &ThetaSpec<T>,
    n_pairs: usize,
    rng_seed: u64,
) -> Result<MembershipReport<T>> {
    if gamma <= T::zero() || gamma > T::one() {
        return Err(Error::InvalidParameter(format!("gamma={gamma} must be in (0, 1]")));
    }
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = MembershipReport {
        pairs_tested: n_pairs,
        max_lower_violation: T::zero(),
        max_upper_violation: T::zero(),
        witness: None,
    };
    let mut worst = T::neg_infinity();
    for _ in 0..n_pairs {
        let (x, y) = sample_ordered_pair::<T, _>(f.dim(), &mut rng);
        let tx = theta.eval(x.as_slice());
        let ty = theta.eval(y.as_slice());
        if tx <= T::zero() || ty <= T::zero() {
            return Err(Error::NonFinite("theta vanished on a tested pair"));
        }
        let diff = y.sub(&x);
        let df = f.value(&y) - f.value(&x);
        let lower = gamma * tx / ty * f.gradient(&y).dot(&diff) - df;
        let upper = df - ty / (gamma * tx) * f.gradient(&x).dot(&diff);
        report.max_lower_violation = report.max_lower_violation.max(lower);
        report.max_upper_violation = report.max_upper_violation.max(upper);
        let margin = lower.max(upper);
        if margin > worst {
            worst = margin;
            report.witness = Some((x, y));
        }
    }
    Ok(report)
}

/// Tests the one-sided smoothness inequality
/// `u' H(x) u / 2 <= sigma ||u||_1/||x||_1 <grad f(x), u>` at random interior
/// `x` and nonnegative directions `u`. The Hessian quadratic form is a
/// central second difference of the exact gradient with step `1e-4`. The
/// violation is reported in `max_upper_violation`.
pub fn check_oss<T: Real>(
    f: &Objective<T>,
    sigma: T,
    n_points: usize,
    rng_seed: u64,
) -> Result<MembershipReport<T>> {
    if sigma < T::zero() {
        return Err(Error::InvalidParameter(format!("sigma={sigma} must be >= 0")));
    }
    if n_points == 0 {
        return Err(Error::InvalidParameter("n_points must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let h = real::<T>(1e-4);
    let lo = real::<T>(1e-2);
    let span = T::one() - lo - lo;
    let mut report = MembershipReport {
        pairs_tested: n_points,
        max_lower_violation: T::zero(),
        max_upper_violation: T::zero(),
        witness: None,
    };
    let mut worst = T::neg_infinity();
    for _ in 0..n_points {
        let x: Point<T> = (0..f.dim())
            .map(|_| lo + real::<T>(rng.random::<f64>()) * span)
            .collect::<Vec<_>>()
            .into();
        let u = loop {
            let cand = Point::<T>::sample_unit_box(f.dim(), &mut rng);
            if cand.l1_norm() > real(1e-9) {
                break cand;
            }
        };
        let fwd = f.gradient(&x.add_scaled(h, &u));
        let bwd = f.gradient(&x.add_scaled(-h, &u));
        let quad = fwd.sub(&bwd).dot(&u) / (h + h);
        let rhs = sigma * u.l1_norm() / x.l1_norm() * f.gradient(&x).dot(&u);
        let violation = real::<T>(0.5) * quad - rhs;
        report.max_upper_violation = report.max_upper_violation.max(violation);
        if violation > worst {
            worst = violation;
            let y = x.add_scaled(T::one(), &u);
            report.witness = Some((x, y));
        }
    }
    Ok(report)
}

/// The three reports tying weak `(1,1,sigma)`-up-concavity, `sigma`-OSS, and
/// weak `(1,1,2 sigma)`-up-concavity together.
#[derive(Debug, Clone)]
pub struct ContainmentReport<T> {
    pub up_concave_sigma: MembershipReport<T>,
    pub oss: MembershipReport<T>,
    pub up_concave_two_sigma: MembershipReport<T>,
}

/// Runs the containment chain checks: a function certified `(1,1,sigma)`
/// should pass the `sigma`-OSS check, and a `sigma`-OSS function should pass
/// the `(1,1,2 sigma)` check.
pub fn check_containment<T: Real>(
    f: &Objective<T>,
    sigma: T,
    n: usize,
    rng_seed: u64,
) -> Result<ContainmentReport<T>> {
    let two = real::<T>(2.0);
    Ok(ContainmentReport {
        up_concave_sigma: check_up_concave(f, T::one(), &ThetaSpec::l1_power(sigma)?, n, rng_seed)?,
        oss: check_oss(f, sigma, n, rng_seed.wrapping_add(1))?,
        up_concave_two_sigma: check_up_concave(
            f,
            T::one(),
            &ThetaSpec::l1_power(two * sigma)?,
            n,
            rng_seed.wrapping_add(2),
        )?,
    })
}

/// Central finite-difference gradient, for validating exact evaluators.
pub fn finite_difference_gradient<T: Real>(f: &Objective<T>, x: &Point<T>, step: T) -> Point<T> {
    let mut out = Vec::with_capacity(x.dim());
    let mut fwd = x.as_slice().to_vec();
    let mut bwd = x.as_slice().to_vec();
    for i in 0..x.dim() {
        let xi = x[i];
        fwd[i] = xi + step;
        bwd[i] = xi - step;
        out.push((f.value_at(&fwd) - f.value_at(&bwd)) / (step + step));
        fwd[i] = xi;
        bwd[i] = xi;
    }
    Point::new(out)
}

/// JSON description of an objective, as used by the harness config:
/// `{"type": "quadratic", "a": [..], "h": [[..]]}` or
/// `{"type": "norm_power", "d": .., "m": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Quadratic { a: Vec<f64>, h: Vec<Vec<f64>> },
    NormPower { d: usize, m: f64 },
}

impl ObjectiveSpec {
    pub fn build<T: Real>(&self) -> Result<Objective<T>> {
        match self {
            ObjectiveSpec::Quadratic { a, h } => Objective::monotone_quadratic(
                a.iter().map(|&v| real::<T>(v)).collect(),
                h.iter()
                    .map(|row| row.iter().map(|&v| real::<T>(v)).collect())
                    .collect(),
            ),
            ObjectiveSpec::NormPower { d, m } => Objective::norm_power(*d, real::<T>(*m)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Quadratic { a, .. } => a.len(),
            ObjectiveSpec::NormPower { d, .. } => *d,
        }
    }
}
