//! Feasible-region geometry.
//!
//! Supported families are the unit box, uniform- and partition-matroid
//! independence/basis polytopes, and singletons. Every family admits an exact
//! membership test, an exact `O(d log d)` Euclidean projection (capped-simplex
//! threshold search, applied block-wise for partition matroids), a separation
//! oracle, its coordinate-wise maximal convex subset, and the radial
//! quantities `r_theta` / `R_theta` that the linearization coefficients are
//! built from.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Absolute tolerance on every linear membership constraint.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Dense real vector; the universal action/query type. Points claimed
/// feasible for a set inside `[0,1]^d` must have all coordinates in `[0,1]`.
#[derive(Clone, PartialEq)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Real> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point { coords }
    }

    pub fn zeros(d: usize) -> Self {
        Point { coords: vec![T::zero(); d] }
    }

    pub fn ones(d: usize) -> Self {
        Point { coords: vec![T::one(); d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coords
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords.iter().zip(&other.coords).map(|(&a, &b)| a * b).sum()
    }

    pub fn l1_norm(&self) -> T {
        self.coords.iter().map(|c| c.abs()).sum()
    }

    pub fn l2_norm(&self) -> T {
        self.coords.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    pub fn linf_norm(&self) -> T {
        self.coords.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// `l^p` norm for `p >= 1`.
    pub fn lp_norm(&self, p: T) -> T {
        if p == T::one() {
            return self.l1_norm();
        }
        self.coords
            .iter()
            .map(|c| c.abs().powf(p))
            .sum::<T>()
            .powf(p.recip())
    }

    pub fn distance(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Point { coords: self.coords.iter().map(|&c| c * s).collect() }
    }

    /// `self + s * dir`.
    pub fn add_scaled(&self, s: T, dir: &Self) -> Self {
        debug_assert_eq!(self.dim(), dir.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&dir.coords)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-T::one(), other)
    }

    /// Coordinate-wise maximum.
    pub fn join(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn in_unit_box(&self, tol: T) -> bool {
        self.coords.iter().all(|&c| c >= -tol && c <= T::one() + tol)
    }

    /// Coordinate-wise `y >= x`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.coords.iter().zip(&other.coords).all(|(&a, &b)| a >= b)
    }

    /// Uniform sample from the unit box.
    pub fn sample_unit_box<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Point { coords: (0..d).map(|_| real::<T>(rng.random::<f64>())).collect() }
    }
}

impl<T: Real> std::ops::Index<usize> for Point<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T: Real> From<Vec<T>> for Point<T> {
    fn from(coords: Vec<T>) -> Self {
        Point { coords }
    }
}

impl<T: Real> AsRef<[T]> for Point<T> {
    fn as_ref(&self) -> &[T] {
        &self.coords
    }
}

impl<T: fmt::Debug> fmt::Debug for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({:?})", self.coords)
    }
}

/// Monotone scaling function `theta : [0,1]^d -> R_{>=0}`, nonzero away from
/// the origin. The `p`-norm-power kind with `sigma = 0` is the constant
/// function 1 everywhere (including the origin, by continuity).
#[derive(Clone)]
pub enum ThetaSpec<T> {
    ConstantOne,
    PNormPower { p: T, sigma: T },
    Custom(Arc<dyn Fn(&[T]) -> T + Send + Sync>),
}

impl<T: Real> ThetaSpec<T> {
    pub fn constant_one() -> Self {
        ThetaSpec::ConstantOne
    }

    /// `theta(x) = ||x||_p^sigma` with `p >= 1`, `sigma >= 0`.
    pub fn p_norm_power(p: T, sigma: T) -> Result<Self> {
        if p < T::one() {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if sigma < T::zero() {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(ThetaSpec::PNormPower { p, sigma })
    }

    /// `theta(x) = ||x||_1^sigma`.
    pub fn l1_power(sigma: T) -> Result<Self> {
        Self::p_norm_power(T::one(), sigma)
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        ThetaSpec::Custom(Arc::new(f))
    }

    pub fn eval(&self, v: &[T]) -> T {
        match self {
            ThetaSpec::ConstantOne => T::one(),
            ThetaSpec::PNormPower { p, sigma } => {
                if *sigma == T::zero() {
                    return T::one();
                }
                let norm = if *p == T::one() {
                    v.iter().map(|c| c.abs()).sum::<T>()
                } else {
                    v.iter().map(|c| c.abs().powf(*p)).sum::<T>().powf(p.recip())
                };
                norm.powf(*sigma)
            }
            ThetaSpec::Custom(f) => f(v),
        }
    }

    /// Spot check for the custom kind: coordinate-wise monotone on random
    /// ordered pairs, and positive on every tested nonzero point. The closed
    /// kinds satisfy both by construction.
    pub fn spot_check(&self, d: usize, n_pairs: usize, seed: u64) -> Result<()> {
        if !matches!(self, ThetaSpec::Custom(_)) {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = real::<T>(1e-12);
        for _ in 0..n_pairs {
            let x = Point::<T>::sample_unit_box(d, &mut rng);
            let u = Point::<T>::sample_unit_box(d, &mut rng);
            let y: Point<T> = x
                .as_slice()
                .iter()
                .zip(u.as_slice())
                .map(|(&xi, &ui)| xi + ui * (T::one() - xi))
                .collect::<Vec<_>>()
                .into();
            let tx = self.eval(x.as_slice());
            let ty = self.eval(y.as_slice());
            if ty < tx - tol {
                return Err(Error::InvalidParameter(format!(
                    "custom theta is not monotone: theta(y)={ty} < theta(x)={tx}"
                )));
            }
            if x.linf_norm() > real(1e-3) && tx <= T::zero() {
                return Err(Error::InvalidParameter(
                    "custom theta vanishes away from the origin".into(),
                ));
            }
        }
        Ok(())
    }
}

impl<T: fmt::Debug> fmt::Debug for ThetaSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::ConstantOne => write!(f, "ThetaSpec::ConstantOne"),
            ThetaSpec::PNormPower { p, sigma } => {
                write!(f, "ThetaSpec::PNormPower {{ p: {p:?}, sigma: {sigma:?} }}")
            }
            ThetaSpec::Custom(_) => write!(f, "ThetaSpec::Custom(..)"),
        }
    }
}

/// Minimum of `theta` over the maximal convex subset (`r_min`) and maximum of
/// `theta` over the whole set (`r_max`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBounds<T> {
    pub r_min: T,
    pub r_max: T,
}

/// Separation-oracle outcome: inside certificate, or a hyperplane
/// `(normal, offset)` with `<normal, x> > offset` and `<normal, y> <= offset`
/// for all members `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation<T> {
    Inside,
    Hyperplane { normal: Point<T>, offset: T },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    Box,
    UniformIndependence { k: usize },
    UniformBasis { k: usize },
    PartitionIndependence { blocks: Vec<Vec<usize>>, caps: Vec<usize> },
    PartitionBasis { blocks: Vec<Vec<usize>>, caps: Vec<usize> },
    Singleton { point: Point<T> },
}

/// Nonempty closed convex subset of `[0,1]^d` from one of the supported
/// families, with its exact Euclidean diameter cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet<T> {
    dim: usize,
    family: Family<T>,
    diameter: T,
}

impl<T: Real> ConstraintSet<T> {
    /// The unit box `[0,1]^d`; diameter `sqrt(d)`.
    pub fn make_box(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConstraint("dimension must be >= 1".into()));
        }
        Ok(ConstraintSet {
            dim: d,
            family: Family::Box,
            diameter: real::<T>(d as f64).sqrt(),
        })
    }

    /// Uniform matroid of rank `k` on `d` elements. The independence variant
    /// is `{x in [0,1]^d : sum x_i <= k}`, the basis variant replaces the
    /// inequality with equality.
    pub fn make_uniform_matroid(d: usize, k: usize, basis: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConstraint("dimension must be >= 1".into()));
        }
        if k == 0 || k > d {
            return Err(Error::InvalidConstraint(format!(
                "rank k={k} out of range [1, {d}]"
            )));
        }
        let sq = |v: usize| real::<T>(v as f64).sqrt();
        let (family, diameter) = if basis {
            (Family::UniformBasis { k }, sq(2 * k.min(d - k)))
        } else {
            (Family::UniformIndependence { k }, sq((2 * k).min(d)))
        };
        Ok(ConstraintSet { dim: d, family, diameter })
    }

    /// Partition matroid: disjoint blocks covering `{0..d}` with per-block
    /// caps `1 <= cap_i <= |block_i|`. Rank is `sum cap_i`.
    pub fn make_partition_matroid(
        blocks: Vec<Vec<usize>>,
        caps: Vec<usize>,
        basis: bool,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidConstraint("no blocks given".into()));
        }
        if blocks.len() != caps.len() {
            return Err(Error::InvalidConstraint(format!(
                "{} blocks but {} caps",
                blocks.len(),
                caps.len()
            )));
        }
        let d: usize = blocks.iter().map(|b| b.len()).sum();
        let mut seen = vec![false; d];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidConstraint("empty block".into()));
            }
            for &j in block {
                if j >= d {
                    return Err(Error::InvalidConstraint(format!(
                        "index {j} outside 0..{d}; blocks must partition the coordinates"
                    )));
                }
                if seen[j] {
                    return Err(Error::InvalidConstraint(format!("index {j} in two blocks")));
                }
                seen[j] = true;
            }
        }
        for (i, (block, &cap)) in blocks.iter().zip(&caps).enumerate() {
            if cap == 0 || cap > block.len() {
                return Err(Error::InvalidConstraint(format!(
                    "cap {cap} of block {i} out of range [1, {}]",
                    block.len()
                )));
            }
        }
        let diam_sq: usize = blocks
            .iter()
            .zip(&caps)
            .map(|(b, &c)| {
                let n = b.len();
                if basis {
                    2 * c.min(n - c)
                } else {
                    (2 * c).min(n)
                }
            })
            .sum();
        let diameter = real::<T>(diam_sq as f64).sqrt();
        let family = if basis {
            Family::PartitionBasis { blocks, caps }
        } else {
            Family::PartitionIndependence { blocks, caps }
        };
        Ok(ConstraintSet { dim: d, family, diameter })
    }

    /// Single feasible point.
    pub fn singleton(point: Point<T>) -> Result<Self> {
        if point.dim() == 0 {
            return Err(Error::InvalidConstraint("dimension must be >= 1".into()));
        }
        if !point.in_unit_box(real(MEMBERSHIP_TOL)) {
            return Err(Error::InvalidConstraint("singleton outside the unit box".into()));
        }
        Ok(ConstraintSet {
            dim: point.dim(),
            family: Family::Singleton { point },
            diameter: T::zero(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    /// Exact Euclidean diameter.
    pub fn diameter(&self) -> T {
        self.diameter
    }

    /// Matroid rank `rho` for the matroid families.
    pub fn rank(&self) -> Option<usize> {
        match &self.family {
            Family::UniformIndependence { k } | Family::UniformBasis { k } => Some(*k),
            Family::PartitionIndependence { caps, .. } | Family::PartitionBasis { caps, .. } => {
                Some(caps.iter().sum())
            }
            _ => None,
        }
    }

    fn check_dim(&self, x: &Point<T>) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(())
    }

    /// Membership within the absolute tolerance [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &Point<T>) -> bool {
        let tol = real::<T>(MEMBERSHIP_TOL);
        if x.dim() != self.dim || !x.in_unit_box(tol) {
            return false;
        }
        let sum_of = |idx: &[usize]| idx.iter().map(|&j| x[j]).sum::<T>();
        match &self.family {
            Family::Box => true,
            Family::UniformIndependence { k } => {
                x.as_slice().iter().copied().sum::<T>() <= real::<T>(*k as f64) + tol
            }
            Family::UniformBasis { k } => {
                (x.as_slice().iter().copied().sum::<T>() - real::<T>(*k as f64)).abs() <= tol
            }
            Family::PartitionIndependence { blocks, caps } => blocks
                .iter()
                .zip(caps)
                .all(|(b, &c)| sum_of(b) <= real::<T>(c as f64) + tol),
            Family::PartitionBasis { blocks, caps } => blocks
                .iter()
                .zip(caps)
                .all(|(b, &c)| (sum_of(b) - real::<T>(c as f64)).abs() <= tol),
            Family::Singleton { point } => x
                .as_slice()
                .iter()
                .zip(point.as_slice())
                .all(|(&a, &b)| (a - b).abs() <= tol),
        }
    }

    /// The maximal convex subset `conv(K^m)`: coordinate-wise maximal points.
    /// Boxes collapse to the all-ones singleton, independence polytopes to
    /// their basis polytopes, and basis polytopes/singletons are their own
    /// maximal subsets.
    pub fn maximal_convex_subset(&self) -> ConstraintSet<T> {
        match &self.family {
            Family::Box => ConstraintSet {
                dim: self.dim,
                family: Family::Singleton { point: Point::ones(self.dim) },
                diameter: T::zero(),
            },
            Family::UniformIndependence { k } => {
                ConstraintSet::make_uniform_matroid(self.dim, *k, true)
                    .expect("parameters already validated")
            }
            Family::PartitionIndependence { blocks, caps } => {
                ConstraintSet::make_partition_matroid(blocks.clone(), caps.clone(), true)
                    .expect("parameters already validated")
            }
            Family::UniformBasis { .. }
            | Family::PartitionBasis { .. }
            | Family::Singleton { .. } => self.clone(),
        }
    }

    /// Euclidean projection onto the set. Exact for all supported families.
    pub fn project(&self, x: &Point<T>) -> Result<Point<T>> {
        self.check_dim(x)?;
        if !x.is_finite() {
            return Err(Error::NonFinite("projection input"));
        }
        let y = x.as_slice();
        let out = match &self.family {
            Family::Box => clamp_unit(y),
            Family::Singleton { point } => point.as_slice().to_vec(),
            Family::UniformIndependence { k } => {
                let c = clamp_unit(y);
                let target = real::<T>(*k as f64);
                if c.iter().copied().sum::<T>() <= target {
                    c
                } else {
                    project_capped_simplex(y, target)
                }
            }
            Family::UniformBasis { k } => project_capped_simplex(y, real::<T>(*k as f64)),
            Family::PartitionIndependence { blocks, caps } => {
                let mut out = vec![T::zero(); self.dim];
                for (block, &cap) in blocks.iter().zip(caps) {
                    let sub: Vec<T> = block.iter().map(|&j| y[j]).collect();
                    let clamped = clamp_unit(&sub);
                    let target = real::<T>(cap as f64);
                    let proj = if clamped.iter().copied().sum::<T>() <= target {
                        clamped
                    } else {
                        project_capped_simplex(&sub, target)
                    };
                    for (&j, v) in block.iter().zip(proj) {
                        out[j] = v;
                    }
                }
                out
            }
            Family::PartitionBasis { blocks, caps } => {
                let mut out = vec![T::zero(); self.dim];
                for (block, &cap) in blocks.iter().zip(caps) {
                    let sub: Vec<T> = block.iter().map(|&j| y[j]).collect();
                    let proj = project_capped_simplex(&sub, real::<T>(cap as f64));
                    for (&j, v) in block.iter().zip(proj) {
                        out[j] = v;
                    }
                }
                out
            }
        };
        Ok(Point::new(out))
    }

    /// Separation oracle. Box faces are reported first, then the rank
    /// constraints; normals are unnormalized constraint coefficients.
    pub fn separate(&self, x: &Point<T>) -> Result<Separation<T>> {
        self.check_dim(x)?;
        if self.contains(x) {
            return Ok(Separation::Inside);
        }
        let tol = real::<T>(MEMBERSHIP_TOL);
        for i in 0..self.dim {
            if x[i] < -tol {
                let mut n = Point::zeros(self.dim).into_vec();
                n[i] = -T::one();
                return Ok(Separation::Hyperplane { normal: Point::new(n), offset: T::zero() });
            }
            if x[i] > T::one() + tol {
                let mut n = Point::zeros(self.dim).into_vec();
                n[i] = T::one();
                return Ok(Separation::Hyperplane { normal: Point::new(n), offset: T::one() });
            }
        }
        let indicator = |idx: &[usize], sign: T| {
            let mut n = vec![T::zero(); self.dim];
            for &j in idx {
                n[j] = sign;
            }
            Point::new(n)
        };
        let all: Vec<usize> = (0..self.dim).collect();
        match &self.family {
            Family::Box => unreachable!("box violations are coordinate violations"),
            Family::UniformIndependence { k } | Family::UniformBasis { k } => {
                let target = real::<T>(*k as f64);
                let s = x.as_slice().iter().copied().sum::<T>();
                if s > target + tol {
                    return Ok(Separation::Hyperplane {
                        normal: indicator(&all, T::one()),
                        offset: target,
                    });
                }
                // Basis deficit: sum < k.
                Ok(Separation::Hyperplane {
                    normal: indicator(&all, -T::one()),
                    offset: -target,
                })
            }
            Family::PartitionIndependence { blocks, caps }
            | Family::PartitionBasis { blocks, caps } => {
                let basis = matches!(self.family, Family::PartitionBasis { .. });
                for (block, &cap) in blocks.iter().zip(caps) {
                    let target = real::<T>(cap as f64);
                    let s = block.iter().map(|&j| x[j]).sum::<T>();
                    if s > target + tol {
                        return Ok(Separation::Hyperplane {
                            normal: indicator(block, T::one()),
                            offset: target,
                        });
                    }
                    if basis && s < target - tol {
                        return Ok(Separation::Hyperplane {
                            normal: indicator(block, -T::one()),
                            offset: -target,
                        });
                    }
                }
                unreachable!("non-member must violate some block constraint")
            }
            Family::Singleton { point } => {
                let diff = x.sub(point);
                let norm = diff.l2_norm();
                let normal = diff.scaled(norm.recip());
                let offset = normal.dot(point);
                Ok(Separation::Hyperplane { normal, offset })
            }
        }
    }

    /// `r_theta = min over K* of theta`, `R_theta = max over K of theta`.
    ///
    /// Closed forms cover the constant kind, `p = 1` norm powers on all
    /// families, and any kind on boxes/singletons (where `K*` is a single
    /// point). Everything else falls back to vertex enumeration for
    /// `d <= 20`; no sampling estimate is substituted. The vertex minimum can
    /// overestimate `r_theta` for non-concave `theta` away from those exact
    /// cases.
    pub fn radial_bounds(&self, theta: &ThetaSpec<T>) -> Result<RadialBounds<T>> {
        let constant = matches!(theta, ThetaSpec::ConstantOne)
            || matches!(theta, ThetaSpec::PNormPower { sigma, .. } if *sigma == T::zero());
        if constant {
            return Ok(RadialBounds { r_min: T::one(), r_max: T::one() });
        }
        // K* is a single point: both bounds are theta at that point.
        match &self.family {
            Family::Box => {
                let v = theta.eval(Point::ones(self.dim).as_slice());
                return Ok(RadialBounds { r_min: v, r_max: v });
            }
            Family::Singleton { point } => {
                let v = theta.eval(point.as_slice());
                return Ok(RadialBounds { r_min: v, r_max: v });
            }
            _ => {}
        }
        if let ThetaSpec::PNormPower { p, sigma } = theta {
            if *p == T::one() {
                // All maximal points of a matroid polytope share l1 norm rho.
                let rho = real::<T>(self.rank().expect("matroid family") as f64);
                let v = rho.powf(*sigma);
                return Ok(RadialBounds { r_min: v, r_max: v });
            }
        }
        if self.dim > 20 {
            return Err(Error::Unsupported(format!(
                "radial bounds for this theta need vertex enumeration, unavailable for d={} > 20",
                self.dim
            )));
        }
        let kstar = self.maximal_convex_subset();
        let r_min = kstar
            .vertices()?
            .iter()
            .map(|v| theta.eval(v.as_slice()))
            .fold(T::infinity(), T::min);
        let r_max = self
            .vertices()?
            .iter()
            .map(|v| theta.eval(v.as_slice()))
            .fold(T::zero(), T::max);
        Ok(RadialBounds { r_min, r_max })
    }

    /// All polytope vertices. Guarded: `d <= 20` and at most `2^20` vertices.
    pub fn vertices(&self) -> Result<Vec<Point<T>>> {
        if self.dim > 20 {
            return Err(Error::Unsupported(format!(
                "vertex enumeration unavailable for d={} > 20",
                self.dim
            )));
        }
        let cap = 1usize << 20;
        let out: Vec<Point<T>> = match &self.family {
            Family::Singleton { point } => vec![point.clone()],
            Family::Box => {
                let mut v = Vec::with_capacity(1 << self.dim);
                for mask in 0u64..(1u64 << self.dim) {
                    v.push(indicator_point(self.dim, |i| mask >> i & 1 == 1));
                }
                v
            }
            Family::UniformBasis { k } => combinations(self.dim, *k)
                .into_iter()
                .map(|s| indicator_point(self.dim, |i| s.contains(&i)))
                .collect(),
            Family::UniformIndependence { k } => {
                let mut v = Vec::new();
                for j in 0..=*k {
                    for s in combinations(self.dim, j) {
                        v.push(indicator_point(self.dim, |i| s.contains(&i)));
                    }
                }
                v
            }
            Family::PartitionBasis { blocks, caps }
            | Family::PartitionIndependence { blocks, caps } => {
                let basis = matches!(self.family, Family::PartitionBasis { .. });
                let per_block: Vec<Vec<Vec<usize>>> = blocks
                    .iter()
                    .zip(caps)
                    .map(|(b, &c)| {
                        let mut choices = Vec::new();
                        let lo = if basis { c } else { 0 };
                        for j in lo..=c {
                            for s in combinations(b.len(), j) {
                                choices.push(s.iter().map(|&t| b[t]).collect());
                            }
                        }
                        choices
                    })
                    .collect();
                let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
                for choices in &per_block {
                    let mut next = Vec::with_capacity(acc.len() * choices.len());
                    for base in &acc {
                        for ch in choices {
                            let mut v = base.clone();
                            v.extend_from_slice(ch);
                            next.push(v);
                        }
                    }
                    acc = next;
                    if acc.len() > cap {
                        return Err(Error::Unsupported("too many vertices to enumerate".into()));
                    }
                }
                acc.into_iter()
                    .map(|s| indicator_point(self.dim, |i| s.contains(&i)))
                    .collect()
            }
        };
        if out.len() > cap {
            return Err(Error::Unsupported("too many vertices to enumerate".into()));
        }
        Ok(out)
    }

    /// Deterministic starting point: the lexicographically smallest vertex.
    pub fn lex_smallest_vertex(&self) -> Point<T> {
        match &self.family {
            Family::Box | Family::UniformIndependence { .. } | Family::PartitionIndependence { .. } => {
                Point::zeros(self.dim)
            }
            Family::Singleton { point } => point.clone(),
            Family::UniformBasis { k } => indicator_point(self.dim, |i| i >= self.dim - k),
            Family::PartitionBasis { blocks, caps } => {
                let mut coords = vec![T::zero(); self.dim];
                for (block, &cap) in blocks.iter().zip(caps) {
                    let mut idx = block.clone();
                    idx.sort_unstable();
                    for &j in idx.iter().rev().take(cap) {
                        coords[j] = T::one();
                    }
                }
                Point::new(coords)
            }
        }
    }

    /// Random feasible point: projection pushforward of a uniform box sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<T> {
        let raw = Point::sample_unit_box(self.dim, rng);
        self.project(&raw).expect("box sample is finite and well-dimensioned")
    }
}

fn indicator_point<T: Real, F: Fn(usize) -> bool>(d: usize, on: F) -> Point<T> {
    Point::new((0..d).map(|i| if on(i) { T::one() } else { T::zero() }).collect())
}

/// All `k`-subsets of `{0..n}` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Advance the rightmost index that can move.
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return out;
            }
        }
    }
}

fn clamp_unit<T: Real>(y: &[T]) -> Vec<T> {
    y.iter().map(|&v| v.max(T::zero()).min(T::one())).collect()
}

/// Euclidean projection onto `{x : 0 <= x <= 1, sum x = target}`.
///
/// The optimum is `x_i = clip(y_i - tau, 0, 1)` for the threshold `tau`
/// solving `phi(tau) = sum_i clip(y_i - tau, 0, 1) = target`. `phi` is
/// piecewise linear and non-increasing with breakpoints at `y_i - 1` and
/// `y_i`; the solution is found by a sorted breakpoint scan with linear
/// interpolation on the bracketing segment. Breakpoint ties sort by lower
/// coordinate index.
pub fn project_capped_simplex<T: Real>(y: &[T], target: T) -> Vec<T> {
    let one = T::one();
    let d = y.len();
    debug_assert!(target >= T::zero() && target <= real::<T>(d as f64));
    let phi = |tau: T| -> T {
        y.iter().map(|&v| (v - tau).max(T::zero()).min(one)).sum()
    };
    let mut bps: Vec<(T, usize)> = Vec::with_capacity(2 * d);
    for (i, &v) in y.iter().enumerate() {
        bps.push((v - one, i));
        bps.push((v, i));
    }
    bps.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });

    // phi(bps[0]) = d >= target and phi(bps[last]) = 0 <= target, so some
    // segment brackets the solution.
    let mut tau = bps[0].0;
    let mut phi_lo = phi(tau);
    if phi_lo > target {
        for w in bps.windows(2) {
            let (lo, hi) = (w[0].0, w[1].0);
            if hi <= lo {
                continue;
            }
            let phi_hi = phi(hi);
            if phi_hi <= target {
                // Linear on [lo, hi]: interpolate.
                let slope = (phi_hi - phi_lo) / (hi - lo);
                tau = if slope == T::zero() { lo } else { lo + (target - phi_lo) / slope };
                break;
            }
            phi_lo = phi_hi;
            tau = hi;
        }
    }
    y.iter().map(|&v| (v - tau).max(T::zero()).min(one)).collect()
}

/// JSON description of a constraint set, as used by the harness config:
/// `{"family": "box"|"uniform"|"partition"|"singleton", "d": .., "k": ..,
/// "blocks": [[..]], "caps": [..], "basis": bool, "point": [..]}`.
/// Block entries are 0-based coordinate indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub family: String,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

impl ConstraintSpec {
    pub fn build<T: Real>(&self) -> Result<ConstraintSet<T>> {
        let basis = self.basis.unwrap_or(false);
        match self.family.as_str() {
            "box" => ConstraintSet::make_box(self.d),
            "uniform" => {
                let k = self.k.ok_or_else(|| {
                    Error::InvalidConstraint("uniform family needs field `k`".into())
                })?;
                ConstraintSet::make_uniform_matroid(self.d, k, basis)
            }
            "partition" => {
                let blocks = self.blocks.clone().ok_or_else(|| {
                    Error::InvalidConstraint("partition family needs field `blocks`".into())
                })?;
                let caps = self.caps.clone().ok_or_else(|| {
                    Error::InvalidConstraint("partition family needs field `caps`".into())
                })?;
                let set = ConstraintSet::make_partition_matroid(blocks, caps, basis)?;
                if set.dim() != self.d {
                    return Err(Error::InvalidConstraint(format!(
                        "blocks cover {} coordinates but d={}",
                        set.dim(),
                        self.d
                    )));
                }
                Ok(set)
            }
            "singleton" => {
                let coords = match &self.point {
                    Some(p) => p.iter().map(|&v| real::<T>(v)).collect(),
                    None => vec![T::one(); self.d],
                };
                let point = Point::new(coords);
                if point.dim() != self.d {
                    return Err(Error::InvalidConstraint(format!(
                        "singleton point has {} coordinates but d={}",
                        point.dim(),
                        self.d
                    )));
                }
                ConstraintSet::singleton(point)
            }
            other => Err(Error::InvalidConstraint(format!(
                "unknown family `{other}` (expected box, uniform, partition, or singleton)"
            ))),
        }
    }
}
