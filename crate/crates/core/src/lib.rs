//! Upper-linearization toolkit for monotone non-concave maximization.
//!
//! The crate builds a linear surrogate for curvature-restricted monotone
//! objectives (weakly up-concave, DR-submodular, one-sided smooth) and feeds
//! single-query unbiased estimates of it to a projected online optimizer.
//! The pieces:
//!
//! * [`domains`] — feasible regions (boxes, uniform / partition matroid
//!   polytopes), their maximal convex subsets, Euclidean projections,
//!   separation, and the radial quantities `r_theta` / `R_theta`.
//! * [`objectives`] — concrete test objectives with exact gradients and
//!   numerical membership checkers for the curvature classes.
//! * [`oracles`] — stochastic first- and zeroth-order query oracles with
//!   almost-sure norm bounds and query accounting.
//! * [`linearization`] — the exponent `l(r, x)`, the weight integral, the
//!   exact surrogate, approximation coefficients, the `Z_x` sampler, and the
//!   unbiased single-query estimator.
//! * [`online`] — projected online gradient ascent, the surrogate-driven
//!   meta-round, regret bookkeeping, and an online-to-batch conversion.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Real`] trait; `f64` aliases are exported at the crate root.

pub mod domains;
pub mod error;
pub mod linearization;
pub mod objectives;
pub mod online;
pub mod oracles;
mod real;

pub use crate::error::{Error, Result};
pub use crate::real::Real;

/// `f64` aliases for the main types; these are what the harness uses.
pub type Point64 = domains::Point<f64>;
pub type ThetaSpec64 = domains::ThetaSpec<f64>;
pub type ConstraintSet64 = domains::ConstraintSet<f64>;
pub type RadialBounds64 = domains::RadialBounds<f64>;
pub type Objective64 = objectives::Objective<f64>;
pub type MembershipReport64 = objectives::MembershipReport<f64>;
pub type QueryOracle64 = oracles::QueryOracle<f64>;
pub type LinearizationContext64 = linearization::LinearizationContext<f64>;
pub type SurrogateEstimate64 = linearization::SurrogateEstimate<f64>;
pub type RegretTrace64 = online::RegretTrace<f64>;

/// `f32` aliases; the kernels are precision-agnostic, but the documented
/// tolerances assume `f64`.
pub type Point32 = domains::Point<f32>;
pub type ConstraintSet32 = domains::ConstraintSet<f32>;
pub type Objective32 = objectives::Objective<f32>;
