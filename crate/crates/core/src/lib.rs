//! Inexact proximal accelerated augmented Lagrangian (θ-IPAAL) solver for
//! linearly constrained smooth nonconvex composite problems
//!
//! ```text
//! minimize f(z) + h(z)   subject to   A z = b
//! ```
//!
//! where `f` is smooth with lower/upper curvature pair `(m, L)`, `h` is a
//! closed convex function with a cheap proximal operator, and `A` is linear.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: oracle traits, [`ProblemSpec`], the θ-augmented Lagrangian and
//!   the θ-dependent step-size/acceptance parameters.
//! - [`acg`]: a strongly convex accelerated composite gradient method whose
//!   iterates carry ε-subdifferential certificates.
//! - [`refine`]: a single prox-gradient refinement that turns an inexact prox
//!   solution into a point with an exact stationarity inclusion.
//! - [`ipaal`]: the fixed-penalty outer loop, the penalty-escalation driver and
//!   runtime diagnostics.
//! - [`lcqm`]: the linearly constrained quadratic matrix benchmark family over
//!   the spectraplex.
//! - [`experiment`]: batch runs over θ grids and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acg;
pub mod error;
pub mod experiment;
pub mod ipaal;
pub mod lcqm;
pub mod model;
pub mod oracles;
pub mod refine;

pub use acg::{acg_iteration_bound, acg_solve, acg_step, AcgState, CompositeSubproblem, InnerCertificate};
pub use error::{Error, Result};
pub use experiment::{emit_report, run, RunConfig, RunReport, RunRow};
pub use ipaal::{
    dynamic_solve, feasibility_bound, kappa_theta, static_solve, Caps, Diagnostics, IterationRecord,
    RefinedPoint, SolveReport, SolverConfig, StaticOutcome, Termination,
};
pub use model::{
    aug_lagrangian, inner_sigma, sigma_theta, tau_theta, Curvature, LinearMap, Point, ProblemSpec,
    ProxOracle, SmoothFunction, SmoothOracle, ThetaParams, Variant,
};
pub use refine::{check_delta_bound, refine, RefinementInput, RefinementOutput};
