//! Problem model: oracle interfaces, the θ-augmented Lagrangian and the
//! θ-dependent parameters shared by the solvers.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points and multipliers are dense real vectors.
pub type Point = DVector<f64>;

/// A differentiable function given through value and gradient oracles.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, z: &Point) -> f64;

    fn gradient(&self, z: &Point) -> Point;

    fn value_and_gradient(&self, z: &Point) -> (f64, Point) {
        (self.value(z), self.gradient(z))
    }
}

/// Lower curvature `m` and gradient Lipschitz constant `L` of a smooth function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    pub lower: f64,
    pub upper: f64,
}

impl Curvature {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(Error::Parameter(format!(
                "curvature pair must satisfy 0 < m <= L, got m={lower}, L={upper}"
            )));
        }
        Ok(Self { lower, upper })
    }
}

/// The smooth part `f` of the objective together with its curvature pair.
pub trait SmoothOracle: SmoothFunction {
    fn curvature(&self) -> Curvature;
}

/// A closed proper convex function `h` accessed through its proximal map.
pub trait ProxOracle: Send + Sync {
    /// `argmin_u { h(u) + ‖u − w‖² / (2·stepsize) }`.
    fn prox(&self, w: &Point, stepsize: f64) -> Result<Point>;

    /// Extended-real value; `f64::INFINITY` outside `dom h`.
    fn value(&self, z: &Point) -> f64;

    /// Value at a point known to be a convex combination of prox outputs.
    ///
    /// Such points lie in `dom h` exactly, so indicators may skip their
    /// membership test here and return 0.
    fn value_on_hull(&self, z: &Point) -> f64 {
        self.value(z)
    }
}

/// The affine constraint `A z = b`.
pub trait LinearMap: Send + Sync {
    fn domain_dim(&self) -> usize;

    fn range_dim(&self) -> usize;

    fn apply(&self, z: &Point) -> Point;

    fn adjoint(&self, p: &Point) -> Point;

    /// An upper bound on the operator norm `‖A‖`.
    fn norm_bound(&self) -> f64;

    fn rhs(&self) -> &Point;

    /// `A z − b`.
    fn residual(&self, z: &Point) -> Point {
        self.apply(z) - self.rhs()
    }
}

/// The problem `min { f(z) + h(z) : A z = b }`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub f: Arc<dyn SmoothOracle>,
    pub h: Arc<dyn ProxOracle>,
    pub constraint: Arc<dyn LinearMap>,
    /// Penalty level at which the penalized objective is bounded below.
    pub cbar: f64,
}

impl ProblemSpec {
    pub fn new(
        f: Arc<dyn SmoothOracle>,
        h: Arc<dyn ProxOracle>,
        constraint: Arc<dyn LinearMap>,
    ) -> Result<Self> {
        if f.gradient(&Point::zeros(constraint.domain_dim())).len() != constraint.domain_dim() {
            return Err(Error::Parameter(
                "gradient dimension does not match the constraint domain".into(),
            ));
        }
        if !(constraint.norm_bound() > 0.0) {
            return Err(Error::Parameter("the constraint map must be nonzero".into()));
        }
        Ok(Self { f, h, constraint, cbar: 0.0 })
    }

    pub fn with_cbar(mut self, cbar: f64) -> Self {
        self.cbar = cbar;
        self
    }

    pub fn dim(&self) -> usize {
        self.constraint.domain_dim()
    }

    pub fn curvature(&self) -> Curvature {
        self.f.curvature()
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.dim())
            .field("constraints", &self.constraint.range_dim())
            .field("curvature", &self.curvature())
            .field("norm_bound", &self.constraint.norm_bound())
            .field("cbar", &self.cbar)
            .finish()
    }
}

/// Parameter regime of the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `λ = τ_θ/m` and `σ = min{1/√(λL_c+1), σ_θ}`.
    Theoretical,
    /// `λ = 0.5/m` and `σ² = 0.5` for every θ.
    Constant,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Theoretical => f.write_str("theoretical"),
            Variant::Constant => f.write_str("constant"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(Variant::Theoretical),
            "constant" => Ok(Variant::Constant),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

const CONSTANT_TAU: f64 = 0.5;
const CONSTANT_SIGMA_SQ: f64 = 0.5;

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in (0, 1], got {theta}")))
    }
}

/// `τ_θ = θ/(16 − 17θ)` for `θ ≤ 16/19`, `1/2` otherwise.
pub fn tau_theta(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if theta <= 16.0 / 19.0 {
        Ok(theta / (16.0 - 17.0 * theta))
    } else {
        Ok(0.5)
    }
}

/// Coefficients `(a, b, c)` of the quadratic whose positive root is `σ_θ`.
pub(crate) fn sigma_quadratic(theta: f64, tau: f64) -> (f64, f64, f64) {
    let a = 0.75 + 2.0 * (1.0 - theta) * (3.0 * tau + 1.0) / (theta * tau);
    let b = (8.0 - 7.0 * theta) / (2.0 * theta);
    (a, b, -0.125)
}

/// The unique positive root `σ_θ` of the acceptance quadratic.
pub fn sigma_theta(theta: f64) -> Result<f64> {
    let tau = tau_theta(theta)?;
    let (a, b, c) = sigma_quadratic(theta, tau);
    // c < 0 and b > 0: the rationalized root avoids cancellation in −b + √(b² − 4ac).
    Ok(-2.0 * c / (b + (b * b - 4.0 * a * c).sqrt()))
}

/// θ-dependent step size and acceptance parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub theta: f64,
    pub tau: f64,
    pub sigma_theta: f64,
    pub lambda: f64,
    pub variant: Variant,
}

impl ThetaParams {
    /// Builds the parameters for lower curvature `m`.
    ///
    /// `theta = 0` (the classical augmented Lagrangian) is only accepted by the
    /// constant variant.
    pub fn new(theta: f64, variant: Variant, lower_curvature: f64) -> Result<Self> {
        if !(lower_curvature > 0.0) {
            return Err(Error::Parameter(format!(
                "lower curvature must be positive, got {lower_curvature}"
            )));
        }
        match variant {
            Variant::Theoretical => {
                let tau = tau_theta(theta)?;
                Ok(Self {
                    theta,
                    tau,
                    sigma_theta: sigma_theta(theta)?,
                    lambda: tau / lower_curvature,
                    variant,
                })
            }
            Variant::Constant => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(Error::Domain(format!("theta must lie in [0, 1], got {theta}")));
                }
                Ok(Self {
                    theta,
                    tau: CONSTANT_TAU,
                    sigma_theta: CONSTANT_SIGMA_SQ.sqrt(),
                    lambda: CONSTANT_TAU / lower_curvature,
                    variant,
                })
            }
        }
    }
}

/// ACG acceptance parameter σ for a subproblem with gradient Lipschitz
/// constant `lipschitz_c = L + c‖A‖²`.
pub fn inner_sigma(params: &ThetaParams, lipschitz_c: f64) -> f64 {
    match params.variant {
        Variant::Theoretical => {
            (1.0 / (params.lambda * lipschitz_c + 1.0).sqrt()).min(params.sigma_theta)
        }
        Variant::Constant => CONSTANT_SIGMA_SQ.sqrt(),
    }
}

/// The smooth part `g(z) = f(z) + (1−θ)⟨p, Az−b⟩ + (c/2)‖Az−b‖²` of the
/// θ-augmented Lagrangian at a fixed multiplier.
pub(crate) struct PenalizedSmooth<'a> {
    pub problem: &'a ProblemSpec,
    pub multiplier_weight: f64,
    pub multiplier: &'a Point,
    pub penalty: f64,
}

impl SmoothFunction for PenalizedSmooth<'_> {
    fn value(&self, z: &Point) -> f64 {
        let r = self.problem.constraint.residual(z);
        self.problem.f.value(z)
            + self.multiplier_weight * self.multiplier.dot(&r)
            + 0.5 * self.penalty * r.norm_squared()
    }

    fn gradient(&self, z: &Point) -> Point {
        self.value_and_gradient(z).1
    }

    fn value_and_gradient(&self, z: &Point) -> (f64, Point) {
        let r = self.problem.constraint.residual(z);
        let (fv, mut grad) = self.problem.f.value_and_gradient(z);
        let value = fv + self.multiplier_weight * self.multiplier.dot(&r) + 0.5 * self.penalty * r.norm_squared();
        let dual = self.multiplier * self.multiplier_weight + &r * self.penalty;
        grad += self.problem.constraint.adjoint(&dual);
        (value, grad)
    }
}

/// Evaluates `𝓛^θ_c(z; p)` and the gradient of its smooth part (everything
/// except `h`). The value is `+∞` when `z ∉ dom h`.
pub fn aug_lagrangian(
    problem: &ProblemSpec,
    theta: f64,
    c: f64,
    z: &Point,
    p: &Point,
) -> Result<(f64, Point)> {
    if !(c > 0.0) {
        return Err(Error::Parameter(format!("penalty must be positive, got {c}")));
    }
    let smooth = PenalizedSmooth {
        problem,
        multiplier_weight: 1.0 - theta,
        multiplier: p,
        penalty: c,
    };
    let (value, grad) = smooth.value_and_gradient(z);
    Ok((value + problem.h.value(z), grad))
}

/// Sampled test of the curvature assumptions on a pair of points:
/// gradient Lipschitz continuity and the lower curvature bound.
pub fn check_curvature_pair(f: &dyn SmoothOracle, z: &Point, z2: &Point, rel_tol: f64) -> bool {
    let Curvature { lower, upper } = f.curvature();
    let (fz, gz) = f.value_and_gradient(z);
    let (fz2, gz2) = f.value_and_gradient(z2);
    let d = z2 - z;
    let dist_sq = d.norm_squared();
    let scale = 1.0 + fz.abs() + fz2.abs() + gz.norm() * d.norm();
    let lipschitz_ok = (gz2 - &gz).norm() <= upper * dist_sq.sqrt() * (1.0 + rel_tol) + rel_tol;
    let lower_ok = fz2 - fz - gz.dot(&d) >= -0.5 * lower * dist_sq - rel_tol * scale;
    lipschitz_ok && lower_ok
}

/// Sampled adjoint consistency `⟨A z, p⟩ = ⟨z, A* p⟩`.
pub fn check_adjoint(map: &dyn LinearMap, z: &Point, p: &Point, rel_tol: f64) -> bool {
    let lhs = map.apply(z).dot(p);
    let rhs = z.dot(&map.adjoint(p));
    (lhs - rhs).abs() <= rel_tol * (1.0 + lhs.abs().max(rhs.abs()))
}
