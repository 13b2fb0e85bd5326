//! Refinement of an inexact prox solution.
//!
//! Given `z ≈ argmin λ(g + h) + ½‖· − z⁻‖²` with residual `v`, one
//! prox-gradient step on `g_λ = λg + ½‖· − z⁻‖² − ⟨v, ·⟩` produces `ẑ` and
//! `v̂ ∈ ∇g(ẑ) + ∂h(ẑ)` whose size is controlled by `‖v + z⁻ − z‖` and the
//! decrease `Δ = (g_λ + λh)(z) − (g_λ + λh)(ẑ)`.

use log::trace;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point, ProxOracle, SmoothFunction};

pub struct RefinementInput<'a> {
    /// `g`, with `M`-Lipschitz gradient.
    pub smooth_g: &'a dyn SmoothFunction,
    pub lipschitz: f64,
    pub prox_h: &'a dyn ProxOracle,
    pub lambda: f64,
    pub z_minus: &'a Point,
    pub z: &'a Point,
    pub v: &'a Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementOutput {
    pub z_hat: Point,
    pub v_hat: Point,
    /// Raw `Δ`; may be a tiny negative number from roundoff.
    pub delta: f64,
    /// `1 + |g(z)| + ‖z‖ + ‖z⁻‖`, the reference size for tolerances.
    pub scale: f64,
    /// Rounding error bound on `delta`.
    pub delta_error: f64,
}

impl RefinementOutput {
    pub fn delta_clamped(&self) -> f64 {
        self.delta.max(0.0)
    }
}

/// Outcome of the three a-priori bounds on a refinement output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefinementChecks {
    pub delta_nonnegative: bool,
    pub residual_bound: bool,
    pub displacement_bound: bool,
}

impl RefinementChecks {
    pub fn all(&self) -> bool {
        self.delta_nonnegative && self.residual_bound && self.displacement_bound
    }
}

pub fn refine(input: &RefinementInput<'_>) -> Result<RefinementOutput> {
    let RefinementInput { smooth_g, lipschitz, prox_h, lambda, z_minus, z, v } = *input;
    if !(lambda > 0.0) || !(lipschitz >= 0.0) || !(lambda * lipschitz).is_finite() {
        return Err(Error::Parameter(format!(
            "refinement needs lambda > 0 and finite lambda*M, got lambda={lambda}, M={lipschitz}"
        )));
    }
    let step = lambda * lipschitz + 1.0;

    let (g_z, grad_z) = smooth_g.value_and_gradient(z);
    let grad_g_lambda = &grad_z * lambda + (z - z_minus) - v;
    let z_hat = prox_h.prox(&(z - &grad_g_lambda / step), lambda / step)?;
    let h_hat = prox_h.value(&z_hat);
    if !h_hat.is_finite() {
        return Err(Error::Domain("prox output left the domain of h".into()));
    }
    let (g_hat, grad_hat) = smooth_g.value_and_gradient(&z_hat);

    let shift = v + z_minus - z;
    let v_hat = (&shift + (z - &z_hat) * step) / lambda + &grad_hat - &grad_z;

    // Δ with the quadratic terms differenced as ½⟨z − ẑ, z + ẑ − 2z⁻⟩.
    let dz = z - &z_hat;
    let quad = 0.5 * dz.dot(&(z + &z_hat - z_minus * 2.0));
    let h_z = prox_h.value_on_hull(z);
    let delta = lambda * (g_z - g_hat) + quad - v.dot(&dz) + lambda * (h_z - h_hat);
    let magnitude = lambda * (g_z.abs() + g_hat.abs() + h_z.abs() + h_hat.abs()) + quad.abs() + v.dot(&dz).abs();
    let delta_error = 8.0 * f64::EPSILON * magnitude;

    let scale = 1.0 + g_z.abs() + z.norm() + z_minus.norm();
    if delta < 0.0 {
        trace!("refinement gap rounded below zero: {delta:e}");
    }
    Ok(RefinementOutput { z_hat, v_hat, delta, scale, delta_error })
}

/// Checks `Δ ≥ 0`, `λ‖v̂‖ ≤ ‖v + z⁻ − z‖ + 2√(2(λM+1)Δ)` and
/// `‖ẑ − z‖ ≤ √(2Δ/(λM+1))`, each up to `1e-10·scale`. Inside the square
/// roots `Δ` is widened by its rounding error.
pub fn verify_bounds(input: &RefinementInput<'_>, out: &RefinementOutput) -> RefinementChecks {
    let tol = 1e-10 * out.scale;
    let step = input.lambda * input.lipschitz + 1.0;
    let delta = out.delta_clamped() + out.delta_error;
    let shift = (input.v + input.z_minus - input.z).norm();
    RefinementChecks {
        delta_nonnegative: out.delta >= -1e-12 * out.scale,
        residual_bound: input.lambda * out.v_hat.norm() <= shift + 2.0 * (2.0 * step * delta).sqrt() + tol,
        displacement_bound: (&out.z_hat - input.z).norm() <= (2.0 * delta / step).sqrt() + tol,
    }
}

/// `Δ ≤ ε` up to `1e-10·scale`; holds whenever `v ∈ ∂_ε(λ(g+h) + ½‖·−z⁻‖²)(z)`.
pub fn check_delta_bound(output: &RefinementOutput, eps: f64) -> bool {
    output.delta <= eps + 1e-10 * output.scale
}

/// Prox fixed-point test of `v̂ − ∇g(ẑ) ∈ ∂h(ẑ)`: returns
/// `‖ẑ − prox_h(ẑ + t(v̂ − ∇g(ẑ)), t)‖`.
pub fn inclusion_residual(
    smooth_g: &dyn SmoothFunction,
    prox_h: &dyn ProxOracle,
    z_hat: &Point,
    v_hat: &Point,
    t: f64,
) -> Result<f64> {
    let sub = v_hat - smooth_g.gradient(z_hat);
    let fixed = prox_h.prox(&(z_hat + sub * t), t)?;
    Ok((z_hat - fixed).norm())
}
