//! The θ-IPAAL method.
//!
//! [`static_solve`] runs the fixed-penalty outer loop: each iteration
//! approximately minimizes `λ𝓛^θ_c(·; p_{k−1}) + ½‖· − z_{k−1}‖²` with ACG,
//! refines the result into a point with an exact stationarity inclusion and
//! updates the multiplier by `p_k = (1−θ)p_{k−1} + c(Az_k − b)`.
//!
//! [`dynamic_solve`] wraps it in a penalty-escalation loop that multiplies
//! `c` until the refined point is feasible enough.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::acg::{acg_solve, CompositeSubproblem};
use crate::error::{Error, Result};
use crate::model::{
    inner_sigma, tau_theta, PenalizedSmooth, Point, ProblemSpec, SmoothFunction, ThetaParams, Variant,
};
use crate::refine::{check_delta_bound, refine, verify_bounds, RefinementInput};

/// `ψ_s = λ·g + (τ/2)‖· − center‖²`.
struct ProxCentered<'a> {
    inner: &'a dyn SmoothFunction,
    lambda: f64,
    tau: f64,
    center: &'a Point,
}

impl SmoothFunction for ProxCentered<'_> {
    fn value(&self, z: &Point) -> f64 {
        self.lambda * self.inner.value(z) + 0.5 * self.tau * (z - self.center).norm_squared()
    }

    fn gradient(&self, z: &Point) -> Point {
        self.inner.gradient(z) * self.lambda + (z - self.center) * self.tau
    }

    fn value_and_gradient(&self, z: &Point) -> (f64, Point) {
        let (v, g) = self.inner.value_and_gradient(z);
        let d = z - self.center;
        (self.lambda * v + 0.5 * self.tau * d.norm_squared(), g * self.lambda + d * self.tau)
    }
}

/// Safety caps. None of them binds on well-posed problems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Outer iterations per fixed-penalty solve.
    pub max_outer: usize,
    /// Penalty escalations.
    pub max_cycles: usize,
    /// ACG iteration cap as a multiple of its worst-case bound.
    pub acg_factor: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_outer: 10_000, max_cycles: 60, acg_factor: 10 }
    }
}

/// Fixed-penalty state `(k, z_k, p_k, c, L_c, σ)`.
#[derive(Clone, Debug)]
pub struct OuterState {
    pub k: usize,
    pub z: Point,
    pub p: Point,
    pub c: f64,
    pub params: ThetaParams,
    pub lipschitz_c: f64,
    pub sigma: f64,
}

impl OuterState {
    pub fn new(problem: &ProblemSpec, params: ThetaParams, c: f64, z0: Point, p0: Point) -> Result<Self> {
        if params.variant == Variant::Theoretical && !(c > 2.0 * problem.cbar) {
            return Err(Error::Parameter(format!(
                "penalty c = {c} must exceed 2·cbar = {}",
                2.0 * problem.cbar
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("penalty must be positive and finite, got {c}")));
        }
        if z0.len() != problem.dim() || p0.len() != problem.constraint.range_dim() {
            return Err(Error::Parameter("start point or multiplier has the wrong dimension".into()));
        }
        if !problem.h.value(&z0).is_finite() {
            return Err(Error::Domain("the start point is outside dom h".into()));
        }
        let norm = problem.constraint.norm_bound();
        let lipschitz_c = problem.curvature().upper + c * norm * norm;
        let sigma = inner_sigma(&params, lipschitz_c);
        Ok(Self { k: 0, z: z0, p: p0, c, params, lipschitz_c, sigma })
    }
}

/// Statistics of one accepted outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub v: Point,
    pub eps: f64,
    /// `r_k = (z_k − z_{k−1}) − v_k`.
    pub r: Point,
    pub delta: f64,
    pub v_hat_norm: f64,
    /// `‖Aẑ_k − b‖`.
    pub feas: f64,
    pub acg_iters: usize,
    pub sigma: f64,
    /// Whether the a-priori refinement bounds and `Δ ≤ ε_k` held.
    pub refinement_ok: bool,
}

impl IterationRecord {
    /// `‖v_k‖² + 2ε_k ≤ σ²‖v_k + z_{k−1} − z_k‖²`.
    pub fn acceptance_holds(&self) -> bool {
        self.v.norm_squared() + 2.0 * self.eps <= self.sigma * self.sigma * self.r.norm_squared()
    }
}

/// A triple `(ẑ, v̂, p̂)` with `v̂ ∈ ∇f(ẑ) + ∂h(ẑ) + A*p̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedPoint {
    pub z_hat: Point,
    pub v_hat: Point,
    pub p_hat: Point,
    pub feas: f64,
    pub stationarity: f64,
}

#[derive(Clone, Debug)]
pub struct StaticOutcome {
    pub point: RefinedPoint,
    pub records: Vec<IterationRecord>,
    pub acg_iters: usize,
    /// The outer cap was hit before `‖v̂‖` reached the tolerance.
    pub capped: bool,
}

/// Runs the fixed-penalty method from `(z0, p0)` until `‖v̂_k‖ ≤ stationarity_tol`.
pub fn static_solve(
    problem: &ProblemSpec,
    params: &ThetaParams,
    c: f64,
    stationarity_tol: f64,
    z0: &Point,
    p0: &Point,
    caps: &Caps,
) -> Result<StaticOutcome> {
    let mut state = OuterState::new(problem, *params, c, z0.clone(), p0.clone())?;
    let ThetaParams { theta, tau, lambda, .. } = *params;
    let upper_curvature = lambda * state.lipschitz_c + tau;
    let strong_convexity = 1.0 - tau;
    let acg_cap = caps.acg_factor.max(1)
        * crate::acg::acg_iteration_bound(upper_curvature, strong_convexity, state.sigma);

    let mut records = Vec::new();
    let mut acg_total = 0;
    let mut last: Option<RefinedPoint> = None;
    while state.k < caps.max_outer {
        state.k += 1;
        let g_k = PenalizedSmooth {
            problem,
            multiplier_weight: 1.0 - theta,
            multiplier: &state.p,
            penalty: c,
        };
        let psi_s = ProxCentered { inner: &g_k, lambda, tau, center: &state.z };
        let sub = CompositeSubproblem {
            smooth: &psi_s,
            nonsmooth_prox: problem.h.as_ref(),
            prox_scale: lambda,
            quad_coeff: 1.0 - tau,
            quad_center: state.z.clone(),
            upper_curvature,
            strong_convexity,
        };
        let cert = acg_solve(&sub, &state.z, state.sigma, Some(acg_cap))?;
        acg_total += cert.iterations;

        let input = RefinementInput {
            smooth_g: &g_k,
            lipschitz: state.lipschitz_c,
            prox_h: problem.h.as_ref(),
            lambda,
            z_minus: &state.z,
            z: &cert.x,
            v: &cert.u,
        };
        let refined = refine(&input)?;
        let refinement_ok = verify_bounds(&input, &refined).all() && check_delta_bound(&refined, cert.eta);
        debug_assert!(refinement_ok, "refinement bounds failed at k = {}", state.k);

        let residual_hat = problem.constraint.residual(&refined.z_hat);
        let residual = problem.constraint.residual(&cert.x);
        let p_hat = &state.p * (1.0 - theta) + &residual_hat * c;
        let p_next = &state.p * (1.0 - theta) + &residual * c;

        let record = IterationRecord {
            k: state.k,
            r: &cert.x - &state.z - &cert.u,
            v: cert.u.clone(),
            eps: cert.eta,
            delta: refined.delta,
            v_hat_norm: refined.v_hat.norm(),
            feas: residual_hat.norm(),
            acg_iters: cert.iterations,
            sigma: state.sigma,
            refinement_ok,
        };
        debug!(
            "k={} acg={} |v_hat|={:.3e} feas={:.3e}",
            record.k, record.acg_iters, record.v_hat_norm, record.feas
        );
        let done = record.v_hat_norm <= stationarity_tol;
        let point = RefinedPoint {
            z_hat: refined.z_hat,
            v_hat: refined.v_hat,
            p_hat,
            feas: record.feas,
            stationarity: record.v_hat_norm,
        };
        records.push(record);
        if done {
            return Ok(StaticOutcome { point, records, acg_iters: acg_total, capped: false });
        }
        last = Some(point);
        state.z = cert.x;
        state.p = p_next;
    }
    let point = last.ok_or_else(|| Error::Parameter("max_outer must be at least 1".into()))?;
    Ok(StaticOutcome { point, records, acg_iters: acg_total, capped: true })
}

/// How the stationarity and feasibility tolerances are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    /// `‖v̂‖ ≤ ρ̂` and `‖Aẑ − b‖ ≤ η̂`.
    Absolute,
    /// `‖v̂‖/(‖∇f(z₀)‖ + 1) ≤ ρ̂` and `‖Aẑ − b‖/(‖Az₀ − b‖ + 1) ≤ η̂`.
    Relative,
}

impl std::str::FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Termination::Absolute),
            "relative" => Ok(Termination::Relative),
            other => Err(Error::Config(format!("unknown termination mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub theta: f64,
    pub variant: Variant,
    pub rho_hat: f64,
    pub eta_hat: f64,
    pub termination: Termination,
    /// Initial penalty `c₁`.
    pub c1: f64,
    pub penalty_factor: f64,
    pub warm_start: bool,
    pub caps: Caps,
    /// Caller estimate of `R₀` for the predicted feasibility bound.
    pub r0_estimate: Option<f64>,
}

impl SolverConfig {
    pub fn new(theta: f64, variant: Variant, c1: f64) -> Self {
        Self {
            theta,
            variant,
            rho_hat: 1e-4,
            eta_hat: 1e-4,
            termination: Termination::Relative,
            c1,
            penalty_factor: 5.0,
            warm_start: true,
            caps: Caps::default(),
            r0_estimate: None,
        }
    }

    fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        if !(self.rho_hat > 0.0 && self.eta_hat > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !(self.penalty_factor > 1.0) {
            return Err(Error::Parameter(format!(
                "penalty factor must exceed 1, got {}",
                self.penalty_factor
            )));
        }
        if self.variant == Variant::Theoretical && !(self.c1 > 2.0 * problem.cbar) {
            return Err(Error::Parameter(format!(
                "c1 = {} must exceed 2·cbar = {}",
                self.c1,
                2.0 * problem.cbar
            )));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::Parameter(format!("c1 must be positive, got {}", self.c1)));
        }
        Ok(())
    }
}

/// Analysis quantities surfaced as runtime diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `κ_θ`; infinite for θ = 0.
    pub kappa_theta: f64,
    /// `Σ‖r_j‖²` over all outer iterations.
    pub sum_r_sq: f64,
    /// `(4/λ)√(κ_θ R₀/c)` at the final penalty, when `R₀` was supplied.
    pub feas_bound_pred: Option<f64>,
}

/// `κ_θ = 1 + 16(1−θ)/(θτ_θ)`.
pub fn kappa_theta(theta: f64) -> Result<f64> {
    let tau = tau_theta(theta)?;
    Ok(1.0 + 16.0 * (1.0 - theta) / (theta * tau))
}

/// Predicted feasibility bound `(4/λ)√(κ_θ·R₀/c)`.
pub fn feasibility_bound(r0_estimate: f64, theta: f64, lambda: f64, c: f64) -> Result<f64> {
    if !(r0_estimate >= 0.0 && lambda > 0.0 && c > 0.0) {
        return Err(Error::Parameter("feasibility bound needs R0 >= 0, lambda > 0, c > 0".into()));
    }
    Ok(4.0 / lambda * (kappa_theta(theta)? * r0_estimate / c).sqrt())
}

/// Summary of one penalty cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub c: f64,
    pub outer_iters: usize,
    pub acg_iters: usize,
    pub stationarity: f64,
    pub feasibility: f64,
}

/// Why a solve stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapExceeded {
    Outer,
    Cycles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub cycles: Vec<CycleSummary>,
    pub records: Vec<IterationRecord>,
    pub total_acg_iters: usize,
    pub total_outer_iters: usize,
    pub final_c: f64,
    pub stationarity: f64,
    pub feasibility: f64,
    pub rel_stationarity: f64,
    pub rel_feasibility: f64,
    pub capped: Option<CapExceeded>,
    pub diagnostics: Diagnostics,
}

/// Runs the penalty-escalation driver from `z0`.
pub fn dynamic_solve(problem: &ProblemSpec, z0: &Point, config: &SolverConfig) -> Result<(RefinedPoint, SolveReport)> {
    config.validate(problem)?;
    let params = ThetaParams::new(config.theta, config.variant, problem.curvature().lower)?;

    let grad_scale = problem.f.gradient(z0).norm() + 1.0;
    let feas_scale = problem.constraint.residual(z0).norm() + 1.0;
    let (stat_tol, feas_tol) = match config.termination {
        Termination::Absolute => (config.rho_hat, config.eta_hat),
        Termination::Relative => (config.rho_hat * grad_scale, config.eta_hat * feas_scale),
    };

    let p_zero = Point::zeros(problem.constraint.range_dim());
    let mut start = (z0.clone(), p_zero.clone());
    let mut c = config.c1;
    let mut cycles = Vec::new();
    let mut records = Vec::new();
    let mut capped = None;
    let mut result: Option<RefinedPoint> = None;

    for cycle in 1..=config.caps.max_cycles {
        let out = static_solve(problem, &params, c, stat_tol, &start.0, &start.1, &config.caps)?;
        cycles.push(CycleSummary {
            c,
            outer_iters: out.records.len(),
            acg_iters: out.acg_iters,
            stationarity: out.point.stationarity,
            feasibility: out.point.feas,
        });
        info!(
            "cycle {cycle}: c={c:.3e} outer={} acg={} |v_hat|={:.3e} feas={:.3e}",
            out.records.len(),
            out.acg_iters,
            out.point.stationarity,
            out.point.feas
        );
        records.extend(out.records);
        let point = out.point;
        if out.capped {
            capped = Some(CapExceeded::Outer);
            result = Some(point);
            break;
        }
        if point.feas <= feas_tol {
            result = Some(point);
            break;
        }
        start = if config.warm_start {
            (point.z_hat.clone(), point.p_hat.clone())
        } else {
            (z0.clone(), p_zero.clone())
        };
        result = Some(point);
        if cycle == config.caps.max_cycles {
            capped = Some(CapExceeded::Cycles);
        } else {
            c *= config.penalty_factor;
        }
    }
    let point = result.ok_or_else(|| Error::Parameter("max_cycles must be at least 1".into()))?;

    let kappa = if config.theta > 0.0 { kappa_theta(config.theta)? } else { f64::INFINITY };
    let feas_bound_pred = match config.r0_estimate {
        Some(r0) if config.theta > 0.0 => Some(feasibility_bound(r0, config.theta, params.lambda, c)?),
        _ => None,
    };
    let report = SolveReport {
        total_acg_iters: cycles.iter().map(|s| s.acg_iters).sum(),
        total_outer_iters: cycles.iter().map(|s| s.outer_iters).sum(),
        cycles,
        diagnostics: Diagnostics {
            kappa_theta: kappa,
            sum_r_sq: records.iter().map(|r| r.r.norm_squared()).sum(),
            feas_bound_pred,
        },
        records,
        final_c: c,
        stationarity: point.stationarity,
        feasibility: point.feas,
        rel_stationarity: point.stationarity / grad_scale,
        rel_feasibility: point.feas / feas_scale,
        capped,
    };
    Ok((point, report))
}
