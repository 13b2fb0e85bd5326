//! Accelerated composite gradient (ACG) method for
//!
//! ```text
//! minimize ψ(x) = ψ_s(x) + ψ_n(x),   ψ_n = λ·h + (q/2)‖· − w‖²
//! ```
//!
//! with `ψ_s` convex and `M_s`-smooth and `ψ_n` `μ`-strongly convex. Every
//! iterate `x_j` comes with a pair `(u_j, η_j)` such that
//! `u_j ∈ ∂_{η_j} ψ(x_j)`, which is what the outer method uses as its
//! inexactness certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point, ProxOracle, SmoothFunction};

/// A strongly convex composite problem in the form the ACG method consumes.
pub struct CompositeSubproblem<'a> {
    /// `ψ_s`.
    pub smooth: &'a dyn SmoothFunction,
    /// Proximal oracle for the underlying `h`.
    pub nonsmooth_prox: &'a dyn ProxOracle,
    /// Weight `λ > 0` of `h` inside `ψ_n`.
    pub prox_scale: f64,
    pub quad_coeff: f64,
    pub quad_center: Point,
    /// Upper curvature `M_s` of `ψ_s`.
    pub upper_curvature: f64,
    /// Strong convexity modulus `μ` of `ψ_n`.
    pub strong_convexity: f64,
}

impl CompositeSubproblem<'_> {
    /// `ψ_n(y)` for `y` in the convex hull of prox outputs.
    fn nonsmooth_value(&self, y: &Point) -> f64 {
        self.prox_scale * self.nonsmooth_prox.value_on_hull(y)
            + 0.5 * self.quad_coeff * (y - &self.quad_center).norm_squared()
    }

    /// `ψ(x)` for `x` in the convex hull of prox outputs.
    pub fn value(&self, x: &Point) -> f64 {
        self.smooth.value(x) + self.nonsmooth_value(x)
    }

    fn validate(&self) -> Result<()> {
        if !(self.upper_curvature > 0.0 && self.upper_curvature.is_finite()) {
            return Err(Error::Parameter(format!(
                "M_s must be positive and finite, got {}",
                self.upper_curvature
            )));
        }
        if !(self.strong_convexity >= 0.0) || !(self.quad_coeff >= 0.0) || !(self.prox_scale > 0.0) {
            return Err(Error::Parameter(
                "ACG requires mu >= 0, quad_coeff >= 0 and prox_scale > 0".into(),
            ));
        }
        Ok(())
    }
}

/// The state `(A_j, x_j, y_j, Γ_j, y_0, j)` of the ACG recursion. `Γ_j` is
/// an affine minorant of `ψ_s` stored as `(slope, intercept)`.
#[derive(Clone, Debug)]
pub struct AcgState {
    pub a: f64,
    pub x: Point,
    pub y: Point,
    pub gamma_slope: Point,
    pub gamma_intercept: f64,
    pub y0: Point,
    pub j: usize,
}

impl AcgState {
    pub fn new(x0: &Point) -> Self {
        Self {
            a: 0.0,
            x: x0.clone(),
            y: x0.clone(),
            gamma_slope: Point::zeros(x0.len()),
            gamma_intercept: 0.0,
            y0: x0.clone(),
            j: 0,
        }
    }

    /// `Γ_j(y)`.
    pub fn model_value(&self, y: &Point) -> f64 {
        self.gamma_intercept + self.gamma_slope.dot(y)
    }
}

/// A point `x` with residual `u ∈ ∂_η ψ(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerCertificate {
    pub x: Point,
    pub u: Point,
    pub eta: f64,
    pub iterations: usize,
}

impl InnerCertificate {
    /// Left and right sides of `‖u‖² + 2η ≤ σ²‖x₀ − x + u‖²`.
    pub fn acceptance_sides(&self, x0: &Point, sigma: f64) -> (f64, f64) {
        let lhs = self.u.norm_squared() + 2.0 * self.eta;
        let rhs = sigma * sigma * (x0 - &self.x + &self.u).norm_squared();
        (lhs, rhs)
    }

    pub fn is_accepted(&self, x0: &Point, sigma: f64) -> bool {
        let (lhs, rhs) = self.acceptance_sides(x0, sigma);
        lhs <= rhs
    }
}

/// Lower bound on `A_j` guaranteed by the recursion.
pub fn growth_lower_bound(j: usize, upper_curvature: f64, strong_convexity: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let poly = (j * j) as f64 / 4.0;
    let geo = (1.0 + (strong_convexity / (4.0 * upper_curvature)).sqrt()).powf(2.0 * (j as f64 - 1.0));
    poly.max(geo) / upper_curvature
}

fn log_plus_one(t: f64) -> f64 {
    t.ln().max(1.0)
}

/// `⌈1 + √(M_s/μ)·log⁺₁((1 + σ⁻¹)√(2M_s))⌉`: the number of iterations after
/// which the acceptance inequality is guaranteed to hold.
pub fn acg_iteration_bound(upper_curvature: f64, strong_convexity: f64, sigma: f64) -> usize {
    let t = (1.0 + 1.0 / sigma) * (2.0 * upper_curvature).sqrt();
    (1.0 + (upper_curvature / strong_convexity).sqrt() * log_plus_one(t)).ceil() as usize
}

/// One ACG iteration. Returns the next state and the certificate of its `x`.
pub fn acg_step(state: AcgState, sub: &CompositeSubproblem<'_>) -> Result<(AcgState, InnerCertificate)> {
    let ms = sub.upper_curvature;
    let mu = sub.strong_convexity;
    let AcgState { a, x, y, gamma_slope, gamma_intercept, y0, j } = state;

    let t = mu * a + 1.0;
    let a_next = a + (t + (t * t + 4.0 * ms * t * a).sqrt()) / (2.0 * ms);
    if !(a_next > a) || !a_next.is_finite() {
        return Err(Error::Numerical(format!(
            "ACG weight sequence stalled at A_j = {a} (A_j+1 = {a_next})"
        )));
    }
    let keep = a / a_next;
    let fresh = (a_next - a) / a_next;

    let x_tilde = &x * keep + &y * fresh;
    let (s_val, s_grad) = sub.smooth.value_and_gradient(&x_tilde);
    let slope = gamma_slope * keep + &s_grad * fresh;
    let intercept = keep * gamma_intercept + fresh * (s_val - s_grad.dot(&x_tilde));

    // argmin ⟨slope, y⟩ + λh(y) + (q₀/2)‖y − w₀‖² + ‖y − y₀‖²/(2A) is a prox of h.
    let q = sub.quad_coeff + 1.0 / a_next;
    let center = (&sub.quad_center * sub.quad_coeff + &y0 / a_next - &slope) / q;
    let y_next = sub.nonsmooth_prox.prox(&center, sub.prox_scale / q)?;
    let x_next = &x * keep + &y_next * fresh;

    let u = (&y0 - &y_next) / a_next;
    let model_at_y = intercept + slope.dot(&y_next);
    let eta = sub.value(&x_next) - model_at_y - sub.nonsmooth_value(&y_next) - u.dot(&(&x_next - &y_next));

    let j_next = j + 1;
    debug_assert!(
        a_next >= growth_lower_bound(j_next, ms, mu) * (1.0 - 1e-9),
        "ACG growth bound violated at j = {j_next}"
    );

    let cert = InnerCertificate { x: x_next.clone(), u, eta, iterations: j_next };
    let next = AcgState {
        a: a_next,
        x: x_next,
        y: y_next,
        gamma_slope: slope,
        gamma_intercept: intercept,
        y0,
        j: j_next,
    };
    Ok((next, cert))
}

/// Runs ACG from `x0` until `‖u‖² + 2η ≤ σ²‖x₀ − x + u‖²`.
///
/// `max_iters` defaults to ten times [`acg_iteration_bound`]. Exceeding it
/// yields [`Error::AcgMaxIterations`] carrying the certificate closest to
/// acceptance.
pub fn acg_solve(
    sub: &CompositeSubproblem<'_>,
    x0: &Point,
    sigma: f64,
    max_iters: Option<usize>,
) -> Result<InnerCertificate> {
    sub.validate()?;
    if !(sub.strong_convexity > 0.0) || sub.strong_convexity > 4.0 * sub.upper_curvature {
        return Err(Error::Parameter(format!(
            "acg_solve needs 4 M_s >= mu > 0, got M_s={}, mu={}",
            sub.upper_curvature, sub.strong_convexity
        )));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    let cap = max_iters
        .unwrap_or_else(|| 10 * acg_iteration_bound(sub.upper_curvature, sub.strong_convexity, sigma))
        .max(1);

    let mut state = AcgState::new(x0);
    let mut best: Option<(f64, InnerCertificate)> = None;
    for _ in 0..cap {
        let (next, cert) = acg_step(state, sub)?;
        state = next;
        let (lhs, rhs) = cert.acceptance_sides(x0, sigma);
        if lhs <= rhs {
            return Ok(cert);
        }
        let excess = lhs - rhs;
        if best.as_ref().is_none_or(|(e, _)| excess < *e) {
            best = Some((excess, cert));
        }
    }
    let best = best.map(|(_, c)| c).expect("at least one ACG iteration runs");
    Err(Error::AcgMaxIterations { iterations: cap, best: Box::new(best) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Curvature;
    use crate::oracles::{BoxIndicator, Quadratic, Zero};
    use nalgebra::{dmatrix, dvector, DMatrix};
    use rand::{Rng, SeedableRng};

    fn one_dim<'a>(smooth: &'a Quadratic, ms: f64, mu: f64) -> CompositeSubproblem<'a> {
        CompositeSubproblem {
            smooth,
            nonsmooth_prox: &Zero,
            prox_scale: 1.0,
            quad_coeff: mu,
            quad_center: dvector![0.0],
            upper_curvature: ms,
            strong_convexity: mu,
        }
    }

    // (x − 1)²/2 = x²/2 − x + 1/2; the constant is irrelevant to the method.
    fn shifted_square() -> Quadratic {
        Quadratic::new(dmatrix![1.0], dvector![-1.0], Curvature::new(1.0, 1.0).unwrap())
    }

    #[test]
    fn first_weight_collapses() {
        let f = shifted_square();
        let sub = one_dim(&f, 1.0, 0.5);
        let (s, _) = acg_step(AcgState::new(&dvector![0.0]), &sub).unwrap();
        assert!((s.a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn second_weight_without_strong_convexity() {
        let f = shifted_square();
        let sub = one_dim(&f, 1.0, 0.0);
        let (s, _) = acg_step(AcgState::new(&dvector![0.0]), &sub).unwrap();
        let (s, _) = acg_step(s, &sub).unwrap();
        assert!((s.a - 2.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_iterates_converge() {
        let f = shifted_square();
        let sub = one_dim(&f, 1.0, 1.0);
        let mut state = AcgState::new(&dvector![0.0]);
        let mut last = None;
        for _ in 0..60 {
            let (s, c) = acg_step(state, &sub).unwrap();
            assert!(c.eta >= -1e-12);
            state = s;
            last = Some(c);
        }
        let c = last.unwrap();
        assert!((c.x[0] - 0.5).abs() < 1e-10);
        assert!(c.u.norm() < 1e-10);
        assert!(c.eta.abs() < 1e-12);
    }

    #[test]
    fn optimal_start_stops_immediately() {
        let f = Quadratic::new(dmatrix![0.0], dvector![0.0], Curvature::new(1.0, 1.0).unwrap());
        let sub = one_dim(&f, 1.0, 1.0);
        let cert = acg_solve(&sub, &dvector![0.0], 0.5, None).unwrap();
        assert_eq!(cert.iterations, 1);
        assert_eq!(cert.x[0], 0.0);
        assert_eq!(cert.u[0], 0.0);
        assert_eq!(cert.eta, 0.0);
    }

    #[test]
    fn one_dimensional_solve_within_bound() {
        // ⌈1 + √1·max(ln(3√2), 1)⌉ = ⌈2.445⌉ = 3.
        let bound = (1.0 + (3.0 * 2f64.sqrt()).ln().max(1.0)).ceil() as usize;
        assert_eq!(bound, 3);
        assert_eq!(acg_iteration_bound(1.0, 1.0, 0.5), 3);
        let f = shifted_square();
        let sub = one_dim(&f, 1.0, 1.0);
        let x0 = dvector![0.0];
        let cert = acg_solve(&sub, &x0, 0.5, None).unwrap();
        assert!(cert.iterations <= bound);
        assert!(cert.is_accepted(&x0, 0.5));
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = shifted_square();
        let sub = one_dim(&f, 1.0, 0.0);
        assert!(acg_solve(&sub, &dvector![0.0], 0.5, None).is_err());
        let sub = one_dim(&f, 1.0, 1.0);
        assert!(acg_solve(&sub, &dvector![0.0], 1.0, None).is_err());
        let sub = one_dim(&f, 1.0, 5.0);
        assert!(acg_solve(&sub, &dvector![0.0], 0.5, None).is_err());
    }

    #[test]
    fn underestimated_curvature_hits_the_cap() {
        // True curvature 100, declared 1.
        let f = Quadratic::new(dmatrix![100.0], dvector![-100.0], Curvature::new(1.0, 100.0).unwrap());
        let sub = one_dim(&f, 1.0, 1.0);
        match acg_solve(&sub, &dvector![0.0], 0.01, Some(5)) {
            Err(Error::AcgMaxIterations { iterations, best }) => {
                assert_eq!(iterations, 5);
                assert!(best.iterations <= 5);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn box_constrained_certificate_is_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let hess = g.transpose() * &g;
        let lin = Point::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let ms = hess.symmetric_eigenvalues().max();
        let f = Quadratic::new(hess, lin, Curvature::new(ms, ms).unwrap());
        let bx = BoxIndicator::uniform(n, -0.3, 0.3).unwrap();
        let center = Point::from_fn(n, |_, _| rng.random::<f64>() * 0.6 - 0.3);
        let sub = CompositeSubproblem {
            smooth: &f,
            nonsmooth_prox: &bx,
            prox_scale: 0.7,
            quad_coeff: 0.5,
            quad_center: center.clone(),
            upper_curvature: ms,
            strong_convexity: 0.5,
        };
        let cert = acg_solve(&sub, &center, 0.3, None).unwrap();
        assert!(cert.iterations <= acg_iteration_bound(ms, 0.5, 0.3));
        let psi_x = sub.value(&cert.x);
        let scale = 1.0 + sub.value(&center).abs() + center.norm_squared();
        for _ in 0..100 {
            let y = Point::from_fn(n, |_, _| rng.random::<f64>() * 0.6 - 0.3);
            let psi_y = sub.value(&y);
            assert!(psi_y >= psi_x + cert.u.dot(&(&y - &cert.x)) - cert.eta - 1e-10 * scale);
        }
    }
}
