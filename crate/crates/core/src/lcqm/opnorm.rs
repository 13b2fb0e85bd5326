//! Operator-norm estimation by power iteration on `A*A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{LinearMap, Point};

const MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// Power-iteration estimate of `‖A‖`.
    pub estimate: f64,
    /// `estimate·(1 + 10·tol)`, or the Frobenius norm if iteration did not
    /// converge.
    pub upper_bound: f64,
    pub converged: bool,
}

/// Frobenius norm, computed as `√Σᵢ‖A* eᵢ‖²`.
pub fn frobenius_norm(map: &dyn LinearMap) -> f64 {
    let l = map.range_dim();
    (0..l)
        .map(|i| {
            let mut e = Point::zeros(l);
            e[i] = 1.0;
            map.adjoint(&e).norm_squared()
        })
        .sum::<f64>()
        .sqrt()
}

/// Power iteration from a seeded random start until the Rayleigh quotient
/// changes by at most `tol` relatively.
pub fn operator_norm(map: &dyn LinearMap, tol: f64, seed: u64) -> NormEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.domain_dim();
    let mut x = Point::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    if x.norm() == 0.0 {
        x[0] = 1.0;
    }
    x /= x.norm();

    let mut rayleigh = 0.0;
    for _ in 0..MAX_ITERS {
        let ax = map.apply(&x);
        let next = ax.norm_squared();
        let y = map.adjoint(&ax);
        let ny = y.norm();
        if ny == 0.0 {
            break;
        }
        x = y / ny;
        if (next - rayleigh).abs() <= tol * next {
            let estimate = next.sqrt();
            return NormEstimate { estimate, upper_bound: estimate * (1.0 + 10.0 * tol), converged: true };
        }
        rayleigh = next;
    }
    let frob = frobenius_norm(map);
    NormEstimate { estimate: rayleigh.sqrt(), upper_bound: frob, converged: false }
}
