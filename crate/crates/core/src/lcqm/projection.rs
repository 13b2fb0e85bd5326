//! Euclidean projections onto the unit simplex and the spectraplex
//! `P_n = {Z ⪰ 0 : tr Z = 1}`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::svec::{smat, svec, svec_order};
use crate::error::{Error, Result};
use crate::model::{Point, ProxOracle};

/// Projection onto `{x ≥ 0 : Σx = 1}` by sorting and thresholding.
pub fn simplex_project(y: &[f64]) -> Vec<f64> {
    if y.is_empty() {
        return Vec::new();
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            threshold = t;
        }
    }
    y.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

fn eigen(w: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(w, f64::EPSILON, 10_000).ok_or(Error::Eigen)
}

/// Projection of the symmetric part of `w` onto `P_n`.
///
/// The stepsize of a prox of an indicator is irrelevant; it is accepted for
/// interface uniformity.
pub fn spectraplex_prox(w: &DMatrix<f64>, _stepsize: f64) -> Result<DMatrix<f64>> {
    let n = w.nrows();
    let sym = (w + w.transpose()) * 0.5;
    let eig = eigen(sym)?;
    let weights = simplex_project(eig.eigenvalues.as_slice());
    let mut out = DMatrix::zeros(n, n);
    for (k, &wk) in weights.iter().enumerate() {
        if wk > 0.0 {
            let q = eig.eigenvectors.column(k);
            out.ger(wk, &q, &q, 1.0);
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Indicator of the spectraplex on `svec`-packed points.
#[derive(Clone, Copy, Debug)]
pub struct Spectraplex {
    pub n: usize,
}

impl Spectraplex {
    /// Absolute slack allowed on the trace and the smallest eigenvalue when
    /// testing membership.
    pub const MEMBERSHIP_TOL: f64 = 1e-8;

    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn contains(&self, z: &Point) -> bool {
        let m = smat(z, self.n);
        if (m.trace() - 1.0).abs() > Self::MEMBERSHIP_TOL {
            return false;
        }
        match eigen(m) {
            Ok(e) => e.eigenvalues.min() >= -Self::MEMBERSHIP_TOL,
            Err(_) => false,
        }
    }
}

impl ProxOracle for Spectraplex {
    fn prox(&self, w: &Point, stepsize: f64) -> Result<Point> {
        debug_assert_eq!(svec_order(w.len()), Some(self.n));
        Ok(svec(&spectraplex_prox(&smat(w, self.n), stepsize)?))
    }

    fn value(&self, z: &Point) -> f64 {
        if self.contains(z) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn value_on_hull(&self, _z: &Point) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn simplex_examples() {
        assert!(close(&simplex_project(&[0.25; 4]), &[0.25; 4], 1e-15));
        assert!(close(&simplex_project(&[2.0, 0.0]), &[1.0, 0.0], 1e-15));
        assert!(close(&simplex_project(&[0.5, 0.5, 0.5]), &[1.0 / 3.0; 3], 1e-15));
        assert!(simplex_project(&[]).is_empty());
    }

    #[test]
    fn spectraplex_examples() {
        let n = 4;
        let eye = DMatrix::<f64>::identity(n, n) / n as f64;
        assert!((spectraplex_prox(&eye, 1.0).unwrap() - &eye).norm() < 1e-12);

        let mut d = DMatrix::zeros(n, n);
        d[(0, 0)] = 2.0;
        let mut e = DMatrix::zeros(n, n);
        e[(0, 0)] = 1.0;
        assert!((spectraplex_prox(&d, 1.0).unwrap() - e).norm() < 1e-12);

        assert!((spectraplex_prox(&DMatrix::zeros(n, n), 1.0).unwrap() - &eye).norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_psd_trace_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..8);
            let w = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let p = spectraplex_prox(&w, 1.0).unwrap();
            assert!((p.trace() - 1.0).abs() < 1e-10);
            assert!(p.clone().symmetric_eigenvalues().min() > -1e-10);
            let pp = spectraplex_prox(&p, 1.0).unwrap();
            assert!((pp - &p).norm() < 1e-10);
            assert!(Spectraplex::new(n).contains(&svec(&p)));
        }
    }
}
