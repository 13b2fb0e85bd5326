//! Small stock oracles: quadratics, box indicators and dense constraint maps.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{Curvature, LinearMap, Point, ProxOracle, SmoothFunction, SmoothOracle};

/// `f(z) = ½ zᵀQz + qᵀz` with symmetric `Q`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    linear: Point,
    curvature: Curvature,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, linear: Point, curvature: Curvature) -> Self {
        assert_eq!(hessian.nrows(), linear.len());
        Self { hessian, linear, curvature }
    }

    /// Reads the curvature pair off the spectrum of `Q`. The lower curvature
    /// is floored at `1e-8·L` since it must be positive.
    pub fn with_exact_curvature(hessian: DMatrix<f64>, linear: Point) -> Result<Self> {
        let sym = (&hessian + hessian.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 10_000).ok_or(Error::Eigen)?;
        let upper = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let lower = (-eig.eigenvalues.min()).max(1e-8 * upper);
        Ok(Self::new(sym, linear, Curvature::new(lower, upper.max(lower))?))
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }
}

impl SmoothFunction for Quadratic {
    fn value(&self, z: &Point) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z)
    }

    fn gradient(&self, z: &Point) -> Point {
        &self.hessian * z + &self.linear
    }

    fn value_and_gradient(&self, z: &Point) -> (f64, Point) {
        let hz = &self.hessian * z;
        (0.5 * z.dot(&hz) + self.linear.dot(z), hz + &self.linear)
    }
}

impl SmoothOracle for Quadratic {
    fn curvature(&self) -> Curvature {
        self.curvature
    }
}

/// `h ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl ProxOracle for Zero {
    fn prox(&self, w: &Point, _stepsize: f64) -> Result<Point> {
        Ok(w.clone())
    }

    fn value(&self, _z: &Point) -> f64 {
        0.0
    }
}

/// Indicator of the box `[lower, upper]` (coordinatewise).
#[derive(Clone, Debug)]
pub struct BoxIndicator {
    pub lower: Point,
    pub upper: Point,
}

impl BoxIndicator {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Parameter("box bounds must satisfy lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(Point::from_element(dim, lower), Point::from_element(dim, upper))
    }
}

impl ProxOracle for BoxIndicator {
    fn prox(&self, w: &Point, _stepsize: f64) -> Result<Point> {
        Ok(Point::from_fn(w.len(), |i, _| w[i].clamp(self.lower[i], self.upper[i])))
    }

    fn value(&self, z: &Point) -> f64 {
        let inside = z
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(x, (l, u))| *x >= *l && *x <= *u);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn value_on_hull(&self, _z: &Point) -> f64 {
        0.0
    }
}

/// A constraint `A z = b` with an explicit matrix `A`.
#[derive(Clone, Debug)]
pub struct DenseConstraint {
    matrix: DMatrix<f64>,
    rhs: Point,
    norm_bound: f64,
}

impl DenseConstraint {
    /// Uses the exact spectral norm (largest singular value) as the bound.
    pub fn new(matrix: DMatrix<f64>, rhs: Point) -> Result<Self> {
        let norm = matrix
            .clone()
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or(Error::Eigen)?
            .singular_values
            .max();
        Self::with_norm_bound(matrix, rhs, norm)
    }

    pub fn with_norm_bound(matrix: DMatrix<f64>, rhs: Point, norm_bound: f64) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::Parameter(format!(
                "constraint matrix has {} rows but rhs has length {}",
                matrix.nrows(),
                rhs.len()
            )));
        }
        Ok(Self { matrix, rhs, norm_bound })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearMap for DenseConstraint {
    fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn range_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, z: &Point) -> Point {
        &self.matrix * z
    }

    fn adjoint(&self, p: &Point) -> Point {
        self.matrix.tr_mul(p)
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn rhs(&self) -> &Point {
        &self.rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn box_prox_clamps() {
        let b = BoxIndicator::uniform(3, -1.0, 1.0).unwrap();
        let p = b.prox(&dvector![-3.0, 0.5, 2.0], 0.1).unwrap();
        assert_eq!(p, dvector![-1.0, 0.5, 1.0]);
        assert_eq!(b.value(&p), 0.0);
        assert_eq!(b.value(&dvector![0.0, 0.0, 1.5]), f64::INFINITY);
        assert!(BoxIndicator::uniform(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn dense_constraint_norm() {
        let a = DenseConstraint::new(dmatrix![3.0, 4.0], dvector![1.0]).unwrap();
        assert!((a.norm_bound() - 5.0).abs() < 1e-12);
        assert!(DenseConstraint::new(dmatrix![3.0, 4.0], dvector![1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_curvature_of_indefinite_quadratic() {
        let q = Quadratic::with_exact_curvature(dmatrix![3.0, 0.0; 0.0, -2.0], dvector![0.0, 0.0]).unwrap();
        assert!((q.curvature().upper - 3.0).abs() < 1e-12);
        assert!((q.curvature().lower - 2.0).abs() < 1e-12);
    }
}
