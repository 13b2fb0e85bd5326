//! Scaled vectorization of symmetric matrices.
//!
//! The upper triangle is packed row by row with off-diagonal entries scaled
//! by √2, so `⟨svec(X), svec(Y)⟩ = ⟨X, Y⟩_F`.

use nalgebra::DMatrix;

use crate::model::Point;

pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Recovers `n` from `n(n+1)/2`.
pub fn svec_order(dim: usize) -> Option<usize> {
    let n = (((8 * dim + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (n..=n + 1).find(|&k| svec_dim(k) == dim)
}

/// Packs the symmetric part of `m`.
pub fn svec(m: &DMatrix<f64>) -> Point {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "svec needs a square matrix");
    let mut out = Point::zeros(svec_dim(n));
    let mut idx = 0;
    for i in 0..n {
        out[idx] = m[(i, i)];
        idx += 1;
        for j in i + 1..n {
            out[idx] = std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            idx += 1;
        }
    }
    out
}

pub fn smat(v: &Point, n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), svec_dim(n), "svec length does not match order {n}");
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        m[(i, i)] = v[idx];
        idx += 1;
        for j in i + 1..n {
            let x = v[idx] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            idx += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn order_recovery() {
        for n in 1..200 {
            assert_eq!(svec_order(svec_dim(n)), Some(n));
        }
        assert_eq!(svec_order(4), None);
    }

    proptest! {
        #[test]
        fn frobenius_inner_product(n in 1usize..7, seed in proptest::collection::vec(-5.0f64..5.0, 98)) {
            let x = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % 49] + seed[(j * n + i) % 49]);
            let y = DMatrix::from_fn(n, n, |i, j| seed[49 + (i * n + j) % 49] + seed[49 + (j * n + i) % 49]);
            let frob = x.component_mul(&y).sum();
            let packed = svec(&x).dot(&svec(&y));
            prop_assert!((frob - packed).abs() <= 1e-12 * (1.0 + frob.abs()));
            // One rounding each way; x ↦ fl(√2·x) is not injective.
            let round = smat(&svec(&x), n);
            for (a, b) in round.iter().zip(x.iter()) {
                prop_assert!((a - b).abs() <= 2.0 * f64::EPSILON * b.abs());
            }
            prop_assert_eq!(round.clone(), round.transpose());
        }
    }
}
