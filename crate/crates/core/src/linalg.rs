//! Small dense linear-algebra helpers shared by the oracles and flows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Largest absolute entry of `Q - Qᵀ`.
pub fn asymmetry(q: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..q.nrows() {
        for j in 0..i {
            worst = worst.max((q[(i, j)] - q[(j, i)]).abs());
        }
    }
    worst
}

/// Checks symmetry to `1e-12` (scaled by the largest entry) and returns the
/// exactly symmetrized copy.
pub fn symmetrized(q: &Matrix) -> Result<Matrix> {
    if q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            found: q.ncols(),
        });
    }
    let scale = q.amax().max(1.0);
    let asym = asymmetry(q);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok((q + q.transpose()) * 0.5)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(q: &Matrix) -> Vec<f64> {
    let mut eig: Vec<f64> = q.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Numerical rank from the singular values, relative tolerance `1e-10`.
pub fn rank(a: &Matrix) -> usize {
    let sv = a.clone().singular_values();
    let top = sv.iter().copied().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

/// Haar-ish random matrix with orthonormal columns (`rows >= cols`).
pub fn random_orthonormal<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn check_len(v: &Vector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}
