//! Dense symmetric linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FglmError, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
/// `vectors` holds the matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Largest `|a_ij − a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Full eigensystem of a dense symmetric matrix.
///
/// Rejects input whose asymmetry exceeds `1e-10 · max(1, max|a_ij|)`. The
/// decomposition runs on the symmetrized matrix. Eigenvalues are sorted
/// descending with a stable sort, and each eigenvector is signed so its
/// largest-magnitude entry is positive.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    if a.nrows() != a.ncols() {
        return Err(FglmError::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    let scale = a.amax().max(1.0);
    let asym = max_asymmetry(a);
    if asym > 1e-10 * scale {
        return Err(FglmError::NotSymmetric(asym));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(SymEigen { values, vectors })
}

impl SymEigen {
    /// `V f(D) Vᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&v| f(v)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&d);
        scaled * self.vectors.transpose()
    }
}

/// Symmetric square root and inverse square root of a positive definite matrix.
pub fn sqrt_and_inv_sqrt(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = sym_eigen(a)?;
    if eig.values.iter().any(|&v| v <= 0.0) {
        return Err(FglmError::Numerical(
            "matrix is not positive definite".into(),
        ));
    }
    Ok((eig.apply(f64::sqrt), eig.apply(|v| 1.0 / v.sqrt())))
}

/// Spectral norm of a symmetric matrix.
pub fn sym_operator_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigen(a)?
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the standard
/// normal weight, so that `E f(ν) ≈ Σ w_i f(x_i)` for `ν ~ N(0, 1)`.
///
/// Golub–Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite recurrence, with weights the squared first
/// components of its eigenvectors.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = sym_eigen(&jacobi)?;
    let nodes = eig.values.clone();
    let weights: Vec<f64> = (0..n).map(|i| eig.vectors[(0, i)].powi(2)).collect();
    Ok((nodes, weights))
}
