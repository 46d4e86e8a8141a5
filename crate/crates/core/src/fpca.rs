//! Empirical spectral objects of the predictor curves: sample mean, sample
//! covariance operator, its eigenpairs, and the per-curve eigen-scores.
//!
//! Everything lives in coefficient space. With curves expanded in an
//! orthonormal basis, the covariance operator `K̃` is represented exactly by
//! the `K × K` coefficient covariance matrix, and its eigenfunctions are the
//! eigenvectors read as coefficient vectors.

use nalgebra::DMatrix;

use crate::datagen::Dataset;
use crate::error::{invalid, FglmError, Result};
use crate::funcspace::FunctionRep;
use crate::linalg::{sym_eigen, SymEigen};

/// Coefficient-wise average of the rows of `curves`.
pub fn sample_mean(curves: &DMatrix<f64>) -> Result<FunctionRep> {
    let n = curves.nrows();
    if n == 0 {
        return Err(FglmError::SampleTooSmall { n, min: 1 });
    }
    let mean = curves.row_mean();
    Ok(FunctionRep::new(mean.iter().copied().collect()))
}

fn centered(curves: &DMatrix<f64>, mean: &FunctionRep) -> DMatrix<f64> {
    let mut c = curves.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let m = mean.coeff(j + 1);
        col.add_scalar_mut(-m);
    }
    c
}

/// Sample covariance with divisor `n − 1`.
pub fn sample_cov(curves: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = curves.nrows();
    if n < 2 {
        return Err(FglmError::SampleTooSmall { n, min: 2 });
    }
    let mean = sample_mean(curves)?;
    let c = centered(curves, &mean);
    let mut cov = c.tr_mul(&c) / (n - 1) as f64;
    // exact symmetry; gemm rounding can differ between the two triangles
    let k = cov.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Descending eigensystem of a symmetric matrix; eigenvectors are columns.
pub fn eigendecompose(cov: &DMatrix<f64>) -> Result<SymEigen> {
    sym_eigen(cov)
}

/// `z̃_{i,j} = ⟨X_i − X̄, φ̃_j⟩` for `j = 1..=n_components`.
pub fn compute_scores(
    curves: &DMatrix<f64>,
    xbar: &FunctionRep,
    phi: &DMatrix<f64>,
    n_components: usize,
) -> Result<DMatrix<f64>> {
    if n_components > phi.ncols() {
        return Err(invalid(format!(
            "requested {n_components} scores but only {} eigenfunctions exist",
            phi.ncols()
        )));
    }
    if phi.nrows() != curves.ncols() {
        return Err(FglmError::DimensionMismatch {
            expected: curves.ncols(),
            actual: phi.nrows(),
        });
    }
    let c = centered(curves, xbar);
    Ok(c * phi.columns(0, n_components))
}

/// Sample mean, covariance and eigensystem of a set of curves.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub xbar: FunctionRep,
    pub cov: DMatrix<f64>,
    /// `θ̃_1 ≥ θ̃_2 ≥ … ≥ 0`.
    pub theta: Vec<f64>,
    /// Eigenvectors `φ̃_k` as columns (coefficient vectors).
    pub phi: DMatrix<f64>,
    n: usize,
}

impl SpectralEstimate {
    pub fn new(curves: &DMatrix<f64>) -> Result<Self> {
        let n = curves.nrows();
        let xbar = sample_mean(curves)?;
        let cov = sample_cov(curves)?;
        let SymEigen {
            mut values,
            vectors,
        } = eigendecompose(&cov)?;
        for (k, v) in values.iter_mut().enumerate() {
            // rank(K̃) ≤ n − 1, so θ̃_k = 0 for k ≥ n (1-based)
            if k + 1 >= n || *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            xbar,
            cov,
            theta: values,
            phi: vectors,
            n,
        })
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        Self::new(&ds.curves)
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// `φ̃_k` (1-based) as a function.
    pub fn eigenfunction(&self, k: usize) -> FunctionRep {
        FunctionRep::new(self.phi.column(k - 1).iter().copied().collect())
    }

    pub fn scores(&self, curves: &DMatrix<f64>, n_components: usize) -> Result<DMatrix<f64>> {
        compute_scores(curves, &self.xbar, &self.phi, n_components)
    }

    /// `Σ_k θ̃_k φ̃_k φ̃_kᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let k = self.theta.len();
        let mut out = DMatrix::zeros(k, k);
        for (j, &t) in self.theta.iter().enumerate() {
            let v = self.phi.column(j);
            out += t * &v * v.transpose();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_ground_truth, sample_dataset, TruthOptions};
    use crate::expfam::ExpFamily;

    fn rows(data: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(data.len(), data[0].len(), |i, j| data[i][j])
    }

    #[test]
    fn mean_examples() {
        let m = sample_mean(&rows(&[&[1.0, -2.0, 3.0], &[-1.0, 2.0, -3.0]])).unwrap();
        assert!(m.norm_sq() == 0.0);
        let same = rows(&[&[0.5, 1.5], &[0.5, 1.5], &[0.5, 1.5]]);
        assert_eq!(sample_mean(&same).unwrap().coeffs(), &[0.5, 1.5]);
        assert!(sample_mean(&DMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn mean_concentrates() {
        let gt =
            make_ground_truth(2.0, 3.0, ExpFamily::Gaussian, 50, TruthOptions::default()).unwrap();
        let sim = sample_dataset(&gt, 10_000, 1).unwrap();
        let m = sample_mean(&sim.data.curves).unwrap();
        let trace: f64 = gt.theta.iter().sum();
        assert!(m.norm() <= 4.0 * (trace / 10_000.0).sqrt());
    }

    #[test]
    fn covariance_examples() {
        let cov = sample_cov(&rows(&[&[1.0, 0.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        let same = rows(&[&[0.5, 1.5], &[0.5, 1.5], &[0.5, 1.5]]);
        assert_eq!(sample_cov(&same).unwrap(), DMatrix::zeros(2, 2));
        assert!(matches!(
            sample_cov(&rows(&[&[1.0, 2.0]])),
            Err(FglmError::SampleTooSmall { n: 1, min: 2 })
        ));
    }

    #[test]
    fn covariance_law_of_large_numbers() {
        let gt =
            make_ground_truth(2.0, 3.0, ExpFamily::Gaussian, 4, TruthOptions::default()).unwrap();
        let sim = sample_dataset(&gt, 100_000, 2).unwrap();
        let cov = sample_cov(&sim.data.curves).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { gt.theta[i] } else { 0.0 };
                assert!((cov[(i, j)] - target).abs() < 0.02);
            }
        }
    }

    #[test]
    fn eigen_examples() {
        let e = eigendecompose(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 0.0]);
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-15 && e.vectors[(1, 0)] == 0.0);

        let e = eigendecompose(&DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0])).unwrap();
        let d = 1.04f64.sqrt();
        assert!((e.values[0] - (3.0 + d) / 2.0).abs() < 1e-14);
        assert!((e.values[1] - (3.0 - d) / 2.0).abs() < 1e-14);
        assert!((e.values[0] - 2.009902).abs() < 1e-6);

        let e = eigendecompose(&DMatrix::identity(3, 3)).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(
            eigendecompose(&asym),
            Err(FglmError::NotSymmetric(_))
        ));
    }

    #[test]
    fn spectral_estimate_invariants() {
        let gt =
            make_ground_truth(2.0, 3.0, ExpFamily::Gaussian, 40, TruthOptions::default()).unwrap();
        // n < K so the rank deficiency is visible
        let sim = sample_dataset(&gt, 25, 3).unwrap();
        let est = SpectralEstimate::from_dataset(&sim.data).unwrap();
        assert!(est.theta.windows(2).all(|w| w[0] >= w[1]));
        assert!(est.theta.iter().all(|&t| t >= 0.0));
        assert!(est.theta[24..].iter().all(|&t| t == 0.0));
        assert!(est.theta[23] > 0.0);

        let gram = est.phi.tr_mul(&est.phi);
        assert!((gram - DMatrix::identity(40, 40)).amax() < 1e-8);
        assert!((est.reconstruct() - &est.cov).norm() <= 1e-8 * est.cov.norm());
        for k in 0..40 {
            let v = est.phi.column(k);
            let resid = (&est.cov * v - v * est.theta[k]).norm();
            assert!(resid <= 1e-8, "k={k} residual {resid}");
        }
    }

    #[test]
    fn score_examples() {
        let curves = rows(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let est = SpectralEstimate::new(&curves).unwrap();
        let z = est.scores(&curves, 1).unwrap();
        assert_eq!(z[(0, 0)].abs(), 1.0);
        assert_eq!(z[(0, 0)], -z[(1, 0)]);
        let phi = DMatrix::identity(2, 2);
        let z = compute_scores(&curves, &est.xbar, &phi, 1).unwrap();
        assert_eq!((z[(0, 0)], z[(1, 0)]), (1.0, -1.0));

        let flat = rows(&[&[0.3, 0.1], &[0.3, 0.1]]);
        let xbar = sample_mean(&flat).unwrap();
        assert_eq!(
            compute_scores(&flat, &xbar, &phi, 2).unwrap(),
            DMatrix::zeros(2, 2)
        );
        assert!(compute_scores(&flat, &xbar, &phi, 3).is_err());
    }

    #[test]
    fn score_covariance_is_diagonal_in_eigenvalues() {
        let gt =
            make_ground_truth(2.0, 3.0, ExpFamily::Poisson, 60, TruthOptions::default()).unwrap();
        let sim = sample_dataset(&gt, 300, 4).unwrap();
        let est = SpectralEstimate::from_dataset(&sim.data).unwrap();
        let n_comp = 12;
        let z = est.scores(&sim.data.curves, n_comp).unwrap();
        for j in 0..n_comp {
            assert!(z.column(j).mean().abs() < 1e-10);
        }
        let s = z.tr_mul(&z) / 299.0;
        for j in 0..n_comp {
            for k in 0..n_comp {
                let target = if j == k { est.theta[j] } else { 0.0 };
                assert!((s[(j, k)] - target).abs() < 1e-8);
            }
        }
    }
}
