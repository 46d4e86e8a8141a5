//! Ground-truth members of the parameter class and simulated datasets from
//! the functional GLM `y_i | X_i ~ Q_{λ_i}`, `λ_i = a + ⟨X_i, B⟩`.
//!
//! Predictor curves are Gaussian processes with a Karhunen–Loève expansion in
//! the cosine basis: `X_i = μ + Σ_k z_{i,k} φ_k` with `z_{i,k} ~ N(0, θ_k)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, FglmError, Result};
use crate::expfam::ExpFamily;
use crate::funcspace::FunctionRep;

pub const DEFAULT_K_TRUNC: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuMode {
    #[default]
    Zero,
    /// `μ_k = k^{-2}` for `k ≤ 4`.
    Bumps,
}

impl std::str::FromStr for MuMode {
    type Err = FglmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" => Ok(MuMode::Zero),
            "bumps" => Ok(MuMode::Bumps),
            other => Err(invalid(format!(
                "unknown mu_mode {other:?} (expected zero or bumps)"
            ))),
        }
    }
}

impl MuMode {
    pub fn name(&self) -> &'static str {
        match self {
            MuMode::Zero => "zero",
            MuMode::Bumps => "bumps",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TruthOptions {
    pub intercept: f64,
    pub mu_mode: MuMode,
}

impl Default for TruthOptions {
    fn default() -> Self {
        Self {
            intercept: 0.5,
            mu_mode: MuMode::Zero,
        }
    }
}

/// A member `(K, a, μ, B)` of the class with eigenvalue decay `α` and slope
/// smoothness `β`, truncated to `k_trunc` basis coefficients.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub alpha: f64,
    pub beta: f64,
    pub radius: f64,
    pub intercept: f64,
    pub mu: FunctionRep,
    /// Covariance eigenvalues `θ_1 > θ_2 > …`.
    pub theta: Vec<f64>,
    /// Slope coefficients `b_k`.
    pub slope: FunctionRep,
    pub family: ExpFamily,
}

/// A violated class constraint, reported with 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassViolation {
    EigenvalueCeiling { k: usize },
    EigenvalueGap { k: usize },
    PairwiseGap { k: usize, j: usize },
    SlopeDecay { k: usize },
    Intercept,
    Mean,
}

impl GroundTruth {
    pub fn k_trunc(&self) -> usize {
        self.theta.len()
    }

    /// Checks every constraint of the class exhaustively up to `k_trunc`,
    /// including all pairs `k < j` of the eigenvalue gap condition.
    pub fn class_violations(&self) -> Vec<ClassViolation> {
        let (a, r) = (self.alpha, self.radius);
        let kf = |k: usize| k as f64;
        let mut out = Vec::new();
        let th = &self.theta;
        let slack = 1e-15;
        for k in 1..=th.len() {
            if th[k - 1] > r * kf(k).powf(-a) + slack {
                out.push(ClassViolation::EigenvalueCeiling { k });
            }
            if k < th.len() && th[k - 1] + slack < th[k] + (a / r) * kf(k).powf(-a - 1.0) {
                out.push(ClassViolation::EigenvalueGap { k });
            }
            if self.slope.coeff(k).abs() > r * kf(k).powf(-self.beta) + slack {
                out.push(ClassViolation::SlopeDecay { k });
            }
        }
        for k in 1..=th.len() {
            let pk = kf(k).powf(-a);
            for j in (k + 1)..=th.len() {
                if th[k - 1] - th[j - 1] + slack < (pk - kf(j).powf(-a)) / r {
                    out.push(ClassViolation::PairwiseGap { k, j });
                }
            }
        }
        if self.intercept.abs() > r {
            out.push(ClassViolation::Intercept);
        }
        if self.mu.norm() > r {
            out.push(ClassViolation::Mean);
        }
        out
    }

    /// `Σ_{k>m} b_k²`, the squared norm of the slope outside the first `m`
    /// basis directions.
    pub fn tail_norm_sq(&self, m: usize) -> f64 {
        self.slope.coeffs().iter().skip(m).map(|b| b * b).sum()
    }

    /// `Σ_{k>N} θ_k b_k²`, the variance of the part of `λ_i` lost when the
    /// predictor is truncated to `N` components.
    pub fn lambda_truncation_variance(&self, n_components: usize) -> f64 {
        self.theta
            .iter()
            .zip(self.slope.coeffs())
            .skip(n_components)
            .map(|(t, b)| t * b * b)
            .sum()
    }
}

pub fn make_ground_truth(
    alpha: f64,
    beta: f64,
    family: ExpFamily,
    k_trunc: usize,
    options: TruthOptions,
) -> Result<GroundTruth> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(beta > (alpha + 3.0) / 2.0) || !beta.is_finite() {
        return Err(invalid(format!(
            "beta must exceed (alpha + 3)/2 = {}, got {beta}",
            (alpha + 3.0) / 2.0
        )));
    }
    if k_trunc < 4 {
        return Err(invalid(format!(
            "k_trunc must be at least 4, got {k_trunc}"
        )));
    }
    if !options.intercept.is_finite() {
        return Err(invalid("intercept must be finite"));
    }
    let theta: Vec<f64> = (1..=k_trunc).map(|k| (k as f64).powf(-alpha)).collect();
    let slope = FunctionRep::new(
        (1..=k_trunc)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (k as f64).powf(-beta)
            })
            .collect(),
    );
    let mu = match options.mu_mode {
        MuMode::Zero => FunctionRep::zeros(k_trunc),
        MuMode::Bumps => FunctionRep::new(
            (1..=k_trunc)
                .map(|k| if k <= 4 { (k as f64).powi(-2) } else { 0.0 })
                .collect(),
        ),
    };
    let radius = 2f64
        .powf(alpha + 1.0)
        .max(1.0 + options.intercept.abs() + mu.norm());
    let gt = GroundTruth {
        alpha,
        beta,
        radius,
        intercept: options.intercept,
        mu,
        theta,
        slope,
        family,
    };
    let violations = gt.class_violations();
    if let Some(v) = violations.first() {
        return Err(FglmError::Numerical(format!(
            "constructed truth violates class constraint {v:?}"
        )));
    }
    Ok(gt)
}

/// Observed functional data: curve coefficients (rows) and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n × K` coefficients of `X_i` in the cosine basis.
    pub curves: DMatrix<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(curves: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        if curves.nrows() != y.len() {
            return Err(FglmError::DimensionMismatch {
                expected: curves.nrows(),
                actual: y.len(),
            });
        }
        Ok(Self { curves, y })
    }

    /// Builds a dataset from curve coefficients stored row by row.
    pub fn from_rows(n: usize, k: usize, row_major: &[f64], y: Vec<f64>) -> Result<Self> {
        if row_major.len() != n * k {
            return Err(FglmError::DimensionMismatch {
                expected: n * k,
                actual: row_major.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, k, row_major), y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn basis_size(&self) -> usize {
        self.curves.ncols()
    }

    pub fn curve(&self, i: usize) -> FunctionRep {
        FunctionRep::new(self.curves.row(i).iter().copied().collect())
    }
}

/// A dataset together with the latent quantities used to generate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: Dataset,
    /// `n × K` scores `z_{i,k}` of `X_i − μ`.
    pub scores: DMatrix<f64>,
    pub lambda_true: Vec<f64>,
}

/// Draws `n` observations. The output is a pure function of `(gt, n, seed)`.
pub fn sample_dataset(gt: &GroundTruth, n: usize, seed: u64) -> Result<SimulatedDataset> {
    if n < 2 {
        return Err(FglmError::SampleTooSmall { n, min: 2 });
    }
    let k = gt.k_trunc();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd: Vec<f64> = gt.theta.iter().map(|t| t.sqrt()).collect();
    let b = gt.slope.coeffs();
    let offset = gt.intercept + gt.mu.inner(&gt.slope);

    let mut scores = DMatrix::zeros(n, k);
    let mut curves = DMatrix::zeros(n, k);
    let mut y = Vec::with_capacity(n);
    let mut lambda_true = Vec::with_capacity(n);
    for i in 0..n {
        let mut lambda = offset;
        for j in 0..k {
            let eta: f64 = StandardNormal.sample(&mut rng);
            let z = sd[j] * eta;
            scores[(i, j)] = z;
            curves[(i, j)] = gt.mu.coeff(j + 1) + z;
            lambda += z * b[j];
        }
        y.push(gt.family.sample_response(lambda, &mut rng)?);
        lambda_true.push(lambda);
    }
    Ok(SimulatedDataset {
        data: Dataset { curves, y },
        scores,
        lambda_true,
    })
}

/// Exponent `(1 − 2β)/(α + 2β)` of the minimax rate.
pub fn rate_exponent(alpha: f64, beta: f64) -> f64 {
    (1.0 - 2.0 * beta) / (alpha + 2.0 * beta)
}

/// The minimax rate `n^{(1−2β)/(α+2β)}`.
pub fn rho_n(n: f64, alpha: f64, beta: f64) -> f64 {
    n.powf(rate_exponent(alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(k: usize) -> GroundTruth {
        make_ground_truth(2.0, 3.0, ExpFamily::Gaussian, k, TruthOptions::default()).unwrap()
    }

    #[test]
    fn eigenvalues_and_slope_coefficients() {
        let gt = truth(4);
        assert_eq!(gt.theta[0], 1.0);
        assert_eq!(gt.theta[1], 0.25);
        assert!((gt.theta[2] - 1.0 / 9.0).abs() < 1e-16);
        let b = gt.slope.coeffs();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], -0.125);
        assert!((b[2] - 1.0 / 27.0).abs() < 1e-16);
        assert_eq!(gt.intercept, 0.5);
        assert!(gt.radius >= 8.0);
    }

    #[test]
    fn class_constraints_hold_pairwise() {
        for (a, b) in [(2.0, 3.0), (1.5, 2.5), (3.0, 4.0)] {
            let gt = make_ground_truth(
                a,
                b,
                ExpFamily::Poisson,
                200,
                TruthOptions {
                    intercept: 0.5,
                    mu_mode: MuMode::Bumps,
                },
            )
            .unwrap();
            assert!(gt.class_violations().is_empty());
            // brute-force oracle for the pairwise gap
            for k in 1..=200usize {
                for j in (k + 1)..=200 {
                    let lhs = gt.theta[k - 1] - gt.theta[j - 1];
                    let rhs = ((k as f64).powf(-a) - (j as f64).powf(-a)) / gt.radius;
                    assert!(lhs >= rhs);
                }
            }
        }
    }

    #[test]
    fn violations_are_detected() {
        let mut gt = truth(10);
        gt.theta[3] = gt.theta[2];
        assert!(gt
            .class_violations()
            .iter()
            .any(|v| matches!(v, ClassViolation::EigenvalueGap { k: 3 })));
        gt.slope = FunctionRep::new(vec![100.0]);
        assert!(gt
            .class_violations()
            .contains(&ClassViolation::SlopeDecay { k: 1 }));
    }

    #[test]
    fn parameter_domain_errors() {
        let opts = TruthOptions::default();
        assert!(make_ground_truth(1.0, 3.0, ExpFamily::Gaussian, 10, opts).is_err());
        assert!(make_ground_truth(2.0, 2.5, ExpFamily::Gaussian, 10, opts).is_err());
        assert!(make_ground_truth(2.0, 3.0, ExpFamily::Gaussian, 3, opts).is_err());
    }

    #[test]
    fn bumps_mean() {
        let gt = make_ground_truth(
            2.0,
            3.0,
            ExpFamily::Gaussian,
            8,
            TruthOptions {
                intercept: 0.5,
                mu_mode: MuMode::Bumps,
            },
        )
        .unwrap();
        assert_eq!(gt.mu.coeff(2), 0.25);
        assert_eq!(gt.mu.coeff(5), 0.0);
    }

    #[test]
    fn tail_norm_bound() {
        let gt = truth(200);
        for m in [1usize, 2, 5, 20, 100] {
            let tail = gt.tail_norm_sq(m);
            let bound =
                gt.radius.powi(2) * (m as f64).powf(1.0 - 2.0 * gt.beta) / (2.0 * gt.beta - 1.0);
            assert!(tail <= bound);
        }
    }

    #[test]
    fn construction_identity_for_lambda() {
        let gt = make_ground_truth(
            2.0,
            3.0,
            ExpFamily::Poisson,
            50,
            TruthOptions {
                intercept: 0.5,
                mu_mode: MuMode::Bumps,
            },
        )
        .unwrap();
        let sim = sample_dataset(&gt, 5, 11).unwrap();
        assert_eq!(sim.scores.shape(), (5, 50));
        assert_eq!(sim.data.y.len(), 5);
        for i in 0..5 {
            let x = sim.data.curve(i);
            let via_inner = gt.intercept + x.inner(&gt.slope);
            let via_scores = gt.intercept
                + gt.mu.inner(&gt.slope)
                + (0..50)
                    .map(|k| sim.scores[(i, k)] * gt.slope.coeffs()[k])
                    .sum::<f64>();
            assert!((sim.lambda_true[i] - via_inner).abs() < 1e-12);
            assert!((sim.lambda_true[i] - via_scores).abs() < 1e-12);
        }
        assert!(sample_dataset(&gt, 1, 0).is_err());
    }

    #[test]
    fn zero_slope_mean_response() {
        let mut gt = truth(10);
        gt.slope = FunctionRep::zeros(10);
        let sim = sample_dataset(&gt, 10_000, 5).unwrap();
        let mean = sim.data.y.iter().sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.04);
    }

    #[test]
    fn score_column_variance() {
        let gt = truth(4);
        let sim = sample_dataset(&gt, 100_000, 9).unwrap();
        let col = sim.scores.column(1);
        let mean = col.mean();
        let var = col.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        assert!((var - 0.25).abs() < 0.005, "{var}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let gt = truth(30);
        assert_eq!(
            sample_dataset(&gt, 40, 3).unwrap(),
            sample_dataset(&gt, 40, 3).unwrap()
        );
        assert_ne!(
            sample_dataset(&gt, 40, 3).unwrap(),
            sample_dataset(&gt, 40, 4).unwrap()
        );
    }

    #[test]
    fn lambda_truncation_variance_matches_monte_carlo() {
        let gt = truth(200);
        let n = 20_000;
        let cut = 2;
        let sim = sample_dataset(&gt, n, 21).unwrap();
        let b = gt.slope.coeffs();
        let tails: Vec<f64> = (0..n)
            .map(|i| (cut..200).map(|k| sim.scores[(i, k)] * b[k]).sum())
            .collect();
        let mean = tails.iter().sum::<f64>() / n as f64;
        let var = tails.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let exact = gt.lambda_truncation_variance(cut);
        // sample variance of a normal has sd σ²·√(2/(n−1))
        let se = exact * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - exact).abs() <= 4.0 * se, "{var} vs {exact}");
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rho_n(1.0, 2.0, 3.0), 1.0);
        assert_eq!(rate_exponent(2.0, 3.0), -0.625);
        assert!((rho_n(256.0, 2.0, 3.0) - 0.03125).abs() < 1e-15);
        assert_eq!(rate_exponent(2.0, 4.0), -0.7);
    }
}
