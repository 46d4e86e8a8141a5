//! Linearization of the exponential-family MLE around the true parameter.
//!
//! With `J_n = Σ ξ_i ξ_iᵀ ψ̈(λ_i)`, `w_i = J_n^{-1/2} ξ_i` and
//! `W_n = Σ w_i (y_i − ψ̇(λ_i))`, the MLE satisfies
//! `|J_n^{1/2}(ĝ − γ) − W_n| ≤ ε₁` on `{|W_n| ≤ √(N₊/ε₂)}` whenever
//! `max_i |w_i| ≤ ε₁ε₂ / (2 G(1) N₊)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::estimator::{fit_mle, NewtonConfig};
use crate::expfam::ExpFamily;
use crate::linalg::sqrt_and_inv_sqrt;
use crate::seed::derive_seed;

pub const EPS1: f64 = 0.5;
pub const EPS2: f64 = 0.1;

/// Quantities of the linearization for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    /// `max_i |w_i|`.
    pub max_weight: f64,
    /// `ε₁ε₂ / (2 G(1) N₊)`.
    pub weight_bound: f64,
    /// `|W_n|`.
    pub w_norm: f64,
    /// `√(N₊/ε₂)`.
    pub w_bound: f64,
    /// `|J_n^{1/2}(ĝ − γ) − W_n|`.
    pub residual: f64,
    pub fit_converged: bool,
}

impl Linearization {
    pub fn hypothesis_holds(&self) -> bool {
        self.max_weight <= self.weight_bound
    }

    pub fn event_holds(&self) -> bool {
        self.w_norm <= self.w_bound
    }

    /// The conclusion fails: outside the event, or a residual above `ε₁`.
    pub fn violated(&self) -> bool {
        !self.event_holds() || self.residual > EPS1
    }
}

/// Computes the linearization for design rows `xi` (each `(1, z_i)`, as an
/// `n × N₊` matrix), responses `y` and true parameter `gamma`.
pub fn linearization_residual(
    xi: &DMatrix<f64>,
    y: &[f64],
    family: ExpFamily,
    gamma: &[f64],
    newton: &NewtonConfig,
) -> Result<Linearization> {
    let (n, p) = xi.shape();
    if gamma.len() != p || y.len() != n {
        return Err(invalid("design, responses and gamma disagree in size"));
    }
    if xi.column(0).iter().any(|&v| v != 1.0) {
        return Err(invalid("first design column must be the intercept"));
    }
    let g = DVector::from_column_slice(gamma);
    let lambda = xi * &g;
    let mut j = DMatrix::zeros(p, p);
    let mut score = DVector::zeros(p);
    for i in 0..n {
        let row = xi.row(i).transpose();
        j.ger(family.psi_ddot(lambda[i]), &row, &row, 1.0);
        score.axpy(y[i] - family.psi_dot(lambda[i]), &row, 1.0);
    }
    let (j_half, j_inv_half) = sqrt_and_inv_sqrt(&j)?;
    let w = xi * &j_inv_half; // rows are w_iᵀ (J^{-1/2} is symmetric)
    let max_weight = w.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let w_n = &j_inv_half * &score;

    let scores = xi.columns(1, p - 1).into_owned();
    let fit = fit_mle(y, &scores, family, newton)?;
    let g_hat = DVector::from_vec(fit.g);
    let residual = (&j_half * (g_hat - &g) - &w_n).norm();

    let p_f = p as f64;
    Ok(Linearization {
        max_weight,
        weight_bound: EPS1 * EPS2 / (2.0 * family.envelope(1.0) * p_f),
        w_norm: w_n.norm(),
        w_bound: (p_f / EPS2).sqrt(),
        residual,
        fit_converged: fit.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationReport {
    pub reps: usize,
    pub hypothesis_count: usize,
    pub event_count: usize,
    pub violations: usize,
    pub violations_under_hypothesis: usize,
    pub max_residual: f64,
    pub max_weight: f64,
    pub weight_bound: f64,
    pub per_rep: Vec<Linearization>,
}

impl LinearizationReport {
    /// Allowed violation rate `2ε₂` plus four binomial standard errors.
    pub fn allowed_rate(&self) -> f64 {
        let p = 2.0 * EPS2;
        p + 4.0 * (p * (1.0 - p) / self.reps as f64).sqrt()
    }

    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.reps as f64
    }

    /// Violation rate among replications meeting the weight hypothesis, if any did.
    pub fn conditional_violation_rate(&self) -> Option<f64> {
        (self.hypothesis_count > 0)
            .then(|| self.violations_under_hypothesis as f64 / self.hypothesis_count as f64)
    }
}

/// Monte Carlo over `reps` designs `ξ_i = (1, η_i)`, `η_i ~ N(0, I_N)`, with
/// responses drawn from `Q_{ξ_iᵀγ}`.
pub fn check_mle_linearization(
    n: usize,
    n_components: usize,
    family: ExpFamily,
    gamma: &[f64],
    reps: usize,
    seed: u64,
) -> Result<LinearizationReport> {
    if gamma.len() != n_components + 1 {
        return Err(invalid(format!(
            "gamma must have N + 1 = {} entries",
            n_components + 1
        )));
    }
    if reps == 0 {
        return Err(invalid("reps must be positive"));
    }
    let newton = NewtonConfig::default();
    let per_rep: Vec<Linearization> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, rep));
            let xi = DMatrix::from_fn(n, n_components + 1, |_, j| {
                if j == 0 {
                    1.0
                } else {
                    StandardNormal.sample(&mut rng)
                }
            });
            let lambda = &xi * DVector::from_column_slice(gamma);
            let y = lambda
                .iter()
                .map(|&l| family.sample_response(l, &mut rng))
                .collect::<Result<Vec<f64>>>()?;
            linearization_residual(&xi, &y, family, gamma, &newton)
        })
        .collect::<Result<_>>()?;

    let hypothesis_count = per_rep.iter().filter(|l| l.hypothesis_holds()).count();
    Ok(LinearizationReport {
        reps,
        hypothesis_count,
        event_count: per_rep.iter().filter(|l| l.event_holds()).count(),
        violations: per_rep.iter().filter(|l| l.violated()).count(),
        violations_under_hypothesis: per_rep
            .iter()
            .filter(|l| l.hypothesis_holds() && l.violated())
            .count(),
        max_residual: per_rep.iter().map(|l| l.residual).fold(0.0, f64::max),
        max_weight: per_rep.iter().map(|l| l.max_weight).fold(0.0, f64::max),
        weight_bound: per_rep[0].weight_bound,
        per_rep,
    })
}
