//! Truncated maximum-likelihood estimation of the slope function.
//!
//! Pipeline: spectral estimate of the curves, choice of the fitting level `N`
//! and truncation level `m`, conditional MLE of `(g_0, …, g_N)` over the first
//! `N` eigen-scores, and `B̂ = Σ_{j ≤ m} ĝ_j φ̃_j`.

use nalgebra::{DMatrix, DVector};

use crate::datagen::{Dataset, GroundTruth};
use crate::error::{invalid, FglmError, Result};
use crate::expfam::ExpFamily;
use crate::fpca::SpectralEstimate;
use crate::funcspace::FunctionRep;

/// Constants for `m ≈ c_m n^{1/(α+2β)}` and `N ≈ c_N n^ζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningRule {
    pub c_m: f64,
    pub c_n: f64,
    /// Overrides the default `ζ`, the midpoint of the admissible interval.
    pub zeta: Option<f64>,
}

impl Default for TuningRule {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            c_n: 2.0,
            zeta: None,
        }
    }
}

/// Open interval `((α+2β−1)^{-1}, (2+2α)^{-1})` of admissible growth exponents for `N`.
pub fn zeta_interval(alpha: f64, beta: f64) -> (f64, f64) {
    (1.0 / (alpha + 2.0 * beta - 1.0), 1.0 / (2.0 + 2.0 * alpha))
}

impl TuningRule {
    pub fn zeta(&self, alpha: f64, beta: f64) -> Result<f64> {
        let (lo, hi) = zeta_interval(alpha, beta);
        match self.zeta {
            None => Ok(0.5 * (lo + hi)),
            Some(z) if z > lo && z < hi => Ok(z),
            Some(z) => Err(invalid(format!(
                "zeta = {z} lies outside the admissible interval ({lo}, {hi})"
            ))),
        }
    }
}

pub const MIN_SAMPLE_SIZE: usize = 8;

/// Truncation level `m` and fitting level `N` for sample size `n`.
pub fn tuning(n: usize, alpha: f64, beta: f64, rule: &TuningRule) -> Result<(usize, usize)> {
    if n < MIN_SAMPLE_SIZE {
        return Err(FglmError::SampleTooSmall {
            n,
            min: MIN_SAMPLE_SIZE,
        });
    }
    if !(rule.c_m > 0.0 && rule.c_n > 0.0) {
        return Err(invalid("tuning constants c_m and c_N must be positive"));
    }
    let nf = n as f64;
    let m = ((rule.c_m * nf.powf(1.0 / (alpha + 2.0 * beta))).round() as usize).max(1);
    let zeta = rule.zeta(alpha, beta)?;
    let raw = (rule.c_n * nf.powf(zeta)).round() as usize;
    let cap = n - 2;
    if m > cap {
        return Err(invalid(format!(
            "n = {n} is too small for m = {m} ≤ N ≤ n − 2"
        )));
    }
    Ok((m, raw.clamp(m, cap)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Stop once `max_j |∇ℒ_j| ≤ tol · n`.
    pub tol: f64,
    pub max_iter: usize,
    /// Any `|ĝ_j|` above this flags a separated (MLE at infinity) fit.
    pub separation_threshold: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            separation_threshold: 1e3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleFit {
    pub g: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub separated: bool,
    /// Log-likelihood at the start and after each accepted step.
    pub objective_trace: Vec<f64>,
}

struct Evaluation {
    objective: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
}

fn linear_predictor(g: &DVector<f64>, scores: &DMatrix<f64>) -> DVector<f64> {
    let mut eta = scores * g.rows(1, g.len() - 1);
    eta.add_scalar_mut(g[0]);
    eta
}

fn log_likelihood(family: ExpFamily, y: &[f64], eta: &DVector<f64>) -> f64 {
    y.iter()
        .zip(eta.iter())
        .map(|(y, e)| y * e - family.psi(*e))
        .sum()
}

fn evaluate(family: ExpFamily, y: &[f64], scores: &DMatrix<f64>, g: &DVector<f64>) -> Evaluation {
    let p = g.len();
    let eta = linear_predictor(g, scores);
    let mut gradient = DVector::zeros(p);
    let mut hessian = DMatrix::zeros(p, p);
    let mut xi = DVector::zeros(p);
    xi[0] = 1.0;
    for (i, e) in eta.iter().enumerate() {
        for j in 1..p {
            xi[j] = scores[(i, j - 1)];
        }
        let resid = y[i] - family.psi_dot(*e);
        let w = family.psi_ddot(*e);
        gradient.axpy(resid, &xi, 1.0);
        hessian.ger(w, &xi, &xi, 1.0);
    }
    Evaluation {
        objective: log_likelihood(family, y, &eta),
        gradient,
        hessian,
    }
}

/// Newton direction `H⁻¹ ∇`, with a Levenberg shift `τI` added only when the
/// Cholesky factorization fails.
fn newton_direction(hessian: &DMatrix<f64>, gradient: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = hessian.clone().cholesky() {
        return Ok(chol.solve(gradient));
    }
    let p = hessian.nrows();
    let mut tau = (1e-8 * hessian.trace() / p as f64).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let shifted = hessian + DMatrix::identity(p, p) * tau;
        if let Some(chol) = shifted.cholesky() {
            return Ok(chol.solve(gradient));
        }
        tau *= 2.0;
    }
    Err(FglmError::Numerical(
        "Hessian could not be regularized".into(),
    ))
}

/// Maximizes `ℒ(g) = Σ_i y_i η_i − ψ(η_i)`, `η_i = g_0 + Σ_{j ≤ N} g_j z_{i,j}`,
/// over `ℝ^{N+1}` by damped Newton.
///
/// `scores` is `n × N`. Each iteration takes the Newton step and halves it
/// until the log-likelihood does not decrease (up to summation rounding).
/// Iteration stops once the gradient is below `tol · n` and the Newton step
/// has shrunk to rounding level. A fit that cannot reach the
/// gradient tolerance within `max_iter` steps is returned with
/// `converged = false`; a non-finite log-likelihood is an error.
pub fn fit_mle(
    y: &[f64],
    scores: &DMatrix<f64>,
    family: ExpFamily,
    config: &NewtonConfig,
) -> Result<MleFit> {
    let n = y.len();
    if scores.nrows() != n {
        return Err(FglmError::DimensionMismatch {
            expected: n,
            actual: scores.nrows(),
        });
    }
    let p = scores.ncols() + 1;
    if n == 0 || p > n {
        return Err(invalid(format!(
            "need N + 1 ≤ n, got N = {} with n = {n}",
            p - 1
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("responses must be finite"));
    }

    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut g = DVector::zeros(p);
    g[0] = family.mean_to_canonical(ybar, n);

    let tol = config.tol * n as f64;
    let mut eval = evaluate(family, y, scores, &g);
    if !eval.objective.is_finite() {
        return Err(FglmError::Divergence { iteration: 0 });
    }
    let mut trace = vec![eval.objective];
    let mut iterations = 0;
    let mut separated = false;
    let mut small_step;

    loop {
        let grad_norm = eval.gradient.amax();
        let direction = newton_direction(&eval.hessian, &eval.gradient)?;
        small_step = direction.amax() <= STEP_TOL * (1.0 + g.amax());
        if (grad_norm <= tol && small_step) || iterations >= config.max_iter {
            break;
        }
        let slack = rounding_slack(eval.objective);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &g + &direction * step;
            let obj = log_likelihood(family, y, &linear_predictor(&candidate, scores));
            if obj.is_finite() && obj >= eval.objective - slack {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No ascent left at machine precision.
            break;
        };
        g = next;
        iterations += 1;
        eval = evaluate(family, y, scores, &g);
        if !eval.objective.is_finite() {
            return Err(FglmError::Divergence {
                iteration: iterations,
            });
        }
        trace.push(eval.objective);
        if g.amax() > config.separation_threshold {
            separated = true;
            break;
        }
    }

    let grad_norm = eval.gradient.amax();
    // A vanishing gradient paired with Newton steps that refuse to shrink is
    // the signature of a supremum at infinity.
    if !separated && grad_norm <= tol && !small_step {
        separated = true;
    }
    Ok(MleFit {
        g: g.iter().copied().collect(),
        iterations,
        grad_norm,
        converged: !separated && grad_norm <= tol,
        separated,
        objective_trace: trace,
    })
}

/// Relative size of a Newton step below which iterates count as settled.
const STEP_TOL: f64 = 1e-6;

/// Objective drops smaller than this are summation noise, not descent.
pub fn rounding_slack(objective: f64) -> f64 {
    1e-12 * (1.0 + objective.abs())
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// `(ĝ_0, …, ĝ_N)`.
    pub g_hat: Vec<f64>,
    pub slope_hat: FunctionRep,
    pub m: usize,
    pub n_components: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub separated: bool,
}

/// `Σ_{j ≤ m} ĝ_j φ̃_j` from the fitted coefficients.
pub fn truncate_slope(spectral: &SpectralEstimate, g_hat: &[f64], m: usize) -> FunctionRep {
    let coeffs = spectral.phi.columns(0, m) * DVector::from_column_slice(&g_hat[1..=m]);
    FunctionRep::new(coeffs.iter().copied().collect())
}

pub fn estimate_slope(
    ds: &Dataset,
    family: ExpFamily,
    alpha: f64,
    beta: f64,
    rule: &TuningRule,
    config: &NewtonConfig,
) -> Result<FitResult> {
    let n = ds.n();
    let (m, n_components) = tuning(n, alpha, beta, rule)?;
    let n_components = n_components.min(ds.basis_size());
    let m = m.min(n_components);
    let spectral = SpectralEstimate::from_dataset(ds)?;
    let scores = spectral.scores(&ds.curves, n_components)?;
    let fit = fit_mle(&ds.y, &scores, family, config)?;
    let slope_hat = truncate_slope(&spectral, &fit.g, m);
    Ok(FitResult {
        g_hat: fit.g,
        slope_hat,
        m,
        n_components,
        iterations: fit.iterations,
        grad_norm: fit.grad_norm,
        converged: fit.converged,
        separated: fit.separated,
    })
}

/// Integrated squared error `‖B − B̂‖²`.
pub fn loss(b_hat: &FunctionRep, gt: &GroundTruth) -> f64 {
    (&gt.slope - b_hat).norm_sq()
}
