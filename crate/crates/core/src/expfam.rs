//! One-parameter exponential families `dQ_λ/dQ_0 (y) = exp(λy − ψ(λ))`.
//!
//! Each family exposes the cumulant `ψ` and its first three derivatives, an
//! increasing envelope `G` with `|ψ⃛(λ+h)| ≤ ψ̈(λ) G(|h|)`, a response sampler,
//! and closed-form squared Hellinger distances between two members.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Poisson};

use crate::error::{invalid, FglmError, Result};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpFamily {
    /// `N(λ, 1)`, `ψ(λ) = λ²/2`, `G ≡ 1`.
    Gaussian,
    /// `Poisson(e^λ)`, `ψ(λ) = e^λ − 1`, `G(h) = e^h`.
    Poisson,
    /// `Bernoulli(logistic(λ))`, `ψ(λ) = log(1 + e^λ) − log 2`, `G(h) = e^h`.
    Bernoulli,
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ExpFamily {
    pub const ALL: [ExpFamily; 3] = [
        ExpFamily::Gaussian,
        ExpFamily::Poisson,
        ExpFamily::Bernoulli,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExpFamily::Gaussian => "gaussian",
            ExpFamily::Poisson => "poisson",
            ExpFamily::Bernoulli => "bernoulli",
        }
    }

    pub fn psi(&self, lambda: f64) -> f64 {
        match self {
            ExpFamily::Gaussian => 0.5 * lambda * lambda,
            ExpFamily::Poisson => lambda.exp_m1(),
            // shifted so that ψ(0) = 0
            ExpFamily::Bernoulli => softplus(lambda) - LN_2,
        }
    }

    /// Mean of `Q_λ`.
    pub fn psi_dot(&self, lambda: f64) -> f64 {
        match self {
            ExpFamily::Gaussian => lambda,
            ExpFamily::Poisson => lambda.exp(),
            ExpFamily::Bernoulli => logistic(lambda),
        }
    }

    /// Variance of `Q_λ`.
    pub fn psi_ddot(&self, lambda: f64) -> f64 {
        match self {
            ExpFamily::Gaussian => 1.0,
            ExpFamily::Poisson => lambda.exp(),
            ExpFamily::Bernoulli => {
                let p = logistic(lambda);
                p * (1.0 - p)
            }
        }
    }

    pub fn psi_dddot(&self, lambda: f64) -> f64 {
        match self {
            ExpFamily::Gaussian => 0.0,
            ExpFamily::Poisson => lambda.exp(),
            ExpFamily::Bernoulli => {
                let p = logistic(lambda);
                p * (1.0 - p) * (1.0 - 2.0 * p)
            }
        }
    }

    /// The envelope `G`; increasing with `G(0) ≥ 1`.
    pub fn envelope(&self, h: f64) -> f64 {
        match self {
            ExpFamily::Gaussian => 1.0,
            ExpFamily::Poisson | ExpFamily::Bernoulli => h.abs().exp(),
        }
    }

    /// Canonical parameter whose mean is `mean`, with the mean clamped into
    /// the family's open range using `n` as the clipping resolution.
    pub fn mean_to_canonical(&self, mean: f64, n: usize) -> f64 {
        let lo = 1.0 / (n as f64 + 1.0);
        match self {
            ExpFamily::Gaussian => mean,
            ExpFamily::Poisson => mean.max(lo).ln(),
            ExpFamily::Bernoulli => {
                let p = mean.clamp(lo, 1.0 - lo);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// One draw from `Q_λ`.
    pub fn sample_response<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> Result<f64> {
        if !lambda.is_finite() {
            return Err(invalid(format!(
                "canonical parameter must be finite, got {lambda}"
            )));
        }
        let y = match self {
            ExpFamily::Gaussian => {
                let d = Normal::new(lambda, 1.0).map_err(|e| invalid(e.to_string()))?;
                d.sample(rng)
            }
            ExpFamily::Poisson => {
                let d = Poisson::new(lambda.exp()).map_err(|e| invalid(e.to_string()))?;
                d.sample(rng)
            }
            ExpFamily::Bernoulli => {
                let d = Bernoulli::new(logistic(lambda)).map_err(|e| invalid(e.to_string()))?;
                if d.sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Ok(y)
    }

    /// `sup ψ̈(λ) / exp(ε λ²)` over the grid: the constant `C_ε` of the growth
    /// condition restricted to the grid.
    pub fn growth_constant(&self, eps: f64, lambda_grid: &[f64]) -> f64 {
        lambda_grid
            .iter()
            .map(|&l| self.psi_ddot(l) / (eps * l * l).exp())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ExpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpFamily {
    type Err = FglmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(ExpFamily::Gaussian),
            "poisson" => Ok(ExpFamily::Poisson),
            "bernoulli" => Ok(ExpFamily::Bernoulli),
            other => Err(invalid(format!(
                "unknown family {other:?} (expected gaussian, poisson or bernoulli)"
            ))),
        }
    }
}

/// Upper bound `δ² ψ̈(λ) (1 + |δ|) G(|δ|)` on `h²(Q_λ, Q_{λ+δ})`.
pub fn hellinger_sq_bound(family: ExpFamily, lambda: f64, delta: f64) -> f64 {
    delta * delta * family.psi_ddot(lambda) * (1.0 + delta.abs()) * family.envelope(delta.abs())
}

/// Exact `h²(Q_λ, Q_{λ+δ}) = ∫(√p − √q)²`, via the cumulant identity
/// `1 − h²/2 = exp(ψ(λ̄) − ψ(λ)/2 − ψ(λ')/2)` with `λ̄` the midpoint.
pub fn hellinger_sq_exact(family: ExpFamily, lambda: f64, delta: f64) -> f64 {
    let other = lambda + delta;
    let mid = lambda + 0.5 * delta;
    let log_affinity = match family {
        // Closed forms avoid the cancellation of three large cumulants.
        ExpFamily::Gaussian => -delta * delta / 8.0,
        ExpFamily::Poisson => {
            // (√μ₁ − √μ₂)² / 2 with μ = e^λ
            let d = (0.5 * lambda).exp() - (0.5 * other).exp();
            -0.5 * d * d
        }
        ExpFamily::Bernoulli => {
            family.psi(mid) - 0.5 * family.psi(lambda) - 0.5 * family.psi(other)
        }
    };
    (-2.0 * log_affinity.exp_m1()).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// `max |ψ⃛(λ+h)| / (ψ̈(λ) G(|h|))` over the grid.
    pub max_ratio: f64,
    pub argmax: (f64, f64),
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0 + 1e-12
    }
}

pub fn verify_envelope(
    family: ExpFamily,
    lambda_grid: &[f64],
    h_grid: &[f64],
) -> Result<EnvelopeReport> {
    if lambda_grid.is_empty() || h_grid.is_empty() {
        return Err(invalid("envelope grids must be nonempty"));
    }
    let mut report = EnvelopeReport {
        max_ratio: 0.0,
        argmax: (lambda_grid[0], h_grid[0]),
    };
    for &l in lambda_grid {
        for &h in h_grid {
            let ratio =
                family.psi_dddot(l + h).abs() / (family.psi_ddot(l) * family.envelope(h.abs()));
            if ratio > report.max_ratio {
                report = EnvelopeReport {
                    max_ratio: ratio,
                    argmax: (l, h),
                };
            }
        }
    }
    Ok(report)
}

/// `n` points `start, start + step, …`.
pub fn linear_grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + step * i as f64).collect()
}
