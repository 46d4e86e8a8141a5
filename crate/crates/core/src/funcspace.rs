//! Functions on `[0, 1]` stored as coefficients in the orthonormal cosine
//! basis `φ_k(t) = √2 cos(kπt)`, `k = 1, 2, …`.
//!
//! Coefficient vectors of different lengths are compared by zero-padding the
//! shorter one, so truncation levels can be mixed freely.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, Sub};

use crate::error::{invalid, Result};

/// The cosine system `φ_k(t) = √2 cos(kπt)` for `k = 1..=size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosineBasis {
    size: usize,
}

impl CosineBasis {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("basis size must be positive"));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `φ_k(t)` with 1-based `k`.
    #[inline]
    pub fn eval(k: usize, t: f64) -> f64 {
        SQRT_2 * (k as f64 * PI * t).cos()
    }

    /// Gram matrix of the basis by composite trapezoid quadrature on
    /// `points` equally spaced nodes. Row-major, `size × size`.
    pub fn quadrature_gram(&self, points: usize) -> Result<Vec<f64>> {
        let grid = unit_grid(points)?;
        let w = trapezoid_weights(points);
        let vals: Vec<Vec<f64>> = (1..=self.size)
            .map(|k| grid.iter().map(|&t| Self::eval(k, t)).collect())
            .collect();
        let mut gram = vec![0.0; self.size * self.size];
        for a in 0..self.size {
            for b in a..self.size {
                let s: f64 = (0..points).map(|i| w[i] * vals[a][i] * vals[b][i]).sum();
                gram[a * self.size + b] = s;
                gram[b * self.size + a] = s;
            }
        }
        Ok(gram)
    }
}

/// A square-integrable function on `[0, 1]`, `f = Σ_k c_k φ_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FunctionRep {
    coeffs: Vec<f64>,
}

impl FunctionRep {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            coeffs: vec![0.0; size],
        }
    }

    /// Unit vector `φ_k` (1-based) padded to `size` coefficients.
    pub fn basis_vector(k: usize, size: usize) -> Self {
        let mut coeffs = vec![0.0; size.max(k)];
        coeffs[k - 1] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis_size(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient `k` (1-based); zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn inner(&self, other: &FunctionRep) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> FunctionRep {
        FunctionRep::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Keep the first `size` coefficients, zero-padding if shorter.
    pub fn truncated(&self, size: usize) -> FunctionRep {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(size, 0.0);
        FunctionRep::new(coeffs)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * CosineBasis::eval(i + 1, t))
            .sum()
    }

    /// Values on `points` equally spaced nodes `t_j = j / (points - 1)`.
    pub fn evaluate_on_grid(&self, points: usize) -> Result<Vec<f64>> {
        Ok(unit_grid(points)?
            .into_iter()
            .map(|t| self.evaluate(t))
            .collect())
    }

    fn zip_padded(&self, other: &FunctionRep, op: impl Fn(f64, f64) -> f64) -> FunctionRep {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                op(
                    self.coeffs.get(i).copied().unwrap_or(0.0),
                    other.coeffs.get(i).copied().unwrap_or(0.0),
                )
            })
            .collect();
        FunctionRep::new(coeffs)
    }
}

impl Add for &FunctionRep {
    type Output = FunctionRep;
    fn add(self, rhs: &FunctionRep) -> FunctionRep {
        self.zip_padded(rhs, |a, b| a + b)
    }
}

impl Sub for &FunctionRep {
    type Output = FunctionRep;
    fn sub(self, rhs: &FunctionRep) -> FunctionRep {
        self.zip_padded(rhs, |a, b| a - b)
    }
}

/// `⟨f, g⟩` in L²[0,1].
pub fn inner(f: &FunctionRep, g: &FunctionRep) -> f64 {
    f.inner(g)
}

/// `‖f‖²` in L²[0,1].
pub fn norm_sq(f: &FunctionRep) -> f64 {
    f.norm_sq()
}

/// `points` equally spaced nodes covering `[0, 1]` inclusive.
pub fn unit_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let h = 1.0 / (points - 1) as f64;
    Ok((0..points).map(|j| j as f64 * h).collect())
}

fn trapezoid_weights(points: usize) -> Vec<f64> {
    let h = 1.0 / (points - 1) as f64;
    let mut w = vec![h; points];
    w[0] = 0.5 * h;
    w[points - 1] = 0.5 * h;
    w
}

/// Composite trapezoid approximation of `∫₀¹ f(t) g(t) dt` from grid values.
pub fn trapezoid_inner(f_vals: &[f64], g_vals: &[f64]) -> f64 {
    let w = trapezoid_weights(f_vals.len());
    w.iter()
        .zip(f_vals.iter().zip(g_vals))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}
