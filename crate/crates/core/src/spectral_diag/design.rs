//! The normalized information matrix `A_n = n⁻¹ Σ η_i η_iᵀ ψ̈(γᵀDη_i)` for
//! Gaussian designs `η_i = (1, η_{i,1}, …, η_{i,N})` and its expectation `B_n`.
//!
//! Write `ā = D₀γ₀`, `v_k = D_kγ_k` (`k ≥ 1`), `κ = |v|` and `u = v/κ`. Then
//! `γᵀDη = ā + κν` with `ν = uᵀη_{1:N} ~ N(0, 1)`, and with
//! `r_j = E ν^j ψ̈(ā + κν)`:
//!
//! `B[0,0] = r₀`, `B[0,k] = r₁u_k`, `B[j,k] = r₀δ_{jk} + (r₂ − r₀)u_ju_k`.
//!
//! In the basis `(e₀, u, u^⊥)` this is `diag(F, r₀I)` with
//! `F = [[r₀, r₁], [r₁, r₂]]`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::expfam::ExpFamily;
use crate::linalg::{gauss_hermite, sym_eigen, sym_operator_norm};
use crate::seed::derive_seed;

/// Number of Gauss–Hermite nodes used for the moments `r_j`.
pub const QUADRATURE_NODES: usize = 64;

/// `(r₀, r₁, r₂)` with `r_j = E ν^j ψ̈(ā + κν)`, `ν ~ N(0, 1)`.
pub fn design_moments(family: ExpFamily, a_bar: f64, kappa: f64) -> Result<[f64; 3]> {
    let (x, w) = gauss_hermite(QUADRATURE_NODES)?;
    let mut r = [0.0; 3];
    for (&x, &w) in x.iter().zip(&w) {
        let h = w * family.psi_ddot(a_bar + kappa * x);
        r[0] += h;
        r[1] += h * x;
        r[2] += h * x * x;
    }
    Ok(r)
}

fn validate(gamma: &[f64], d: &[f64]) -> Result<()> {
    if gamma.is_empty() || gamma.len() != d.len() {
        return Err(invalid("gamma and D must be nonempty and of equal length"));
    }
    if gamma.iter().chain(d).any(|v| !v.is_finite()) {
        return Err(invalid("gamma and D must be finite"));
    }
    Ok(())
}

/// `B_n = E A_n` in closed form (`(N+1) × (N+1)`).
pub fn analytic_bn(family: ExpFamily, gamma: &[f64], d: &[f64]) -> Result<DMatrix<f64>> {
    validate(gamma, d)?;
    let p = gamma.len();
    let a_bar = d[0] * gamma[0];
    let v: Vec<f64> = (1..p).map(|k| d[k] * gamma[k]).collect();
    let kappa = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [r0, r1, r2] = design_moments(family, a_bar, kappa)?;
    if kappa == 0.0 {
        return Ok(DMatrix::identity(p, p) * r0);
    }
    let u: Vec<f64> = v.iter().map(|x| x / kappa).collect();
    let mut b = DMatrix::zeros(p, p);
    b[(0, 0)] = r0;
    for k in 1..p {
        b[(0, k)] = r1 * u[k - 1];
        b[(k, 0)] = r1 * u[k - 1];
        for j in 1..p {
            let delta = if j == k { r0 } else { 0.0 };
            b[(j, k)] = delta + (r2 - r0) * u[j - 1] * u[k - 1];
        }
    }
    Ok(b)
}

/// One draw of `A_n` from `n` design rows.
pub fn sample_an<R: rand::Rng + ?Sized>(
    family: ExpFamily,
    gamma: &[f64],
    d: &[f64],
    n: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let p = gamma.len();
    let coef = DVector::from_iterator(p, gamma.iter().zip(d).map(|(g, d)| g * d));
    let mut a = DMatrix::zeros(p, p);
    let mut eta = DVector::zeros(p);
    eta[0] = 1.0;
    for _ in 0..n {
        for k in 1..p {
            eta[k] = StandardNormal.sample(rng);
        }
        let w = family.psi_ddot(coef.dot(&eta));
        a.ger(w, &eta, &eta, 1.0);
    }
    a / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnBnReport {
    pub n: usize,
    pub n_components: usize,
    pub reps: usize,
    pub bn: DMatrix<f64>,
    pub mean_an: DMatrix<f64>,
    pub se_an: DMatrix<f64>,
    /// Largest `|mean A − B| / SE` over entries with positive SE.
    pub max_z: f64,
    /// Largest `|mean A − B|` over entries with zero SE.
    pub max_exact_error: f64,
    /// `‖B_n^{-1}‖₂`.
    pub bn_inv_norm: f64,
    /// Monte Carlo mean of `‖A_n − B_n‖₂²`.
    pub mean_sq_dist: f64,
}

impl AnBnReport {
    /// Every entry of the Monte Carlo mean within 4 SE of `B_n`.
    pub fn entrywise_match(&self) -> bool {
        self.max_z <= 4.0 && self.max_exact_error <= 1e-10
    }
}

/// Compares `reps` draws of `A_n` with the closed-form `B_n`.
pub fn check_an_bn(
    n: usize,
    family: ExpFamily,
    gamma: &[f64],
    d: &[f64],
    reps: usize,
    seed: u64,
) -> Result<AnBnReport> {
    if reps < 2 || n == 0 {
        return Err(invalid("need n ≥ 1 and at least 2 replications"));
    }
    let bn = analytic_bn(family, gamma, d)?;
    let p = gamma.len();
    let draws: Vec<DMatrix<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n, rep));
            sample_an(family, gamma, d, n, &mut rng)
        })
        .collect();

    let r = reps as f64;
    let mean_an = draws.iter().fold(DMatrix::zeros(p, p), |acc, a| acc + a) / r;
    let mut var = DMatrix::zeros(p, p);
    for a in &draws {
        var += (a - &mean_an).map(|x| x * x);
    }
    let se_an = (var / (r - 1.0) / r).map(f64::sqrt);
    let mut max_z = 0.0f64;
    let mut max_exact_error = 0.0f64;
    for j in 0..p {
        for k in 0..p {
            let err = (mean_an[(j, k)] - bn[(j, k)]).abs();
            if se_an[(j, k)] > 0.0 {
                max_z = max_z.max(err / se_an[(j, k)]);
            } else {
                max_exact_error = max_exact_error.max(err);
            }
        }
    }
    let mut sq = Vec::with_capacity(reps);
    for a in &draws {
        sq.push(sym_operator_norm(&(a - &bn))?.powi(2));
    }
    let eig = sym_eigen(&bn)?;
    let smallest = eig.values.last().copied().unwrap_or(0.0);
    if !(smallest > 0.0) {
        return Err(crate::error::FglmError::Numerical(
            "B_n is not positive definite".into(),
        ));
    }
    Ok(AnBnReport {
        n,
        n_components: p - 1,
        reps,
        bn,
        mean_an,
        se_an,
        max_z,
        max_exact_error,
        bn_inv_norm: 1.0 / smallest,
        mean_sq_dist: sq.iter().sum::<f64>() / r,
    })
}

/// `N = ⌊n^{0.2}⌋`, the design dimension used in the `A_n`/`B_n` sweep.
pub fn sweep_dimension(n: usize) -> usize {
    (n as f64).powf(0.2).floor() as usize
}

/// `γ = (a, b_1, …, b_N)` with `b_k = (−1)^{k+1}k^{−β}` and
/// `D = diag(1, θ_1^{1/2}, …)`, `θ_k = k^{−α}`.
pub fn default_design(n_components: usize, alpha: f64, beta: f64, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gamma = vec![a];
    let mut d = vec![1.0];
    for k in 1..=n_components {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        gamma.push(sign * kf.powf(-beta));
        d.push(kf.powf(-alpha / 2.0));
    }
    (gamma, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_bn_is_identity() {
        let (g, d) = default_design(4, 2.0, 3.0, 0.5);
        let b = analytic_bn(ExpFamily::Gaussian, &g, &d).unwrap();
        assert!((b - DMatrix::identity(5, 5)).amax() < 1e-13);
        let [r0, r1, r2] = design_moments(ExpFamily::Gaussian, 0.5, 0.7).unwrap();
        assert!((r0 - 1.0).abs() < 1e-13 && r1.abs() < 1e-13 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_degenerate_and_lognormal_moments() {
        let b = analytic_bn(ExpFamily::Poisson, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((b - DMatrix::identity(3, 3)).amax() < 1e-14);
        // r_j for ψ̈ = exp: E ν^j e^{ā+κν} = e^{ā+κ²/2}·(1, κ, 1+κ²)
        let [r0, r1, r2] = design_moments(ExpFamily::Poisson, 0.3, 0.5).unwrap();
        let base = 0.425f64.exp();
        assert!((r0 - base).abs() < 1e-12);
        assert!((r0 - 1.529590).abs() < 1e-6);
        assert!((r1 - 0.5 * base).abs() < 1e-12);
        assert!((r2 - 1.25 * base).abs() < 1e-12);
    }

    #[test]
    fn rotated_block_form() {
        let (g, d) = default_design(3, 2.0, 3.0, 0.2);
        let b = analytic_bn(ExpFamily::Bernoulli, &g, &d).unwrap();
        let v: Vec<f64> = (1..4).map(|k| g[k] * d[k]).collect();
        let kappa = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let [r0, r1, r2] = design_moments(ExpFamily::Bernoulli, 0.2, kappa).unwrap();
        // orthonormal basis (e0, u, u⊥...) via Gram–Schmidt of (e0, u, e1, e2, e3)
        let mut basis: Vec<DVector<f64>> = vec![DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])];
        let u = DVector::from_vec(vec![0.0, v[0] / kappa, v[1] / kappa, v[2] / kappa]);
        for cand in [
            u,
            DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]),
        ] {
            let mut c = cand;
            for q in &basis {
                let proj = q.dot(&c);
                c -= q * proj;
            }
            if c.norm() > 1e-8 && basis.len() < 4 {
                basis.push(c.normalize());
            }
        }
        let q = DMatrix::from_columns(&basis);
        let rotated = q.transpose() * &b * q;
        let mut expected = DMatrix::identity(4, 4) * r0;
        expected[(0, 1)] = r1;
        expected[(1, 0)] = r1;
        expected[(1, 1)] = r2;
        assert!((rotated - expected).amax() < 1e-13);
    }

    #[test]
    fn monte_carlo_matches_and_concentrates() {
        let (g, d) = default_design(3, 2.0, 3.0, 0.5);
        let small = check_an_bn(200, ExpFamily::Poisson, &g, &d, 200, 1).unwrap();
        let large = check_an_bn(3200, ExpFamily::Poisson, &g, &d, 200, 1).unwrap();
        assert!(small.entrywise_match(), "z = {}", small.max_z);
        assert!(large.entrywise_match(), "z = {}", large.max_z);
        assert!(large.mean_sq_dist < small.mean_sq_dist);
        assert!((small.bn_inv_norm - large.bn_inv_norm).abs() < 1e-15);
    }

    #[test]
    fn sweep_dimensions() {
        assert_eq!(sweep_dimension(500), 3);
        assert_eq!(sweep_dimension(2000), 4);
        assert_eq!(sweep_dimension(8000), 6);
    }
}
