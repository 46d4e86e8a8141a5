//! Eigenvalue, eigenvector and eigenprojection perturbation bounds for pairs
//! of symmetric matrices `T` and `T̃ = T + Δ`.
//!
//! Vectors are expressed in ambient coordinates; the eigenbasis of `T` is
//! `e_k` (columns of `t_eig.vectors`). Indices in reports are 1-based.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::{sym_eigen, sym_operator_norm, SymEigen};

/// Slack added on the right of every asserted inequality.
pub const BOUND_SLACK: f64 = 1e-10;
/// Tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PerturbationPair {
    pub t: DMatrix<f64>,
    pub t_tilde: DMatrix<f64>,
    pub t_eig: SymEigen,
    pub t_tilde_eig: SymEigen,
    /// `‖Δ‖₂`.
    pub delta_op: f64,
    /// `‖Δ‖_F`.
    pub delta_hs: f64,
}

impl PerturbationPair {
    pub fn new(t: DMatrix<f64>, t_tilde: DMatrix<f64>) -> Result<Self> {
        if t.shape() != t_tilde.shape() {
            return Err(invalid("T and T̃ must have the same shape"));
        }
        let t_eig = sym_eigen(&t)?;
        let t_tilde_eig = sym_eigen(&t_tilde)?;
        let delta = &t_tilde - &t;
        let delta_op = sym_operator_norm(&delta)?;
        let delta_hs = delta.norm();
        Ok(Self {
            t,
            t_tilde,
            t_eig,
            t_tilde_eig,
            delta_op,
            delta_hs,
        })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.t_eig.values[k]
    }

    /// `ε_k = min_{j≠k} |θ_j − θ_k|` (0-based `k`).
    pub fn gap(&self, k: usize) -> f64 {
        let th = &self.t_eig.values;
        (0..th.len())
            .filter(|&j| j != k)
            .map(|j| (th[j] - th[k]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `ε_k > 5δ` with `δ` the operator norm (or the Frobenius norm when `use_hs`).
    pub fn admissible(&self, k: usize, use_hs: bool) -> bool {
        let delta = if use_hs { self.delta_hs } else { self.delta_op };
        self.gap(k) > 5.0 * delta
    }

    /// `T̃_{j,k} = ⟨e_j, T̃ e_k⟩`.
    pub fn t_tilde_in_eigenbasis(&self) -> DMatrix<f64> {
        let e = &self.t_eig.vectors;
        e.transpose() * &self.t_tilde * e
    }

    pub fn align(&self, k: usize) -> AlignedEigenData {
        self.align_with(k, &self.t_tilde_in_eigenbasis())
    }

    fn align_with(&self, k: usize, tt: &DMatrix<f64>) -> AlignedEigenData {
        let d = self.dim();
        let e = &self.t_eig.vectors;
        let e_k = e.column(k).into_owned();
        let et_k = self.t_tilde_eig.vectors.column(k).into_owned();
        let sigma = if e_k.dot(&et_k) >= 0.0 { 1.0 } else { -1.0 };
        let f = &et_k * sigma - &e_k;

        let th = &self.t_eig.values;
        let mut lambda_coords = DVector::zeros(d);
        for j in 0..d {
            if j != k {
                lambda_coords[j] = tt[(j, k)] / (th[k] - th[j]);
            }
        }
        let lambda = e * &lambda_coords;
        let r = &f - &lambda;
        AlignedEigenData {
            k,
            sigma,
            f,
            lambda,
            lambda_coords,
            r,
            eps: self.gap(k),
        }
    }
}

/// Sign-aligned first-order eigenvector data for one index.
#[derive(Debug, Clone)]
pub struct AlignedEigenData {
    pub k: usize,
    /// `sign⟨e_k, ẽ_k⟩` with `sign(0) = +1`.
    pub sigma: f64,
    /// `f_k = σ_k ẽ_k − e_k`.
    pub f: DVector<f64>,
    /// `Λ_k = Σ_j Λ_{k,j} e_j`, ambient coordinates.
    pub lambda: DVector<f64>,
    /// `Λ_{k,j}` indexed by `j`.
    pub lambda_coords: DVector<f64>,
    /// `r_k = f_k − Λ_k`.
    pub r: DVector<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenvalueReport {
    pub max_diff: f64,
    pub delta_op: f64,
    pub delta_hs: f64,
    pub holds_op: bool,
    pub holds_hs: bool,
}

impl EigenvalueReport {
    /// `max_j |θ_j − θ̃_j| / δ`, or 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.delta_op > 0.0 {
            self.max_diff / self.delta_op
        } else {
            0.0
        }
    }
}

/// `|θ_j − θ̃_j| ≤ δ` for all `j`, under both norms.
pub fn check_eigenvalue_bound(pair: &PerturbationPair) -> EigenvalueReport {
    let max_diff = pair
        .t_eig
        .values
        .iter()
        .zip(&pair.t_tilde_eig.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    EigenvalueReport {
        max_diff,
        delta_op: pair.delta_op,
        delta_hs: pair.delta_hs,
        holds_op: max_diff <= pair.delta_op + BOUND_SLACK,
        holds_hs: max_diff <= pair.delta_hs + BOUND_SLACK,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenvectorReport {
    pub k: usize,
    pub admissible: bool,
    pub f_norm: f64,
    pub lambda_norm: f64,
    pub holds: bool,
}

/// `‖f_k‖ ≤ 3‖Λ_k‖` whenever `ε_k > 5δ`. `k` is 0-based.
pub fn check_eigenvector_bound(pair: &PerturbationPair, k: usize) -> EigenvectorReport {
    let data = pair.align(k);
    let admissible = pair.admissible(k, false);
    let f_norm = data.f.norm();
    let lambda_norm = data.lambda.norm();
    EigenvectorReport {
        k: k + 1,
        admissible,
        f_norm,
        lambda_norm,
        holds: !admissible || f_norm <= 3.0 * lambda_norm + BOUND_SLACK,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecompositionReport {
    pub k: usize,
    pub admissible: bool,
    /// `⟨r_k, e_k⟩`.
    pub diag: f64,
    /// `|⟨r_k, e_k⟩ + ½‖f_k‖²|`.
    pub diag_residual: f64,
    /// `max_{j≠k} |⟨r_k, e_j⟩| |θ_k − θ_j| / (5δ‖Λ_k‖)`.
    pub off_ratio: f64,
    pub diag_holds: bool,
    pub off_holds: bool,
}

/// `f_k = Λ_k + r_k` with `⟨r_k, e_k⟩ = −½‖f_k‖²` and
/// `|⟨r_k, e_j⟩| ≤ 5δ‖Λ_k‖/|θ_k − θ_j|`, whenever `ε_k > 5δ`.
pub fn check_fk_decomposition(pair: &PerturbationPair, k: usize) -> DecompositionReport {
    let data = pair.align(k);
    let admissible = pair.admissible(k, false);
    let e = &pair.t_eig.vectors;
    let r_coords = e.transpose() * &data.r;
    let f_sq = data.f.norm_squared();
    let diag = r_coords[k];
    let diag_residual = (diag + 0.5 * f_sq).abs();
    let lam_norm = data.lambda.norm();
    let scale = 5.0 * pair.delta_op * lam_norm;
    let mut off_ratio: f64 = 0.0;
    let mut off_holds = true;
    for j in 0..pair.dim() {
        if j == k {
            continue;
        }
        let gap = (pair.theta(k) - pair.theta(j)).abs();
        let lhs = r_coords[j].abs();
        let rhs = scale / gap;
        if lhs > rhs + BOUND_SLACK {
            off_holds = false;
        }
        if rhs > 0.0 {
            off_ratio = off_ratio.max(lhs / rhs);
        }
    }
    DecompositionReport {
        k: k + 1,
        admissible,
        diag,
        diag_residual,
        off_ratio,
        diag_holds: !admissible || diag_residual <= IDENTITY_TOL,
        off_holds: !admissible || off_holds,
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionReport {
    /// `D = (H̃_J − H_J) B`.
    pub d: DVector<f64>,
    /// First-order term `Σ_{k∈J} e_k ⟨Λ_k, B⟩ + b_k Λ_k`.
    pub main: DVector<f64>,
    /// Remainder `Σ_{k∈J} σ_k ẽ_k ⟨r_k, B⟩ + f_k ⟨Λ_k, B⟩ + r_k b_k`.
    pub rho: DVector<f64>,
    /// `‖D − (M + ρ)‖`.
    pub identity_error: f64,
    pub r1: f64,
    pub r2: f64,
    /// `‖ρ‖² / (R₁ + δ² R₂)`, defined as 0 when both sides vanish.
    pub ratio: f64,
}

/// Eigenprojection perturbation for the index set `J` (0-based) applied to
/// `B = Σ_j b_j e_j`.
///
/// The first-order term is computed as `Σ_{k∈J} Σ_{j∉J} Λ_{k,j}(b_j e_k + b_k e_j)`;
/// the `J × J` block of `Σ_{k∈J} e_k⊗Λ_k + Λ_k⊗e_k` cancels by antisymmetry of `Λ`.
/// The remainder `ρ` is evaluated from its own defining sum, so the identity
/// `D = M + ρ` is a genuine check rather than a tautology.
pub fn check_projection_bound(
    pair: &PerturbationPair,
    set: &[usize],
    b: &[f64],
) -> Result<ProjectionReport> {
    let dim = pair.dim();
    if b.len() != dim {
        return Err(invalid(format!(
            "coefficient vector has length {}, expected {dim}",
            b.len()
        )));
    }
    if set.is_empty() || set.iter().any(|&k| k >= dim) {
        return Err(invalid("index set must be nonempty and within range"));
    }
    if let Some(&k) = set.iter().find(|&&k| !pair.admissible(k, false)) {
        return Err(invalid(format!(
            "gap hypothesis ε_k > 5δ fails at k = {} (ε_k = {:e}, δ = {:e})",
            k + 1,
            pair.gap(k),
            pair.delta_op
        )));
    }
    let in_set = |j: usize| set.contains(&j);
    let e = &pair.t_eig.vectors;
    let et = &pair.t_tilde_eig.vectors;
    let bv = DVector::from_column_slice(b);
    let b_amb = e * &bv;

    let tt = pair.t_tilde_in_eigenbasis();
    let mut d = DVector::zeros(dim);
    let mut main = DVector::zeros(dim);
    let mut rho = DVector::zeros(dim);
    let mut lam_sq_total = 0.0;
    let mut r1_inner = 0.0;
    let mut r2_a = 0.0;
    let mut r2_b = 0.0;
    let mut r2_c = 0.0;

    for &k in set {
        let data = pair.align_with(k, &tt);
        let e_k = e.column(k);
        let et_k = et.column(k);
        d += et_k * et_k.dot(&b_amb) - e_k * e_k.dot(&b_amb);

        for j in (0..dim).filter(|&j| !in_set(j)) {
            let l = data.lambda_coords[j];
            main += (e_k * b[j] + e.column(j) * b[k]) * l;
        }

        let lam_b = data.lambda.dot(&b_amb);
        rho += et_k * (data.sigma * data.r.dot(&b_amb)) + &data.f * lam_b + &data.r * b[k];

        let lam_sq = data.lambda.norm_squared();
        lam_sq_total += lam_sq;
        let lam_dot_b: f64 = (0..dim)
            .filter(|&j| j != k)
            .map(|j| data.lambda_coords[j] * b[j])
            .sum();
        r1_inner += lam_dot_b * lam_dot_b;

        let th_k = pair.theta(k);
        let weighted_b: f64 = (0..dim)
            .filter(|&j| j != k)
            .map(|j| b[j].abs() / (th_k - pair.theta(j)).abs())
            .sum();
        let inv_gaps: f64 = (0..dim)
            .filter(|&j| j != k)
            .map(|j| 1.0 / (th_k - pair.theta(j)).abs())
            .sum();
        r2_a += lam_sq * weighted_b * weighted_b;
        r2_b += lam_sq.sqrt() * b[k].abs() * inv_gaps;
        r2_c += lam_sq * b[k] * b[k] / (data.eps * data.eps);
    }

    let r1 = lam_sq_total * r1_inner;
    let r2 = r2_a + r2_b * r2_b + r2_c;
    let identity_error = (&d - (&main + &rho)).norm();
    let rho_sq = rho.norm_squared();
    let denom = r1 + pair.delta_op * pair.delta_op * r2;
    let ratio = if denom > 0.0 { rho_sq / denom } else { 0.0 };
    Ok(ProjectionReport {
        d,
        main,
        rho,
        identity_error,
        r1,
        r2,
        ratio,
    })
}

/// Uniformly random orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `R`'s diagonal absorbed).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric Gaussian matrix scaled to unit operator norm.
pub fn random_symmetric_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let s = (&g + g.transpose()) * 0.5;
    let norm = sym_operator_norm(&s)?;
    Ok(s / norm)
}

/// How the perturbation size of a random instance was chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationScale {
    Fixed(f64),
    /// Fraction of the minimum eigengap of `T`.
    GapFraction(f64),
}

impl PerturbationScale {
    /// The default sweep: `0.001`, `0.01` and `0.05 · min gap`.
    pub const SWEEP: [PerturbationScale; 3] = [
        PerturbationScale::Fixed(0.001),
        PerturbationScale::Fixed(0.01),
        PerturbationScale::GapFraction(0.05),
    ];
}

/// A random pair: `T = Q diag(k^{-α} + c) Qᵀ` and `T̃ = T + εS`, with `S`
/// symmetric of unit operator norm.
///
/// The shift `c = ε` keeps `T̃` positive semidefinite; it changes neither the
/// eigenvectors, the gaps, nor `Δ`.
pub fn random_pair<R: Rng + ?Sized>(
    dim: usize,
    alpha: f64,
    scale: PerturbationScale,
    rng: &mut R,
) -> Result<(PerturbationPair, f64)> {
    if dim < 2 {
        return Err(invalid("perturbation instances need dimension at least 2"));
    }
    let theta: Vec<f64> = (1..=dim).map(|k| (k as f64).powf(-alpha)).collect();
    let min_gap = theta
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    let eps = match scale {
        PerturbationScale::Fixed(e) => e,
        PerturbationScale::GapFraction(f) => f * min_gap,
    };
    let q = random_orthogonal(dim, rng);
    let diag = DVector::from_iterator(dim, theta.iter().map(|t| t + eps));
    let t = &q * DMatrix::from_diagonal(&diag) * q.transpose();
    let t = (&t + t.transpose()) * 0.5;
    let s = random_symmetric_unit(dim, rng)?;
    let t_tilde = &t + s * eps;
    Ok((PerturbationPair::new(t, t_tilde)?, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> PerturbationPair {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let tt = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]);
        PerturbationPair::new(t, tt).unwrap()
    }

    #[test]
    fn zero_perturbation_is_trivial() {
        let t = DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.0, 0.5, 2.0, 0.1, 0.0, 0.1, 1.0]);
        let pair = PerturbationPair::new(t.clone(), t).unwrap();
        assert_eq!(pair.delta_op, 0.0);
        let ev = check_eigenvalue_bound(&pair);
        assert_eq!(ev.max_diff, 0.0);
        assert_eq!(ev.ratio(), 0.0);
        for k in 0..3 {
            let v = check_eigenvector_bound(&pair, k);
            assert!(v.f_norm < 1e-14 && v.lambda_norm < 1e-14);
            let d = check_fk_decomposition(&pair, k);
            assert!(d.diag_residual < 1e-14);
            assert!(d.diag_holds && d.off_holds);
        }
        let p = check_projection_bound(&pair, &[0], &[0.3, -0.2, 0.5]).unwrap();
        assert_eq!(p.d.norm(), 0.0);
        assert!(p.main.norm() < 1e-14 && p.rho.norm() < 1e-14);
        assert!(p.r1 < 1e-28 && p.r2 < 1e-28);
    }

    #[test]
    fn two_by_two_eigenvalue_shift() {
        let pair = two_by_two();
        assert!((pair.delta_op - 0.1).abs() < 1e-15);
        let ev = check_eigenvalue_bound(&pair);
        let oracle = (3.0 + 1.04f64.sqrt()) / 2.0 - 2.0;
        assert!((ev.max_diff - oracle).abs() < 1e-14);
        assert!((ev.max_diff - 0.009902).abs() < 1e-6);
        assert!(ev.holds_op && ev.holds_hs);
    }

    #[test]
    fn two_by_two_eigenvector_rotation() {
        let pair = two_by_two();
        let v = check_eigenvector_bound(&pair, 0);
        assert!(v.admissible);
        assert!((v.lambda_norm - 0.1).abs() < 1e-15);
        // rotation angle φ = ½ atan(0.2), ‖f‖ = 2 sin(φ/2)
        let phi = 0.5 * (0.2f64).atan();
        let oracle = 2.0 * (phi / 2.0).sin();
        assert!((v.f_norm - oracle).abs() < 1e-14);
        assert!((v.f_norm - 0.0990).abs() < 5e-4);
        assert!(v.holds);

        let d = check_fk_decomposition(&pair, 0);
        let expected = -0.5 * oracle * oracle;
        assert!((d.diag - expected).abs() < 1e-14);
        assert!((d.diag + 0.00490).abs() < 1e-4);
        assert!(d.diag_holds && d.off_holds);
    }

    #[test]
    fn two_by_two_projection_identity() {
        let pair = two_by_two();
        let p = check_projection_bound(&pair, &[0], &[0.0, 1.0]).unwrap();
        // brute force: (ẽ₁ẽ₁ᵀ − e₁e₁ᵀ) applied to e₂
        let et = pair.t_tilde_eig.vectors.column(0);
        let e = pair.t_eig.vectors.column(0);
        let e2 = pair.t_eig.vectors.column(1);
        let brute = et * et.dot(&e2) - e * e.dot(&e2);
        assert!((&p.d - brute).norm() < 1e-15);
        assert!(p.identity_error <= IDENTITY_TOL);
    }

    #[test]
    fn lambda_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..=8 {
            let (pair, _) =
                random_pair(dim, 2.0, PerturbationScale::Fixed(0.01), &mut rng).unwrap();
            let all: Vec<AlignedEigenData> = (0..dim).map(|k| pair.align(k)).collect();
            for j in 0..dim {
                assert_eq!(all[j].lambda_coords[j], 0.0);
                for k in 0..dim {
                    let a = all[j].lambda_coords[k];
                    let b = all[k].lambda_coords[j];
                    assert!(
                        (a + b).abs() <= IDENTITY_TOL * (1.0 + a.abs()),
                        "{j} {k}: {a} {b}"
                    );
                }
                let ek = pair.t_eig.vectors.column(j);
                let aligned = pair.t_tilde_eig.vectors.column(j) * all[j].sigma;
                assert!(ek.dot(&aligned) >= 0.0);
                assert!((&all[j].f - (&all[j].lambda + &all[j].r)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gap_violation_is_an_error() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.9]);
        let tt = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 0.9]);
        let pair = PerturbationPair::new(t, tt).unwrap();
        assert!(!pair.admissible(0, false));
        assert!(check_projection_bound(&pair, &[0], &[1.0, 1.0]).is_err());
        assert!(check_eigenvector_bound(&pair, 0).holds);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_orthogonal(7, &mut rng);
        assert!((q.tr_mul(&q) - DMatrix::identity(7, 7)).amax() < 1e-13);
        let s = random_symmetric_unit(5, &mut rng).unwrap();
        assert!((sym_operator_norm(&s).unwrap() - 1.0).abs() < 1e-13);
    }
}
