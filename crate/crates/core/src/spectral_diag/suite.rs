//! Randomized instance suites for the perturbation bounds.
//!
//! Instance `i` has dimension `2 + i mod (max_dim − 1)`, perturbation size
//! taken cyclically from [`PerturbationScale::SWEEP`], and its own seeded
//! stream, so the suite is reproducible and can be evaluated in parallel.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::seed::derive_seed;
use crate::spectral_diag::perturbation::{
    check_eigenvalue_bound, check_eigenvector_bound, check_fk_decomposition,
    check_projection_bound, random_pair, PerturbationPair, PerturbationScale, IDENTITY_TOL,
};

/// Eigenvalue decay of `T` in the random instances.
pub const SUITE_ALPHA: f64 = 2.0;
/// Admissible bound on the projection ratio `‖ρ‖²/(R₁ + δ²R₂)`.
pub const PROJECTION_RATIO_CAP: f64 = 1e3;

/// Results of every check on one random instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub instance: usize,
    pub dim: usize,
    pub eps: f64,
    pub delta_op: f64,
    pub delta_hs: f64,
    /// Indices `k` with `ε_k ≤ 5δ`, skipped by the eigenvector checks.
    pub inadmissible: usize,
    pub eig_max_diff: f64,
    pub eig_ok_op: bool,
    pub eig_ok_hs: bool,
    /// 1-based index drawn among the admissible ones.
    pub k: usize,
    pub f_norm: f64,
    pub lambda_norm: f64,
    pub vec_ok: bool,
    pub diag_residual: f64,
    pub diag_ok: bool,
    pub off_ratio: f64,
    pub off_ok: bool,
    /// `max_{j,k} |Λ_{j,k} + Λ_{k,j}|`.
    pub antisym_error: f64,
    pub proj_size: usize,
    pub identity_error: f64,
    pub proj_ratio: f64,
}

impl InstanceReport {
    pub fn all_hold(&self) -> bool {
        self.eig_ok_op
            && self.eig_ok_hs
            && self.vec_ok
            && self.diag_ok
            && self.off_ok
            && self.antisym_error <= IDENTITY_TOL
            && self.identity_error <= IDENTITY_TOL
            && self.proj_ratio.is_finite()
            && self.proj_ratio <= PROJECTION_RATIO_CAP
    }
}

/// `max_{j,k} |Λ_{j,k} + Λ_{k,j}|` over all index pairs.
pub fn lambda_antisymmetry_error(pair: &PerturbationPair) -> f64 {
    let tt = pair.t_tilde_in_eigenbasis();
    let d = pair.dim();
    let th = &pair.t_eig.values;
    let mut worst = 0.0f64;
    for k in 0..d {
        for j in (k + 1)..d {
            let l_kj = tt[(j, k)] / (th[k] - th[j]);
            let l_jk = tt[(k, j)] / (th[j] - th[k]);
            worst = worst.max((l_kj + l_jk).abs());
        }
    }
    worst
}

fn run_instance(instance: usize, max_dim: usize, seed: u64) -> Result<InstanceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, instance));
    let dim = 2 + instance % (max_dim - 1);
    let scale = PerturbationScale::SWEEP[instance % PerturbationScale::SWEEP.len()];
    let (pair, eps) = random_pair(dim, SUITE_ALPHA, scale, &mut rng)?;

    let ev = check_eigenvalue_bound(&pair);
    let admissible: Vec<usize> = (0..dim).filter(|&k| pair.admissible(k, false)).collect();
    // θ_1 has gap 3/4 ≫ 5δ for every scale in the sweep
    let k = *admissible
        .choose(&mut rng)
        .expect("index 1 is always admissible");
    let vec = check_eigenvector_bound(&pair, k);
    let dec = check_fk_decomposition(&pair, k);

    // J = a random nonempty set of admissible indices
    let mut set: Vec<usize> = admissible
        .iter()
        .copied()
        .filter(|_| rng.random_bool(0.5))
        .collect();
    if set.is_empty() {
        set.push(k);
    }
    let b: Vec<f64> = (1..=dim)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * (j as f64).powf(-3.0) * rng.random_range(0.5..1.5)
        })
        .collect();
    let proj = check_projection_bound(&pair, &set, &b)?;

    Ok(InstanceReport {
        instance,
        dim,
        eps,
        delta_op: pair.delta_op,
        delta_hs: pair.delta_hs,
        inadmissible: dim - admissible.len(),
        eig_max_diff: ev.max_diff,
        eig_ok_op: ev.holds_op,
        eig_ok_hs: ev.holds_hs,
        k: k + 1,
        f_norm: vec.f_norm,
        lambda_norm: vec.lambda_norm,
        vec_ok: vec.holds,
        diag_residual: dec.diag_residual,
        diag_ok: dec.diag_holds,
        off_ratio: dec.off_ratio,
        off_ok: dec.off_holds,
        antisym_error: lambda_antisymmetry_error(&pair),
        proj_size: set.len(),
        identity_error: proj.identity_error,
        proj_ratio: proj.ratio,
    })
}

/// Runs `reps` random instances of dimension at most `max_dim` in parallel;
/// output is in instance order.
pub fn run_perturbation_suite(
    reps: usize,
    max_dim: usize,
    seed: u64,
) -> Result<Vec<InstanceReport>> {
    if max_dim < 2 {
        return Err(invalid("instances need dimension at least 2"));
    }
    (0..reps)
        .into_par_iter()
        .map(|i| run_instance(i, max_dim, seed))
        .collect()
}

/// Aggregate view of a suite run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSummary {
    pub instances: usize,
    pub eigenvalue_violations: usize,
    pub eigenvector_violations: usize,
    pub decomposition_violations: usize,
    pub antisymmetry_violations: usize,
    pub identity_violations: usize,
    pub max_identity_error: f64,
    pub max_projection_ratio: f64,
    pub skipped_indices: usize,
}

pub fn summarize(reports: &[InstanceReport]) -> SuiteSummary {
    let count = |f: &dyn Fn(&InstanceReport) -> bool| reports.iter().filter(|r| f(r)).count();
    SuiteSummary {
        instances: reports.len(),
        eigenvalue_violations: count(&|r| !(r.eig_ok_op && r.eig_ok_hs)),
        eigenvector_violations: count(&|r| !r.vec_ok),
        decomposition_violations: count(&|r| !(r.diag_ok && r.off_ok)),
        antisymmetry_violations: count(&|r| r.antisym_error > IDENTITY_TOL),
        identity_violations: count(&|r| r.identity_error > IDENTITY_TOL),
        max_identity_error: reports.iter().map(|r| r.identity_error).fold(0.0, f64::max),
        max_projection_ratio: reports.iter().map(|r| r.proj_ratio).fold(0.0, f64::max),
        skipped_indices: reports.iter().map(|r| r.inadmissible).sum(),
    }
}
