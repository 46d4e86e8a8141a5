//! Maximal inequality for weighted chi-square variables:
//! `P{max_{i≤n} W_i > 4T(log n + x)} < 2e^{−x}` for
//! `W_i = Σ_k τ_{i,k} η_{i,k}²` and `T = max_i Σ_k τ_{i,k}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::seed::derive_seed;

/// Replications per independently seeded chunk.
const CHUNK: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub x: f64,
    /// `4T(log n + x)`.
    pub threshold: f64,
    pub probability: f64,
    /// Binomial standard error of `probability`.
    pub se: f64,
    /// `2e^{−x}`.
    pub bound: f64,
}

impl TailEstimate {
    pub fn holds(&self) -> bool {
        self.probability <= self.bound + 4.0 * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalReport {
    pub n: usize,
    pub reps: usize,
    pub t: f64,
    pub tails: Vec<TailEstimate>,
}

/// Monte Carlo tail probabilities of `max_i W_i` with the same weight profile
/// `tau` for every `i`.
pub fn check_chisq_maximal(
    n: usize,
    tau: &[f64],
    x_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<MaximalReport> {
    if n == 0 || reps == 0 || tau.is_empty() {
        return Err(invalid("n, reps and the weight profile must be nonempty"));
    }
    if tau.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    if x_grid.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid("x must be nonnegative"));
    }
    let t: f64 = tau.iter().sum();
    let log_n = (n as f64).ln();
    let thresholds: Vec<f64> = x_grid.iter().map(|x| 4.0 * t * (log_n + x)).collect();

    let chunks = reps.div_ceil(CHUNK);
    let counts: Vec<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, c));
            let len = CHUNK.min(reps - c * CHUNK);
            let mut hits = vec![0usize; thresholds.len()];
            for _ in 0..len {
                let mut max_w = 0.0f64;
                for _ in 0..n {
                    let w: f64 = tau
                        .iter()
                        .map(|tk| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            tk * z * z
                        })
                        .sum();
                    max_w = max_w.max(w);
                }
                for (h, th) in hits.iter_mut().zip(&thresholds) {
                    if max_w > *th {
                        *h += 1;
                    }
                }
            }
            hits
        })
        .collect();

    let r = reps as f64;
    let tails = x_grid
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            let hits: usize = counts.iter().map(|c| c[idx]).sum();
            let p = hits as f64 / r;
            TailEstimate {
                x,
                threshold: thresholds[idx],
                probability: p,
                se: (p * (1.0 - p) / r).sqrt(),
                bound: 2.0 * (-x).exp(),
            }
        })
        .collect();
    Ok(MaximalReport { n, reps, t, tails })
}

/// `τ_k = k^{−2}` for `k ≤ terms`.
pub fn inverse_square_profile(terms: usize) -> Vec<f64> {
    (1..=terms).map(|k| (k as f64).powi(-2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn x_zero_is_vacuous() {
        let rep = check_chisq_maximal(5, &[1.0, 0.5], &[0.0], 500, 1).unwrap();
        assert_eq!(rep.tails[0].bound, 2.0);
        assert!(rep.tails[0].holds());
    }

    #[test]
    fn single_chi_square_matches_exact_tail() {
        let exact = 1.0 - ChiSquared::new(1.0).unwrap().cdf(12.0);
        assert!((exact - 5.32e-4).abs() < 1e-6);
        assert!(exact <= 2.0 * (-3.0f64).exp());
        assert!((2.0 * (-3.0f64).exp() - 0.0996).abs() < 1e-4);
        let rep = check_chisq_maximal(1, &[1.0], &[3.0], 200_000, 4).unwrap();
        let est = rep.tails[0];
        assert!(
            (est.probability - exact).abs() <= 4.0 * (exact * (1.0 - exact) / 200_000.0).sqrt()
        );
        assert!(est.holds());
    }

    #[test]
    fn chunking_is_deterministic() {
        let a =
            check_chisq_maximal(10, &inverse_square_profile(8), &[1.0, 2.0], 4_500, 11).unwrap();
        let b =
            check_chisq_maximal(10, &inverse_square_profile(8), &[1.0, 2.0], 4_500, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.tails.iter().all(|t| t.holds()));
    }
}
