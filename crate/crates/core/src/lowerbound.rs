//! The hypercube construction behind the minimax lower bound.
//!
//! For `J = {m+1, …, 2m}` and `β_j = R j^{−β}`, each `γ ∈ {0,1}^J` gives the
//! slope `B_γ = ε Σ_{j∈J} γ_j β_j φ_j`. The lower bound needs the affinity
//! between the laws of neighbouring vertices (differing in one coordinate)
//! to stay bounded away from zero; it is estimated here through
//! `1 − √(2 ∧ Σ_i h²(Q_{λ_i(γ)}, Q_{λ_i(γ')}))`, averaged over designs.
//! The model has `a = 0` and `μ = 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, FglmError, Result};
use crate::expfam::{hellinger_sq_bound, hellinger_sq_exact, ExpFamily};
use crate::funcspace::FunctionRep;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssouadConfig {
    pub m: usize,
    /// Scale `ε` of the hypercube.
    pub eps: f64,
    pub radius: f64,
    pub alpha: f64,
    pub beta: f64,
    pub family: ExpFamily,
}

impl AssouadConfig {
    pub fn new(
        m: usize,
        eps: f64,
        radius: f64,
        alpha: f64,
        beta: f64,
        family: ExpFamily,
    ) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m must be positive"));
        }
        if !(eps >= 0.0 && eps.is_finite()) || !(radius > 0.0) || !(alpha > 0.0) || !(beta > 0.0) {
            return Err(invalid(
                "eps must be nonnegative; radius, alpha and beta positive",
            ));
        }
        Ok(Self {
            m,
            eps,
            radius,
            alpha,
            beta,
            family,
        })
    }

    /// The index set `J = {m+1, …, 2m}`.
    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        (self.m + 1)..=(2 * self.m)
    }

    /// `β_j = R j^{−β}`.
    pub fn weight(&self, j: usize) -> f64 {
        self.radius * (j as f64).powf(-self.beta)
    }

    /// `θ_j = j^{−α}`.
    pub fn theta(&self, j: usize) -> f64 {
        (j as f64).powf(-self.alpha)
    }

    fn position(&self, j: usize) -> Result<usize> {
        if self.indices().contains(&j) {
            Ok(j - self.m - 1)
        } else {
            Err(invalid(format!(
                "flip index {j} is outside J = {{{}, …, {}}}",
                self.m + 1,
                2 * self.m
            )))
        }
    }

    fn check_gamma(&self, gamma: &[bool]) -> Result<()> {
        if gamma.len() != self.m {
            return Err(FglmError::DimensionMismatch {
                expected: self.m,
                actual: gamma.len(),
            });
        }
        Ok(())
    }
}

/// Hypercube size with `n ε² max_j β_j² θ_j = c²`, i.e. the calibration that
/// keeps the per-observation signal of one coordinate at order `1/n`.
pub fn calibrated_eps(m: usize, radius: f64, alpha: f64, beta: f64, n: usize, c: f64) -> f64 {
    let peak = ((m + 1)..=(2 * m))
        .map(|j| {
            let jf = j as f64;
            (radius * jf.powf(-beta)).powi(2) * jf.powf(-alpha)
        })
        .fold(0.0, f64::max);
    c / (n as f64 * peak).sqrt()
}

/// `m = max(1, round(n^{1/(α+2β)}))`.
pub fn hypercube_dimension(n: usize, alpha: f64, beta: f64) -> usize {
    ((n as f64).powf(1.0 / (alpha + 2.0 * beta)).round() as usize).max(1)
}

/// `B_γ` as a coefficient vector of length `2m`.
pub fn hypercube_slope(cfg: &AssouadConfig, gamma: &[bool]) -> Result<FunctionRep> {
    cfg.check_gamma(gamma)?;
    let mut coeffs = vec![0.0; 2 * cfg.m];
    for (pos, j) in cfg.indices().enumerate() {
        if gamma[pos] {
            coeffs[j - 1] = cfg.eps * cfg.weight(j);
        }
    }
    Ok(FunctionRep::new(coeffs))
}

/// `γ` with coordinate `j ∈ J` flipped.
pub fn flip(cfg: &AssouadConfig, gamma: &[bool], j: usize) -> Result<Vec<bool>> {
    cfg.check_gamma(gamma)?;
    let pos = cfg.position(j)?;
    let mut out = gamma.to_vec();
    out[pos] = !out[pos];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityEstimate {
    /// Mean of `1 − √(2 ∧ Σ_i h²)` with exact Hellinger distances.
    pub mean: f64,
    pub se: f64,
    /// The same quantity with `h²` replaced by its upper bound
    /// `δ²ψ̈(λ)(1+|δ|)G(|δ|)`; never larger than `mean`.
    pub bound_route: f64,
}

/// Monte Carlo estimate over `n_mc` designs of `n` score rows
/// `z_{i,k} ~ N(0, θ_k)`, `k ∈ J`.
pub fn affinity_estimate(
    cfg: &AssouadConfig,
    n: usize,
    j: usize,
    gamma: &[bool],
    n_mc: usize,
    seed: u64,
) -> Result<AffinityEstimate> {
    let other = flip(cfg, gamma, j)?;
    if n == 0 || n_mc < 2 {
        return Err(invalid("need n ≥ 1 and at least 2 Monte Carlo draws"));
    }
    let coef_a: Vec<f64> = cfg
        .indices()
        .enumerate()
        .map(|(p, k)| {
            if gamma[p] {
                cfg.eps * cfg.weight(k)
            } else {
                0.0
            }
        })
        .collect();
    let coef_b: Vec<f64> = cfg
        .indices()
        .enumerate()
        .map(|(p, k)| {
            if other[p] {
                cfg.eps * cfg.weight(k)
            } else {
                0.0
            }
        })
        .collect();
    let sd: Vec<f64> = cfg.indices().map(|k| cfg.theta(k).sqrt()).collect();
    let family = cfg.family;

    let draws: Vec<(f64, f64)> = (0..n_mc)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j, draw));
            let mut exact = 0.0;
            let mut bound = 0.0;
            for _ in 0..n {
                let (mut la, mut lb) = (0.0, 0.0);
                for p in 0..sd.len() {
                    let eta: f64 = StandardNormal.sample(&mut rng);
                    let z = sd[p] * eta;
                    la += coef_a[p] * z;
                    lb += coef_b[p] * z;
                }
                exact += hellinger_sq_exact(family, la, lb - la);
                bound += hellinger_sq_bound(family, la, lb - la);
            }
            (1.0 - exact.min(2.0).sqrt(), 1.0 - bound.min(2.0).sqrt())
        })
        .collect();

    let r = n_mc as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / r;
    let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(AffinityEstimate {
        mean,
        se: (var / r).sqrt(),
        bound_route: draws.iter().map(|d| d.1).sum::<f64>() / r,
    })
}

/// `(floor/8) ε² Σ_{j∈J} β_j²`: the risk lower bound implied by an affinity
/// floor (half of the vertices of the cube differ in each coordinate).
pub fn assouad_bound_value(cfg: &AssouadConfig, affinity_floor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&affinity_floor) {
        return Err(invalid(format!(
            "affinity floor must lie in [0, 1], got {affinity_floor}"
        )));
    }
    let sum_sq: f64 = cfg.indices().map(|j| cfg.weight(j).powi(2)).sum();
    Ok(affinity_floor / 8.0 * cfg.eps * cfg.eps * sum_sq)
}

/// One `(n, j)` row of a lower-bound study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityRow {
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub eps: f64,
    pub affinity: AffinityEstimate,
}

/// Settings of a lower-bound study over a grid of sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundStudy {
    pub family: ExpFamily,
    pub alpha: f64,
    pub beta: f64,
    pub radius: f64,
    /// Constant `c` in the calibration `n ε² max β_j²θ_j = c²`.
    pub eps_constant: f64,
    pub n_grid: Vec<usize>,
    pub n_mc: usize,
    pub seed: u64,
}

impl Default for LowerBoundStudy {
    fn default() -> Self {
        Self {
            family: ExpFamily::Gaussian,
            alpha: 2.0,
            beta: 3.0,
            radius: 1.0,
            eps_constant: 1.0,
            n_grid: vec![100, 1_000, 10_000],
            n_mc: 200,
            seed: 20240601,
        }
    }
}

/// Affinity at every `j ∈ J` and every `n`, for the all-ones vertex.
pub fn run_lower_bound_study(study: &LowerBoundStudy) -> Result<Vec<AffinityRow>> {
    let mut rows = Vec::new();
    for (idx, &n) in study.n_grid.iter().enumerate() {
        let m = hypercube_dimension(n, study.alpha, study.beta);
        let eps = calibrated_eps(
            m,
            study.radius,
            study.alpha,
            study.beta,
            n,
            study.eps_constant,
        );
        let cfg = AssouadConfig::new(m, eps, study.radius, study.alpha, study.beta, study.family)?;
        let gamma = vec![true; m];
        for j in cfg.indices() {
            let affinity = affinity_estimate(
                &cfg,
                n,
                j,
                &gamma,
                study.n_mc,
                derive_seed(study.seed, idx, j),
            )?;
            rows.push(AffinityRow {
                n,
                m,
                j,
                eps,
                affinity,
            });
        }
    }
    Ok(rows)
}

/// Minimum affinity over `j ∈ J` at each `n` of a study, in grid order.
pub fn min_affinity_by_n(rows: &[AffinityRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((n, v)) if *n == r.n => *v = v.min(r.affinity.mean),
            _ => out.push((r.n, r.affinity.mean)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, eps: f64, family: ExpFamily) -> AssouadConfig {
        AssouadConfig::new(m, eps, 1.0, 2.0, 3.0, family).unwrap()
    }

    #[test]
    fn slope_examples() {
        let c = cfg(3, 0.7, ExpFamily::Gaussian);
        assert_eq!(hypercube_slope(&c, &[false; 3]).unwrap().norm_sq(), 0.0);
        let one = cfg(1, 1.0, ExpFamily::Gaussian);
        let b = hypercube_slope(&one, &[true]).unwrap();
        assert_eq!(b.coeffs(), &[0.0, 0.125]);
        assert!(hypercube_slope(&c, &[true; 2]).is_err());
    }

    #[test]
    fn single_flip_distance() {
        let c = cfg(4, 0.3, ExpFamily::Poisson);
        let gamma = [true, false, true, true];
        for j in c.indices() {
            let a = hypercube_slope(&c, &gamma).unwrap();
            let b = hypercube_slope(&c, &flip(&c, &gamma, j).unwrap()).unwrap();
            let expected = (c.eps * c.weight(j)).powi(2);
            assert!(((&a - &b).norm_sq() - expected).abs() < 1e-18);
        }
        assert!(flip(&c, &gamma, 4).is_err());
        assert!(flip(&c, &gamma, 9).is_err());
    }

    #[test]
    fn zero_scale_gives_unit_affinity() {
        let c = cfg(2, 0.0, ExpFamily::Bernoulli);
        let est = affinity_estimate(&c, 50, 3, &[true, true], 10, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.bound_route, 1.0);
    }

    /// `E S` for one gaussian observation, `S = 2(1 − e^{−δ²/8})`, `δ = s·z`,
    /// `z ~ N(0, θ)`; by Simpson's rule and in closed form
    /// `2(1 − (1 + s²θ/4)^{−1/2})`.
    fn expected_s(s: f64, theta: f64) -> f64 {
        let steps = 20_000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / steps as f64;
        let f = |u: f64| {
            let z = u * theta.sqrt();
            let dens = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            2.0 * (1.0 - (-(s * z).powi(2) / 8.0).exp()) * dens
        };
        let mut acc = f(a) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn gaussian_single_observation_against_integral() {
        // m = 1, J = {2}, εβ₂ = 0.1
        let c = AssouadConfig::new(1, 0.8, 1.0, 2.0, 3.0, ExpFamily::Gaussian).unwrap();
        assert!((c.eps * c.weight(2) - 0.1).abs() < 1e-15);
        let theta = c.theta(2);
        let es = expected_s(0.1, theta);
        let closed = 2.0 * (1.0 - (1.0 + 0.01 * theta / 4.0).powf(-0.5));
        assert!((es - closed).abs() < 1e-12);
        let est = affinity_estimate(&c, 1, 2, &[true], 4000, 3).unwrap();
        // Jensen: E(1 − √S) ≥ 1 − √(E S)
        assert!(est.mean >= 1.0 - es.sqrt() - 4.0 * est.se);
        assert!(est.bound_route <= est.mean + 1e-15);
    }

    #[test]
    fn calibrated_gaussian_affinity_is_substantial() {
        let n = 10_000;
        let m = hypercube_dimension(n, 2.0, 3.0);
        let eps = calibrated_eps(m, 1.0, 2.0, 3.0, n, 1.0);
        let c = cfg(m, eps, ExpFamily::Gaussian);
        let peak = c
            .indices()
            .map(|j| c.weight(j).powi(2) * c.theta(j))
            .fold(0.0, f64::max);
        assert!((n as f64 * eps * eps * peak - 1.0).abs() < 1e-12);
        let est = affinity_estimate(&c, n, m + 1, &vec![true; m], 40, 5).unwrap();
        assert!(est.mean >= 0.1, "{est:?}");
    }

    #[test]
    fn flip_symmetry_and_monotonicity() {
        let c = cfg(2, 3.0, ExpFamily::Poisson);
        let g = [true, false];
        let a = affinity_estimate(&c, 400, 3, &g, 300, 8).unwrap();
        let b = affinity_estimate(&c, 400, 3, &flip(&c, &g, 3).unwrap(), 300, 9).unwrap();
        assert!((a.mean - b.mean).abs() <= 4.0 * (a.se.powi(2) + b.se.powi(2)).sqrt());

        let mut last = f64::INFINITY;
        for eps in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let est =
                affinity_estimate(&cfg(2, eps, ExpFamily::Poisson), 400, 4, &g, 50, 21).unwrap();
            assert!(est.mean <= last + 1e-15);
            last = est.mean;
        }
    }

    #[test]
    fn bound_value_examples() {
        let one = cfg(1, 1.0, ExpFamily::Gaussian);
        assert_eq!(assouad_bound_value(&one, 0.0).unwrap(), 0.0);
        assert!((assouad_bound_value(&one, 1.0).unwrap() - 0.001953125).abs() < 1e-18);
        assert!(assouad_bound_value(&one, 1.5).is_err());
    }

    #[test]
    fn weight_sums_scale_like_m_power() {
        // Σ_{j=m+1}^{2m} j^{−2β} lies between ∫_{m+1}^{2m+1} and ∫_m^{2m} of x^{−2β}
        let beta: f64 = 3.0;
        let p = 2.0 * beta - 1.0;
        for m in [2usize, 4, 8, 16] {
            let c = cfg(m, 1.0, ExpFamily::Gaussian);
            let sum: f64 = c.indices().map(|j| c.weight(j).powi(2)).sum();
            let mf = m as f64;
            let lower = ((mf + 1.0).powf(-p) - (2.0 * mf + 1.0).powf(-p)) / p;
            let upper = (mf.powf(-p) - (2.0 * mf).powf(-p)) / p;
            assert!(lower <= sum && sum <= upper);
            let ratio = sum / mf.powf(1.0 - 2.0 * beta);
            assert!(ratio > 0.01 && ratio < (1.0 - 2f64.powf(-p)) / p + 1e-12);
        }
    }
}
