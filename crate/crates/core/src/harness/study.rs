//! Seeded replication loops and the log–log rate regression.

use rayon::prelude::*;

use crate::datagen::{make_ground_truth, rate_exponent, sample_dataset};
use crate::error::{invalid, FglmError, Result};
use crate::estimator::{estimate_slope, loss};
use crate::harness::config::ExperimentConfig;
use crate::seed::derive_seed;

/// Seed of replication `rep` at grid position `n_index`.
pub fn replication_seed(master: u64, n_index: usize, rep: usize) -> u64 {
    derive_seed(master, n_index, rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: usize,
    pub reps: usize,
    pub m: usize,
    pub n_components: usize,
    pub mise_mean: f64,
    /// Standard error of the mean; 0 when `reps = 1`.
    pub mise_se: f64,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateStudyResult {
    pub points: Vec<RatePoint>,
    pub fitted_slope: f64,
    pub slope_se: f64,
    pub theoretical_exponent: f64,
    /// Every replication, in `(n, rep)` order.
    pub replications: Vec<ReplicationRecord>,
}

/// Runs the `(dataset → estimate → loss)` pipeline `reps` times per grid
/// point and fits the log–log slope of the mean loss.
///
/// Replications run on the current rayon pool; results are reassembled in
/// `(n, rep)` order so the output does not depend on scheduling.
pub fn run_rate_study(cfg: &ExperimentConfig) -> Result<RateStudyResult> {
    cfg.validate()?;
    if cfg.n_grid.len() < 3 {
        return Err(invalid(format!(
            "a rate study needs at least 3 grid points to fit a slope, got {}",
            cfg.n_grid.len()
        )));
    }
    let gt = make_ground_truth(
        cfg.alpha,
        cfg.beta_s,
        cfg.family,
        cfg.k_trunc,
        cfg.truth_options(),
    )?;
    let rule = cfg.tuning_rule();
    let newton = cfg.newton();

    let jobs: Vec<(usize, usize, usize)> = cfg
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(idx, &n)| (0..cfg.reps).map(move |rep| (idx, n, rep)))
        .collect();

    let outcomes: Vec<Result<(ReplicationRecord, usize, usize)>> = jobs
        .par_iter()
        .map(|&(idx, n, rep)| {
            let seed = replication_seed(cfg.seed, idx, rep);
            let run = || -> Result<(ReplicationRecord, usize, usize)> {
                let sim = sample_dataset(&gt, n, seed)?;
                let fit =
                    estimate_slope(&sim.data, cfg.family, cfg.alpha, cfg.beta_s, &rule, &newton)?;
                let record = ReplicationRecord {
                    n,
                    rep,
                    seed,
                    loss: loss(&fit.slope_hat, &gt),
                    iterations: fit.iterations,
                    converged: fit.converged,
                };
                Ok((record, fit.m, fit.n_components))
            };
            run().map_err(|e| FglmError::Replication {
                n,
                rep,
                seed,
                source: Box::new(e),
            })
        })
        .collect();

    let mut replications = Vec::with_capacity(outcomes.len());
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    let mut iter = outcomes.into_iter();
    for &n in &cfg.n_grid {
        let mut losses = Vec::with_capacity(cfg.reps);
        let mut levels = (0, 0);
        let mut nonconverged = 0;
        for _ in 0..cfg.reps {
            let (record, m, n_comp) = iter.next().expect("one outcome per job")?;
            levels = (m, n_comp);
            losses.push(record.loss);
            if !record.converged {
                nonconverged += 1;
            }
            replications.push(record);
        }
        let (mise_mean, mise_se) = mean_and_se(&losses);
        points.push(RatePoint {
            n,
            reps: cfg.reps,
            m: levels.0,
            n_components: levels.1,
            mise_mean,
            mise_se,
            nonconverged,
        });
    }

    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.mise_mean)).collect();
    let (fitted_slope, slope_se) = fit_loglog_slope(&pairs)?;
    Ok(RateStudyResult {
        points,
        fitted_slope,
        slope_se,
        theoretical_exponent: rate_exponent(cfg.alpha, cfg.beta_s),
        replications,
    })
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Ordinary least squares of `log(mise)` on `log(n)`; returns the slope and
/// its standard error.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*v > 0.0) || !(*n > 0.0)) {
        return Err(invalid(format!(
            "log-log fit needs positive values, got ({n}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("slope fit needs at least two distinct n"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, se))
}
