//! `fglm`: simulation, estimation and diagnostics for functional GLMs.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 when a
//! computation fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fglm::datagen::{
    make_ground_truth, sample_dataset, Dataset, MuMode, TruthOptions, DEFAULT_K_TRUNC,
};
use fglm::estimator::{estimate_slope, NewtonConfig, TuningRule, MIN_SAMPLE_SIZE};
use fglm::expfam::ExpFamily;
use fglm::harness::csv::{fmt_f64, to_csv, write_rate_study};
use fglm::harness::{run_rate_study, ExperimentConfig};
use fglm::lowerbound::{min_affinity_by_n, run_lower_bound_study, LowerBoundStudy};
use fglm::spectral_diag::design::{check_an_bn, default_design, sweep_dimension};
use fglm::spectral_diag::linearization::check_mle_linearization;
use fglm::spectral_diag::maximal::{check_chisq_maximal, inverse_square_profile};
use fglm::spectral_diag::suite::{run_perturbation_suite, summarize};
use fglm::{FglmError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "fglm",
    version,
    about = "Functional GLM simulation and slope estimation"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FGLM_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one dataset and write it as CSV (`y,x1,…,xK`).
    Generate(GenerateArgs),
    /// Fit the slope on a dataset CSV; writes coefficients and grid values.
    Estimate(EstimateArgs),
    /// Monte Carlo rate study driven by a config file.
    RateStudy(RateStudyArgs),
    /// Randomized eigen-perturbation bound suite.
    PerturbCheck(PerturbArgs),
    /// Hypercube affinity study for the minimax lower bound.
    LowerBound(LowerBoundArgs),
    /// MLE linearization, information-matrix and maximal-inequality checks.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, default_value = "gaussian")]
    family: ExpFamily,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long = "beta", default_value_t = 3.0)]
    beta_s: f64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value = "zero")]
    mu_mode: MuMode,
    #[arg(long, default_value_t = DEFAULT_K_TRUNC)]
    k_trunc: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Dataset CSV as written by `generate`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c_m: f64,
    #[arg(long = "c-N", default_value_t = 2.0)]
    c_n: f64,
    #[arg(long)]
    zeta: Option<f64>,
    /// Points of the evaluation grid on [0, 1].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RateStudyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write perreplication.csv.
    #[arg(long)]
    per_replication: bool,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Largest matrix dimension.
    #[arg(long, default_value_t = 12)]
    dim: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "perturb")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LowerBoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "100,1000,10000", value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    n_mc: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Constant c in n·ε²·max β_j²θ_j = c².
    #[arg(long, default_value_t = 1.0)]
    eps_constant: f64,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    #[arg(long, default_value = "lower_bound")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DiagnosticsArgs {
    #[arg(long, default_value_t = 300)]
    linearization_reps: usize,
    #[arg(long, default_value_t = 200)]
    design_reps: usize,
    #[arg(long, default_value_t = 100_000)]
    maximal_reps: usize,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    #[arg(long, default_value = "diagnostics")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(FglmError::InvalidParameter(
                "--jobs must be at least 1".into(),
            ));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| FglmError::Numerical(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Generate(a) => generate(a),
        Command::Estimate(a) => estimate(a),
        Command::RateStudy(a) => rate_study(a),
        Command::PerturbCheck(a) => perturb_check(a),
        Command::LowerBound(a) => lower_bound(a),
        Command::Diagnostics(a) => diagnostics(a),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let options = TruthOptions {
        intercept: a.a,
        mu_mode: a.mu_mode,
    };
    let gt = make_ground_truth(
        a.model.alpha,
        a.model.beta_s,
        a.model.family,
        a.k_trunc,
        options,
    )?;
    let sim = sample_dataset(&gt, a.n, a.seed)?;
    let ds = &sim.data;
    let header: Vec<String> = std::iter::once("y".to_string())
        .chain((1..=ds.basis_size()).map(|k| format!("x{k}")))
        .collect();
    let rows = (0..ds.n()).map(|i| {
        std::iter::once(fmt_f64(ds.y[i]))
            .chain(ds.curves.row(i).iter().map(|v| fmt_f64(*v)))
            .collect()
    });
    write_file(&a.out, &to_csv(&header.join(","), rows))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| FglmError::InvalidParameter(format!("{} is empty", path.display())))?;
    let width = header.split(',').count();
    if width < 2 || !header.starts_with("y,") {
        return Err(FglmError::InvalidParameter(
            "dataset header must be y,x1,…,xK".into(),
        ));
    }
    let mut y = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FglmError::InvalidParameter(format!("line {}: {e}", idx + 1)))?;
        if cells.len() != width {
            return Err(FglmError::DimensionMismatch {
                expected: width,
                actual: cells.len(),
            });
        }
        y.push(cells[0]);
        values.extend_from_slice(&cells[1..]);
    }
    let n = y.len();
    Dataset::from_rows(n, width - 1, &values, y)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let ds = read_dataset(&a.data)?;
    if ds.n() < MIN_SAMPLE_SIZE {
        return Err(FglmError::SampleTooSmall {
            n: ds.n(),
            min: MIN_SAMPLE_SIZE,
        });
    }
    let rule = TuningRule {
        c_m: a.c_m,
        c_n: a.c_n,
        zeta: a.zeta,
    };
    let fit = estimate_slope(
        &ds,
        a.model.family,
        a.model.alpha,
        a.model.beta_s,
        &rule,
        &NewtonConfig::default(),
    )?;
    let coeffs = fit.slope_hat.coeffs();
    write_file(
        &a.out.join("coefficients.csv"),
        &to_csv(
            "k,coeff",
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| vec![(k + 1).to_string(), fmt_f64(*c)]),
        ),
    )?;
    let values = fit.slope_hat.evaluate_on_grid(a.grid)?;
    let step = 1.0 / (a.grid - 1) as f64;
    write_file(
        &a.out.join("grid.csv"),
        &to_csv(
            "t,value",
            values
                .iter()
                .enumerate()
                .map(|(i, v)| vec![fmt_f64(i as f64 * step), fmt_f64(*v)]),
        ),
    )?;
    write_file(
        &a.out.join("fit.csv"),
        &to_csv(
            "n,m,N,iterations,grad_norm,converged,separated",
            [vec![
                ds.n().to_string(),
                fit.m.to_string(),
                fit.n_components.to_string(),
                fit.iterations.to_string(),
                fmt_f64(fit.grad_norm),
                fit.converged.to_string(),
                fit.separated.to_string(),
            ]],
        ),
    )
}

fn rate_study(a: RateStudyArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(out) = a.out {
        cfg.out_dir = out;
    }
    let result = run_rate_study(&cfg)?;
    write_rate_study(
        &cfg.out_dir,
        cfg.family,
        cfg.alpha,
        cfg.beta_s,
        &result,
        a.per_replication,
    )?;
    println!(
        "fitted slope {:.4} (se {:.4}), theoretical {:.4}",
        result.fitted_slope, result.slope_se, result.theoretical_exponent
    );
    Ok(())
}

fn perturb_check(a: PerturbArgs) -> Result<()> {
    let reports = run_perturbation_suite(a.reps, a.dim, a.seed)?;
    let header =
        "instance,dim,eps,delta_op,delta_hs,inadmissible,eig_max_diff,eig_ok_op,eig_ok_hs,\
                  k,f_norm,lambda_norm,vec_ok,diag_residual,diag_ok,off_ratio,off_ok,antisym_error,\
                  proj_size,identity_error,proj_ratio";
    let rows = reports.iter().map(|r| {
        vec![
            r.instance.to_string(),
            r.dim.to_string(),
            fmt_f64(r.eps),
            fmt_f64(r.delta_op),
            fmt_f64(r.delta_hs),
            r.inadmissible.to_string(),
            fmt_f64(r.eig_max_diff),
            r.eig_ok_op.to_string(),
            r.eig_ok_hs.to_string(),
            r.k.to_string(),
            fmt_f64(r.f_norm),
            fmt_f64(r.lambda_norm),
            r.vec_ok.to_string(),
            fmt_f64(r.diag_residual),
            r.diag_ok.to_string(),
            fmt_f64(r.off_ratio),
            r.off_ok.to_string(),
            fmt_f64(r.antisym_error),
            r.proj_size.to_string(),
            fmt_f64(r.identity_error),
            fmt_f64(r.proj_ratio),
        ]
    });
    write_file(&a.out.join("perturbation.csv"), &to_csv(header, rows))?;
    let s = summarize(&reports);
    println!(
        "{} instances: violations eigenvalue {}, eigenvector {}, decomposition {}, identity {}; \
         max projection ratio {:.3e}; skipped indices {}",
        s.instances,
        s.eigenvalue_violations,
        s.eigenvector_violations,
        s.decomposition_violations,
        s.identity_violations,
        s.max_projection_ratio,
        s.skipped_indices
    );
    Ok(())
}

fn lower_bound(a: LowerBoundArgs) -> Result<()> {
    let study = LowerBoundStudy {
        family: a.model.family,
        alpha: a.model.alpha,
        beta: a.model.beta_s,
        radius: a.radius,
        eps_constant: a.eps_constant,
        n_grid: a.n_grid,
        n_mc: a.n_mc,
        seed: a.seed,
    };
    let rows = run_lower_bound_study(&study)?;
    let csv = to_csv(
        "n,m,j,eps,affinity,affinity_se,bound_route",
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.j.to_string(),
                fmt_f64(r.eps),
                fmt_f64(r.affinity.mean),
                fmt_f64(r.affinity.se),
                fmt_f64(r.affinity.bound_route),
            ]
        }),
    );
    write_file(&a.out.join("affinity.csv"), &csv)?;
    for (n, v) in min_affinity_by_n(&rows) {
        println!("n = {n}: minimum affinity {v:.4}");
    }
    Ok(())
}

fn diagnostics(a: DiagnosticsArgs) -> Result<()> {
    let mut rows = Vec::new();
    for family in [ExpFamily::Gaussian, ExpFamily::Poisson] {
        let rep = check_mle_linearization(
            5000,
            3,
            family,
            &[0.1, 0.2, -0.1, 0.05],
            a.linearization_reps,
            a.seed,
        )?;
        rows.push(vec![
            family.name().to_string(),
            rep.reps.to_string(),
            rep.hypothesis_count.to_string(),
            rep.event_count.to_string(),
            rep.violations.to_string(),
            rep.violations_under_hypothesis.to_string(),
            fmt_f64(rep.max_residual),
            fmt_f64(rep.max_weight),
            fmt_f64(rep.weight_bound),
        ]);
    }
    write_file(
        &a.out.join("linearization.csv"),
        &to_csv(
            "family,reps,hypothesis_count,event_count,violations,violations_under_hypothesis,max_residual,max_weight,weight_bound",
            rows,
        ),
    )?;

    let mut rows = Vec::new();
    for family in [
        ExpFamily::Gaussian,
        ExpFamily::Poisson,
        ExpFamily::Bernoulli,
    ] {
        for n in [500, 2000, 8000] {
            let (gamma, d) = default_design(sweep_dimension(n), 2.0, 3.0, 0.5);
            let rep = check_an_bn(n, family, &gamma, &d, a.design_reps, a.seed)?;
            rows.push(vec![
                family.name().to_string(),
                n.to_string(),
                rep.n_components.to_string(),
                fmt_f64(rep.max_z),
                fmt_f64(rep.bn_inv_norm),
                fmt_f64(rep.mean_sq_dist),
            ]);
        }
    }
    write_file(
        &a.out.join("information.csv"),
        &to_csv("family,n,N,max_z,bn_inv_norm,mean_sq_dist", rows),
    )?;

    let mut rows = Vec::new();
    for n in [10, 100] {
        let rep = check_chisq_maximal(
            n,
            &inverse_square_profile(32),
            &[1.0, 2.0, 4.0],
            a.maximal_reps,
            a.seed,
        )?;
        for t in rep.tails {
            rows.push(vec![
                n.to_string(),
                fmt_f64(t.x),
                fmt_f64(t.threshold),
                fmt_f64(t.probability),
                fmt_f64(t.se),
                fmt_f64(t.bound),
                t.holds().to_string(),
            ]);
        }
    }
    write_file(
        &a.out.join("maximal.csv"),
        &to_csv("n,x,threshold,probability,se,bound,holds", rows),
    )?;
    println!("diagnostics written to {}", a.out.display());
    Ok(())
}
