//! Flat `key = value` experiment configuration.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Keys are
//! the field names of [`ExperimentConfig`]; unknown or repeated keys are
//! rejected so that a config file means exactly one thing.

use std::path::{Path, PathBuf};

use crate::datagen::{MuMode, TruthOptions, DEFAULT_K_TRUNC};
use crate::error::{FglmError, Result};
use crate::estimator::{NewtonConfig, TuningRule};
use crate::expfam::ExpFamily;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: ExpFamily,
    pub alpha: f64,
    pub beta_s: f64,
    pub a: f64,
    pub mu_mode: MuMode,
    pub k_trunc: usize,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub c_m: f64,
    pub c_n: f64,
    pub zeta_override: Option<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let rule = TuningRule::default();
        let newton = NewtonConfig::default();
        Self {
            family: ExpFamily::Gaussian,
            alpha: 2.0,
            beta_s: 3.0,
            a: TruthOptions::default().intercept,
            mu_mode: MuMode::Zero,
            k_trunc: DEFAULT_K_TRUNC,
            n_grid: vec![500, 1000, 2000, 4000],
            reps: 100,
            seed: 20240601,
            c_m: rule.c_m,
            c_n: rule.c_n,
            zeta_override: None,
            newton_tol: newton.tol,
            newton_max_iter: newton.max_iter,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn config_err(line: usize, message: impl Into<String>) -> FglmError {
    FglmError::Config {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("cannot parse {key} = {value:?}")))
}

impl ExperimentConfig {
    /// Parses a config, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                config_err(line, format!("expected key = value, got {content:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(config_err(line, format!("duplicate key {key}")));
            }
            seen.push(key.to_string());
            match key {
                "family" => {
                    cfg.family = value
                        .parse()
                        .map_err(|e: FglmError| config_err(line, e.to_string()))?
                }
                "alpha" => cfg.alpha = parse_num(line, key, value)?,
                "beta_s" => cfg.beta_s = parse_num(line, key, value)?,
                "a" => cfg.a = parse_num(line, key, value)?,
                "mu_mode" => {
                    cfg.mu_mode = value
                        .parse()
                        .map_err(|e: FglmError| config_err(line, e.to_string()))?
                }
                "K_trunc" => cfg.k_trunc = parse_num(line, key, value)?,
                "n_grid" => {
                    cfg.n_grid = value
                        .split(',')
                        .map(|v| parse_num(line, key, v.trim()))
                        .collect::<Result<_>>()?
                }
                "reps" => cfg.reps = parse_num(line, key, value)?,
                "seed" => cfg.seed = parse_num(line, key, value)?,
                "c_m" => cfg.c_m = parse_num(line, key, value)?,
                "c_N" => cfg.c_n = parse_num(line, key, value)?,
                "zeta_override" => {
                    cfg.zeta_override = match value {
                        "" | "none" => None,
                        v => Some(parse_num(line, key, v)?),
                    }
                }
                "newton_tol" => cfg.newton_tol = parse_num(line, key, value)?,
                "newton_max_iter" => cfg.newton_max_iter = parse_num(line, key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => return Err(config_err(line, format!("unknown key {other}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the same format `parse` reads.
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        let zeta = self
            .zeta_override
            .map_or_else(|| "none".to_string(), |z| z.to_string());
        format!(
            "family = {}\nalpha = {}\nbeta_s = {}\na = {}\nmu_mode = {}\nK_trunc = {}\n\
             n_grid = {}\nreps = {}\nseed = {}\nc_m = {}\nc_N = {}\nzeta_override = {}\n\
             newton_tol = {:e}\nnewton_max_iter = {}\nout_dir = {}\n",
            self.family,
            self.alpha,
            self.beta_s,
            self.a,
            self.mu_mode.name(),
            self.k_trunc,
            grid.join(","),
            self.reps,
            self.seed,
            self.c_m,
            self.c_n,
            zeta,
            self.newton_tol,
            self.newton_max_iter,
            self.out_dir.display()
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("beta_s", self.beta_s),
            ("a", self.a),
            ("c_m", self.c_m),
            ("c_N", self.c_n),
            ("newton_tol", self.newton_tol),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(config_err(0, format!("{name} must be finite")));
            }
        }
        if self.zeta_override.is_some_and(|z| !z.is_finite()) {
            return Err(config_err(0, "zeta_override must be finite"));
        }
        if self.n_grid.is_empty() {
            return Err(config_err(0, "n_grid must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err(0, "n_grid must be strictly increasing"));
        }
        if self.reps == 0 {
            return Err(config_err(0, "reps must be at least 1"));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(config_err(
                0,
                "newton_tol and newton_max_iter must be positive",
            ));
        }
        self.tuning_rule().zeta(self.alpha, self.beta_s)?;
        Ok(())
    }

    pub fn tuning_rule(&self) -> TuningRule {
        TuningRule {
            c_m: self.c_m,
            c_n: self.c_n,
            zeta: self.zeta_override,
        }
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            ..NewtonConfig::default()
        }
    }

    pub fn truth_options(&self) -> TruthOptions {
        TruthOptions {
            intercept: self.a,
            mu_mode: self.mu_mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys_and_round_trips() {
        let text = "# study\nfamily = poisson\nalpha = 2\nbeta_s = 4 # smoother\na = 0.25\n\
                    mu_mode = bumps\nK_trunc = 120\nn_grid = 100, 200,400\nreps = 7\nseed = 99\n\
                    c_m = 1.5\nc_N = 3\nzeta_override = 0.13\nnewton_tol = 1e-9\n\
                    newton_max_iter = 50\nout_dir = results/x\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.family, ExpFamily::Poisson);
        assert_eq!(cfg.beta_s, 4.0);
        assert_eq!(cfg.mu_mode, MuMode::Bumps);
        assert_eq!(cfg.n_grid, vec![100, 200, 400]);
        assert_eq!(cfg.zeta_override, Some(0.13));
        assert_eq!(cfg.out_dir, PathBuf::from("results/x"));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(
            ExperimentConfig::parse("\n# nothing\n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "alpha 2",
            "unknown = 1",
            "reps = 0",
            "reps = 2\nreps = 3",
            "n_grid = 400,200",
            "alpha = nan",
            "family = binomial",
            "zeta_override = 0.5",
        ] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.is_validation(), "{text}: {err}");
        }
        match ExperimentConfig::parse("\n\nbogus").unwrap_err() {
            FglmError::Config { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }
}
