//! Fixed-schema CSV output. Floats are written with 17 significant digits so
//! that every value round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::expfam::ExpFamily;
use crate::harness::study::RateStudyResult;

pub const RATE_STUDY_HEADER: &str = "family,alpha,beta,n,reps,m,N,mise_mean,mise_se,nonconverged";
pub const SLOPE_HEADER: &str = "slope,se,theoretical";
pub const PER_REPLICATION_HEADER: &str = "n,rep,seed,loss,iterations,converged";

/// Round-trip float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds a CSV document from a header and rows of already formatted cells.
pub fn to_csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn rate_study_csv(
    family: ExpFamily,
    alpha: f64,
    beta: f64,
    result: &RateStudyResult,
) -> String {
    to_csv(
        RATE_STUDY_HEADER,
        result.points.iter().map(|p| {
            vec![
                family.name().to_string(),
                fmt_f64(alpha),
                fmt_f64(beta),
                p.n.to_string(),
                p.reps.to_string(),
                p.m.to_string(),
                p.n_components.to_string(),
                fmt_f64(p.mise_mean),
                fmt_f64(p.mise_se),
                p.nonconverged.to_string(),
            ]
        }),
    )
}

pub fn slope_csv(result: &RateStudyResult) -> String {
    let mut out = String::new();
    writeln!(out, "{SLOPE_HEADER}").unwrap();
    writeln!(
        out,
        "{},{},{}",
        fmt_f64(result.fitted_slope),
        fmt_f64(result.slope_se),
        fmt_f64(result.theoretical_exponent)
    )
    .unwrap();
    out
}

pub fn per_replication_csv(result: &RateStudyResult) -> String {
    to_csv(
        PER_REPLICATION_HEADER,
        result.replications.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                fmt_f64(r.loss),
                r.iterations.to_string(),
                r.converged.to_string(),
            ]
        }),
    )
}

/// Writes `rate_study.csv`, `slope.csv` and optionally `perreplication.csv`
/// into `dir`, creating it if needed.
pub fn write_rate_study(
    dir: &Path,
    family: ExpFamily,
    alpha: f64,
    beta: f64,
    result: &RateStudyResult,
    per_replication: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("rate_study.csv"),
        rate_study_csv(family, alpha, beta, result),
    )?;
    fs::write(dir.join("slope.csv"), slope_csv(result))?;
    if per_replication {
        fs::write(dir.join("perreplication.csv"), per_replication_csv(result))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::study::{RatePoint, ReplicationRecord};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -0.625, 1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(-0.625), "-6.2500000000000000e-1");
    }

    #[test]
    fn headers_and_rows() {
        let result = RateStudyResult {
            points: vec![RatePoint {
                n: 500,
                reps: 2,
                m: 2,
                n_components: 5,
                mise_mean: 0.5,
                mise_se: 0.25,
                nonconverged: 0,
            }],
            fitted_slope: -0.6,
            slope_se: 0.01,
            theoretical_exponent: -0.625,
            replications: vec![ReplicationRecord {
                n: 500,
                rep: 0,
                seed: 17,
                loss: 0.5,
                iterations: 3,
                converged: true,
            }],
        };
        let csv = rate_study_csv(ExpFamily::Gaussian, 2.0, 3.0, &result);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(RATE_STUDY_HEADER));
        assert_eq!(
            lines.next(),
            Some("gaussian,2.0000000000000000e0,3.0000000000000000e0,500,2,2,5,5.0000000000000000e-1,2.5000000000000000e-1,0")
        );
        assert_eq!(slope_csv(&result).lines().next(), Some(SLOPE_HEADER));
        assert_eq!(
            per_replication_csv(&result).lines().nth(1),
            Some("500,0,17,5.0000000000000000e-1,3,true")
        );
    }
}
