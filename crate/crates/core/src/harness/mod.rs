//! Experiment orchestration: configuration, test-function families, the
//! pointwise, necessity, norm and maximal-benchmark campaigns, and report
//! files.

pub mod campaigns;
pub mod config;
pub mod families;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use campaigns::{
    run_bench_maximal, run_necessity_sweep, run_norm_check, run_pointwise_campaign, BenchReport,
    CertificateDump, NormReport, PointwiseReport, SlopeRecord, SlopeReport,
};
pub use config::{ExperimentConfig, ExponentSpec, Tolerances};
pub use families::FamilySpec;

use crate::error::Result;

/// Pinned bound on `lhs / final_bound` over the default suite.
pub const SUITE_CONSTANT: f64 = 8.0;

/// Pinned bound on `||f * Omega||_q / ||f||_p` over the default suite.
pub const NORM_CONSTANT: f64 = 8.0;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub config_hash: String,
    pub library_version: String,
    pub seed: u64,
}

impl RunInfo {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            library_version: LIBRARY_VERSION.to_string(),
            seed: cfg.seed,
        }
    }
}

/// `max / min` of nonnegative values; 1 when all vanish, infinite when only
/// some do.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `slopes.csv` with columns `s,t,norm_q,norm_p,ratio,log_s,log_ratio`.
pub fn write_slopes_csv(path: &Path, records: &[SlopeRecord]) -> Result<()> {
    let mut text = String::from("s,t,norm_q,norm_p,ratio,log_s,log_ratio\n");
    for r in records {
        text.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.s, r.t, r.norm_q, r.norm_p, r.ratio, r.log_s, r.log_ratio
        ));
    }
    fs::write(path, text)?;
    Ok(())
}
