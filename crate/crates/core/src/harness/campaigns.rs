use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::families::FamilySpec;
use super::{spread, RunInfo};
use crate::convolution::convolve_fast;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridPoint, ProductGrid};
use crate::hedberg::{CertificateFile, HedbergCertificate, HedbergContext, RegionConstants, Slack};
use crate::kernel::{riesz_kernel, Exponents};
use crate::maximal::{g_norm_bound, strong_maximal, strong_maximal_naive, WindowFamily};

/// Every `stride`-th cell of each group, plus the cell nearest the origin.
pub fn sample_points(grid: &ProductGrid, stride: usize) -> Vec<GridPoint> {
    let c = grid.center_point();
    let xs: Vec<usize> = (0..grid.x_group().len()).step_by(stride).collect();
    let ys: Vec<usize> = (0..grid.y_group().len()).step_by(stride).collect();
    let mut pts: Vec<GridPoint> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| GridPoint { x, y }))
        .collect();
    if !pts.contains(&c) {
        pts.push(c);
    }
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRun {
    pub family: String,
    pub s: f64,
    pub t: f64,
    pub points: usize,
    pub case1: usize,
    pub case2: usize,
    /// Largest `lhs / final_bound` over the sampled points.
    pub max_ratio: f64,
    pub worst: GridPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStability {
    pub family: String,
    pub min: f64,
    pub max: f64,
    /// `max / min` over the dilations, 1 when every value is zero.
    pub spread: f64,
    pub stable: bool,
}

fn stability(family: &str, values: &[f64], factor: f64) -> FamilyStability {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(0.0, f64::max);
    let spread = spread(values);
    FamilyStability {
        family: family.to_string(),
        min,
        max,
        spread,
        stable: spread < factor,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub info: RunInfo,
    pub runs: Vec<PointwiseRun>,
    pub families: Vec<FamilyStability>,
    pub max_ratio: f64,
    pub suite_constant: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRun {
    pub family: String,
    pub s: f64,
    pub t: f64,
    pub certificates: Vec<HedbergCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDump {
    pub schema_version: u32,
    pub info: RunInfo,
    pub exponents: Exponents,
    pub constants: RegionConstants,
    pub slack: Slack,
    pub runs: Vec<CertificateRun>,
}

fn members(cfg: &ExperimentConfig) -> Vec<(usize, [f64; 2])> {
    (0..cfg.families.len())
        .flat_map(|fi| cfg.ladder.iter().map(move |st| (fi, *st)))
        .collect()
}

/// Certifies the sampled points of every family member.
///
/// A region-bound violation aborts the campaign with the offending
/// certificate inside the error.
pub fn run_pointwise_campaign(cfg: &ExperimentConfig) -> Result<(PointwiseReport, CertificateDump)> {
    let grid = cfg.grid()?;
    let exps = cfg.exponents()?;
    crate::hedberg::check_exponents(&exps).require()?;
    let points = sample_points(&grid, cfg.point_stride);
    let results: Vec<(PointwiseRun, CertificateRun)> = members(cfg)
        .into_par_iter()
        .map(|(fi, [s, t])| {
            let fam = &cfg.families[fi];
            let f = fam.sample(&grid, s, t, cfg.seed)?;
            let ctx = HedbergContext::new(&f, &exps)?;
            let certs = ctx.certify_all(&points)?;
            let (worst, max_ratio) = certs
                .iter()
                .map(|c| (c.point, c.ratio))
                .fold((points[0], 0.0), |b, c| if c.1 > b.1 { c } else { b });
            let run = PointwiseRun {
                family: fam.to_string(),
                s,
                t,
                points: certs.len(),
                case1: certs.iter().filter(|c| c.case_id == 1).count(),
                case2: certs.iter().filter(|c| c.case_id == 2).count(),
                max_ratio,
                worst,
            };
            let dump = CertificateRun {
                family: fam.to_string(),
                s,
                t,
                certificates: certs,
            };
            Ok((run, dump))
        })
        .collect::<Result<_>>()?;
    let (runs, cert_runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let tol = &cfg.tolerances;
    let families: Vec<FamilyStability> = cfg
        .families
        .iter()
        .enumerate()
        .map(|(fi, fam)| {
            let vals: Vec<f64> = runs
                .iter()
                .skip(fi * cfg.ladder.len())
                .take(cfg.ladder.len())
                .map(|r| r.max_ratio)
                .collect();
            stability(&fam.to_string(), &vals, tol.stability_factor)
        })
        .collect();
    let max_ratio = runs.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let pass = max_ratio.is_finite()
        && max_ratio <= tol.suite_constant
        && families.iter().all(|f| f.stable);
    let info = RunInfo::new(cfg);
    let certs = CertificateFile::new(&exps, Vec::new());
    let dump = CertificateDump {
        schema_version: certs.schema_version,
        info: info.clone(),
        exponents: exps,
        constants: certs.constants,
        slack: certs.slack,
        runs: cert_runs,
    };
    Ok((
        PointwiseReport {
            info,
            runs,
            families,
            max_ratio,
            suite_constant: tol.suite_constant,
            pass,
        },
        dump,
    ))
}

/// Norms of `f` and `f * Omega` for one family member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub s: f64,
    pub t: f64,
    pub norm_q: f64,
    pub norm_p: f64,
    pub ratio: f64,
    pub log_s: f64,
    pub log_ratio: f64,
}

fn norm_record(f: &GridFunction, kernel: &GridFunction, exps: &Exponents, s: f64, t: f64) -> Result<SlopeRecord> {
    let norm_p = f.lp_norm(exps.p())?;
    let norm_q = convolve_fast(f, kernel)?.lp_norm(exps.q())?;
    let ratio = if norm_p == 0.0 { 0.0 } else { norm_q / norm_p };
    Ok(SlopeRecord {
        s,
        t,
        norm_q,
        norm_p,
        ratio,
        log_s: s.ln(),
        log_ratio: ratio.ln(),
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub points: usize,
    pub decades: f64,
    pub slope: f64,
    pub theoretical: f64,
    /// Target of the fit: 0 for balanced exponents, else `theoretical`.
    pub target: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub info: RunInfo,
    pub family: String,
    pub balanced: bool,
    pub records: Vec<SlopeRecord>,
    pub s_sweep: SweepFit,
    pub t_sweep: SweepFit,
    pub tolerance: f64,
    pub pass: bool,
}

fn sweep_fit(logs: &[f64], records: &[&SlopeRecord], theoretical: f64, balanced: bool, tol: f64) -> SweepFit {
    let y: Vec<f64> = records.iter().map(|r| r.log_ratio).collect();
    let slope = fit_slope(logs, &y);
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = if balanced { 0.0 } else { theoretical };
    SweepFit {
        points: logs.len(),
        decades: (hi - lo) / std::f64::consts::LN_10,
        slope,
        theoretical,
        target,
        pass: (slope - target).abs() <= tol,
    }
}

const MIN_DECADES: f64 = 1.0 - 1e-9;

/// Fits `log(||f_{s,t} * Omega||_q / ||f_{s,t}||_p)` against `log s` over the
/// ladder entries with `t = 1`, and against `log t` over those with `s = 1`.
pub fn run_necessity_sweep(cfg: &ExperimentConfig) -> Result<SlopeReport> {
    if cfg.families.len() != 1 {
        return Err(Error::Config(format!(
            "a necessity sweep takes one family, got {}",
            cfg.families.len()
        )));
    }
    let s_rungs: Vec<f64> = cfg.ladder.iter().filter(|st| st[1] == 1.0).map(|st| st[0]).collect();
    let t_rungs: Vec<f64> = cfg.ladder.iter().filter(|st| st[0] == 1.0).map(|st| st[1]).collect();
    for (name, rungs) in [("s", &s_rungs), ("t", &t_rungs)] {
        let lo = rungs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rungs.iter().copied().fold(0.0, f64::max);
        if rungs.len() < 2 || (hi / lo).log10() < MIN_DECADES {
            return Err(Error::Config(format!(
                "{name}-ladder must span at least one decade, got {rungs:?}"
            )));
        }
    }
    let grid = cfg.grid()?;
    let exps = cfg.exponents()?;
    let fam = &cfg.families[0];
    let kernel = riesz_kernel(&grid, &exps)?;
    let records: Vec<SlopeRecord> = cfg
        .ladder
        .par_iter()
        .map(|&[s, t]| norm_record(&fam.sample(&grid, s, t, cfg.seed)?, &kernel, &exps, s, t))
        .collect::<Result<_>>()?;
    if let Some(r) = records.iter().find(|r| r.ratio <= 0.0) {
        return Err(Error::Degenerate(format!(
            "member (s={}, t={}) has zero norm",
            r.s, r.t
        )));
    }
    let tol = cfg.tolerances.slope;
    let balanced = exps.is_balanced();
    let s_recs: Vec<&SlopeRecord> = records.iter().filter(|r| r.t == 1.0).collect();
    let t_recs: Vec<&SlopeRecord> = records.iter().filter(|r| r.s == 1.0).collect();
    let s_logs: Vec<f64> = s_recs.iter().map(|r| r.s.ln()).collect();
    let t_logs: Vec<f64> = t_recs.iter().map(|r| r.t.ln()).collect();
    let s_sweep = sweep_fit(&s_logs, &s_recs, exps.x_dilation_slope(), balanced, tol);
    let t_sweep = sweep_fit(&t_logs, &t_recs, exps.y_dilation_slope(), balanced, tol);
    let pass = s_sweep.pass && t_sweep.pass;
    Ok(SlopeReport {
        info: RunInfo::new(cfg),
        family: fam.to_string(),
        balanced,
        records,
        s_sweep,
        t_sweep,
        tolerance: tol,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub family: String,
    pub s: f64,
    pub t: f64,
    pub norm_q: f64,
    pub norm_p: f64,
    /// `||f * Omega||_q / ||f||_p`, zero for `f = 0`.
    pub ratio: f64,
    /// `||G f||_p / ||f||_p^2`.
    pub g_ratio: f64,
    pub fubini_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub info: RunInfo,
    pub records: Vec<NormRecord>,
    pub families: Vec<FamilyStability>,
    /// Reported only: the box cuts off the slowly decaying maximal-function
    /// tails of wide members, which lowers their `G` ratio.
    pub g_families: Vec<FamilyStability>,
    pub max_ratio: f64,
    pub max_fubini_residual: f64,
    pub norm_constant: f64,
    pub pass: bool,
}

/// `||f * Omega||_q / ||f||_p` and `||G f||_p / ||f||_p^2` over every member.
pub fn run_norm_check(cfg: &ExperimentConfig) -> Result<NormReport> {
    let grid = cfg.grid()?;
    let exps = cfg.exponents()?;
    let kernel = riesz_kernel(&grid, &exps)?;
    let records: Vec<NormRecord> = members(cfg)
        .into_par_iter()
        .map(|(fi, [s, t])| {
            let fam = &cfg.families[fi];
            let f = fam.sample(&grid, s, t, cfg.seed)?;
            let r = norm_record(&f, &kernel, &exps, s, t)?;
            let g = g_norm_bound(&f, &exps)?;
            Ok(NormRecord {
                family: fam.to_string(),
                s,
                t,
                norm_q: r.norm_q,
                norm_p: r.norm_p,
                ratio: r.ratio,
                g_ratio: g.ratio,
                fubini_residual: g.fubini_residual,
            })
        })
        .collect::<Result<_>>()?;
    let tol = &cfg.tolerances;
    let per_family = |pick: fn(&NormRecord) -> f64| -> Vec<FamilyStability> {
        cfg.families
            .iter()
            .enumerate()
            .map(|(fi, fam)| {
                let vals: Vec<f64> = records
                    .iter()
                    .skip(fi * cfg.ladder.len())
                    .take(cfg.ladder.len())
                    .map(pick)
                    .collect();
                stability(&fam.to_string(), &vals, tol.stability_factor)
            })
            .collect()
    };
    let families = per_family(|r| r.ratio);
    let g_families = per_family(|r| r.g_ratio);
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_fubini_residual = records.iter().map(|r| r.fubini_residual).fold(0.0, f64::max);
    let pass = max_ratio <= tol.norm_constant
        && max_fubini_residual <= tol.fubini
        && families.iter().all(|f| f.stable);
    Ok(NormReport {
        info: RunInfo::new(cfg),
        records,
        families,
        g_families,
        max_ratio,
        max_fubini_residual,
        norm_constant: tol.norm_constant,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: String,
    pub s: f64,
    pub t: f64,
    /// Largest relative gap between the separable and naive strong maximal functions.
    pub max_rel_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub info: RunInfo,
    pub records: Vec<BenchRecord>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Wall-clock seconds of the separable and naive paths; not serialized.
#[derive(Clone, Copy, Debug, Default)]
pub struct BenchTimings {
    pub separable: f64,
    pub naive: f64,
}

pub const BENCH_TOLERANCE: f64 = 1e-12;

/// Times the separable strong maximal function against the per-window sum.
pub fn run_bench_maximal(cfg: &ExperimentConfig) -> Result<(BenchReport, BenchTimings)> {
    let grid = cfg.grid()?;
    let w = WindowFamily::dyadic(&grid);
    let mut timings = BenchTimings::default();
    let mut records = Vec::new();
    for (fi, [s, t]) in members(cfg) {
        let fam: &FamilySpec = &cfg.families[fi];
        let f = fam.sample(&grid, s, t, cfg.seed)?;
        let start = Instant::now();
        let fast = strong_maximal(&f, &w);
        timings.separable += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let slow = strong_maximal_naive(&f, &w);
        timings.naive += start.elapsed().as_secs_f64();
        let max_rel_gap = fast
            .values()
            .iter()
            .zip(slow.values())
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) })
            .fold(0.0, f64::max);
        records.push(BenchRecord {
            family: fam.to_string(),
            s,
            t,
            max_rel_gap,
        });
    }
    let pass = records.iter().all(|r| r.max_rel_gap <= BENCH_TOLERANCE);
    Ok((
        BenchReport {
            info: RunInfo::new(cfg),
            records,
            tolerance: BENCH_TOLERANCE,
            pass,
        },
        timings,
    ))
}
