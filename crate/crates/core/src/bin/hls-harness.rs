use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use hls_core::harness::{self, ExperimentConfig};
use hls_core::Error;

#[derive(Parser)]
#[command(name = "hls-harness", version, about = "Product-space fractional integral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `out`
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the random family; overrides the config's `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pointwise Hedberg certificates over every family member
    Pointwise,
    /// Log-log slope of the norm ratio under one-sided dilations
    Necessity,
    /// Norm ratios ||f * Omega||_q / ||f||_p and ||G f||_p / ||f||_p^2
    Normcheck,
    /// Separable against naive strong maximal function
    BenchMaximal,
}

enum Outcome {
    Pass,
    Fail,
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Exponents(_) | Error::InvalidGrid(_) | Error::InvalidWindows(_)
    )
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let summary = out.join("summary.json");
    match cmd {
        Command::Pointwise => {
            let (report, dump) = match harness::run_pointwise_campaign(cfg) {
                Err(Error::BoundViolation { region, certificate }) => {
                    let path = out.join("violation.json");
                    harness::write_json(&path, &certificate)?;
                    eprintln!("region {region} bound violated; certificate written to {}", path.display());
                    return Ok(Outcome::Fail);
                }
                other => other?,
            };
            harness::write_json(&out.join("certificates.json"), &dump)?;
            harness::write_json(&summary, &report)?;
            for f in &report.families {
                println!("{:<11} max ratio {:.4e}  spread {:.3}", f.family, f.max, f.spread);
            }
            println!(
                "pointwise: max lhs/bound {:.4e} (suite constant {}) -> {}",
                report.max_ratio,
                report.suite_constant,
                if report.pass { "pass" } else { "FAIL" }
            );
            Ok(verdict(report.pass))
        }
        Command::Necessity => {
            let report = harness::run_necessity_sweep(cfg)?;
            harness::write_slopes_csv(&out.join("slopes.csv"), &report.records)?;
            harness::write_json(&summary, &report)?;
            for (name, fit) in [("s", &report.s_sweep), ("t", &report.t_sweep)] {
                println!(
                    "{name}-slope {:+.4} (target {:+.4}, theory {:+.4}) -> {}",
                    fit.slope,
                    fit.target,
                    fit.theoretical,
                    if fit.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(verdict(report.pass))
        }
        Command::Normcheck => {
            let report = harness::run_norm_check(cfg)?;
            harness::write_json(&summary, &report)?;
            for (f, g) in report.families.iter().zip(&report.g_families) {
                println!(
                    "{:<11} norm ratio max {:.4e} spread {:.3}; G ratio spread {:.3}",
                    f.family, f.max, f.spread, g.spread
                );
            }
            println!(
                "normcheck: max ratio {:.4e} (constant {}) -> {}",
                report.max_ratio,
                report.norm_constant,
                if report.pass { "pass" } else { "FAIL" }
            );
            Ok(verdict(report.pass))
        }
        Command::BenchMaximal => {
            let (report, timings) = harness::run_bench_maximal(cfg)?;
            harness::write_json(&summary, &report)?;
            println!(
                "separable {:.3}s, naive {:.3}s over {} members -> {}",
                timings.separable,
                timings.naive,
                report.records.len(),
                if report.pass { "pass" } else { "FAIL" }
            );
            Ok(verdict(report.pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.parallel {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match run(cli.command, &cfg, &out) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(inner) if is_config_error(inner) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
