use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sagin_core::exp::{compare_files, run_experiment, selftest, summary_csv, ExperimentConfig, Scenario};
use sagin_core::train::Algorithm;

/// SAGIN traffic-offloading simulator and federated SAC trainer.
#[derive(Debug, Parser)]
#[command(name = "sagin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario for one algorithm over every configured seed.
    Run(RunArgs),
    /// Summarise metrics files (median and IQR across seeds).
    Compare(CompareArgs),
    /// Finite-difference check of the network gradients.
    Gradcheck(GradcheckArgs),
    /// Run the invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML experiment config; defaults apply to anything left out.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long, value_name = "N")]
    seed_override: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = "SAGIN_OUT_DIR", default_value = "results")]
    out: PathBuf,
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    #[arg(long, value_name = "NAME")]
    algorithm: Option<String>,
    /// Print the effective config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Metrics CSV files written by `run`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Write `summary.csv` here instead of printing it.
    #[arg(long, value_name = "DIR", env = "SAGIN_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn effective_config(a: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &a.scenario {
        cfg.scenario = s.parse::<Scenario>()?;
    }
    if let Some(s) = &a.algorithm {
        cfg.algorithm = s.parse::<Algorithm>()?;
    }
    if let Some(seed) = a.seed_override {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: RunArgs) -> anyhow::Result<()> {
    let cfg = effective_config(&a)?;
    if a.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = run_experiment(&cfg, &a.out)?;
    let failed = out.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} rows -> {}", out.rows.len(), out.csv.display());
    println!("sidecar -> {}", out.sidecar.display());
    if failed > 0 {
        bail!("{failed} failed rows");
    }
    Ok(())
}

fn compare(a: CompareArgs) -> anyhow::Result<()> {
    let paths: Vec<&Path> = a.files.iter().map(PathBuf::as_path).collect();
    let text = summary_csv(&compare_files(&paths)?);
    match a.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let p = dir.join("summary.csv");
            std::fs::write(&p, text)?;
            println!("summary -> {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report(checks: &[selftest::Check]) -> anyhow::Result<()> {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} suites failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Gradcheck(a) => report(&[selftest::gradcheck(a.cases, a.seed)]),
        Command::Selftest(a) => report(&selftest::all(a.seed)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
