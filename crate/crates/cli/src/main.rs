use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sdebound_core::bounds::cor3_kappa;
use sdebound_core::harness::experiment::{bound_points, write_bound_curve};
use sdebound_core::harness::write_error_curve;
use sdebound_core::harness::{sample, schema};
use sdebound_core::{error_curve, verify_all, ExperimentConfig, Setup};

#[derive(Parser)]
#[command(
    name = "sdebound",
    version,
    about = "Lower-bound experiments for adaptive SDE approximation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Glue psi from the plan and write its knot table.
    BuildPsi,
    /// Print the derived constants, N0 and the bound curve.
    Constants,
    /// Measure every configured scheme against the lower bounds.
    ErrorCurve,
    /// Run every property suite; exits with status 1 on any failure.
    Verify,
    /// Write sample paths, exact solutions and single scheme runs.
    Sample,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.json"), cfg.to_json()?)?;
    schema::write_schema(dir)?;
    Ok(())
}

fn build_psi(setup: &Setup, dir: &Path) -> Result<()> {
    let spec = setup.glued().context("build-psi needs the glued psi")?;
    std::fs::write(dir.join("psi.json"), spec.to_json()?)?;
    let mut w = csv::Writer::from_path(dir.join("knots.csv"))?;
    w.write_record(schema::KNOTS.iter().map(|c| c.0))?;
    for (k, (b, d)) in spec.knots().iter().zip(spec.plateaus()).enumerate() {
        w.write_record([(spec.n0() + k).to_string(), b.to_string(), d.to_string()])?;
    }
    w.flush()?;
    println!(
        "psi: {} knots, N = {}..={}, tail slope {:.6e}",
        spec.knots().len(),
        spec.n0(),
        spec.n_last(),
        spec.tail_slope()
    );
    Ok(())
}

fn constants(setup: &Setup, dir: &Path) -> Result<()> {
    let c = setup.consts;
    let kappa = cor3_kappa(&setup.plan, &c).ok();
    let json = serde_json::json!({
        "alpha": c.alpha,
        "beta": c.beta,
        "gamma": c.gamma,
        "c1": c.c1,
        "c2": c.c2,
        "N0": setup.n0,
        "kappa": kappa,
    });
    std::fs::write(dir.join("constants.json"), serde_json::to_string_pretty(&json)?)?;
    println!(
        "alpha = {:.10e}\nbeta  = {:.10e}\ngamma = {:.10e}",
        c.alpha, c.beta, c.gamma
    );
    println!("c1    = {:.10e}\nc2    = {:.10e}", c.c1, c.c2);
    match setup.n0 {
        Some(n) => println!("N0    = {n}"),
        None => println!("N0    = none in the plan prefix"),
    }
    let ns: Vec<usize> = (1..=setup.plan.len()).collect();
    write_bound_curve(&bound_points(setup, &ns)?, dir)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load(&cli.common)?;
    let dir = cfg.output_dir.clone();
    let setup = Setup::new(&cfg)?;
    write_config(&cfg, &dir)?;
    match cli.command {
        Command::BuildPsi => build_psi(&setup, &dir)?,
        Command::Constants => constants(&setup, &dir)?,
        Command::ErrorCurve => {
            let curve = error_curve(&setup, cli.common.workers)?;
            write_error_curve(&setup, &curve, &dir)?;
            for r in &curve.rows {
                println!(
                    "{:<30} N = {:>3}  error {:.5e} +- {:.2e}  cost {:>8.2}  bound {}",
                    r.scheme,
                    r.n,
                    r.estimate.mean_abs_error,
                    r.estimate.std_error,
                    r.estimate.measured_cost,
                    r.thm1_bound.map(|b| format!("{b:.5e}")).unwrap_or_else(|| "-".into())
                );
            }
        }
        Command::Verify => {
            let report = verify_all(&cfg, cli.common.workers)?;
            report.write(&dir)?;
            print!("{}", report.table());
            return Ok(report.passed());
        }
        Command::Sample => sample::write_samples(&setup, &dir)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
