//! Acceptance criteria at full size. Prints one line per criterion and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use sdebound_core::harness::properties::{self as props, Check};
use sdebound_core::harness::{error_curve, ExperimentConfig, Setup};

fn run_cli(config: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_sdebound"))
        .arg("error-curve")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("sdebound exited with {status}"))
    }
}

fn reproducibility(cfg: &ExperimentConfig) -> Vec<Check> {
    let r = (|| -> Result<Vec<String>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = dir.path().join("config.json");
        std::fs::write(&config, cfg.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let (a, b) = (dir.path().join("w1"), dir.path().join("w3"));
        run_cli(&config, &a, 1)?;
        run_cli(&config, &b, 3)?;
        let mut differing = Vec::new();
        for f in ["error_curve.csv", "error_breakdown.csv", "bound_curve.csv"] {
            let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
            if x != y || x.is_empty() {
                differing.push(f.to_string());
            }
        }
        Ok(differing)
    })();
    let c = match r {
        Ok(d) => Check {
            name: "cli_error_curve_bytes".into(),
            passed: d.is_empty(),
            measured: d.len() as f64,
            threshold: 0.0,
            detail: format!("CSV files differing between --workers 1 and 3: {d:?}"),
        },
        Err(e) => Check {
            name: "cli_error_curve_bytes".into(),
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: e,
        },
    };
    vec![c]
}

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let setup = Setup::new(&cfg).expect("default config must be valid");
    let seed = cfg.master_seed;
    let t_end = setup.cs.t_end();
    let n = 100_000;

    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Vec<Check> + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "self-consistency identity",
            Box::new(|| vec![props::self_consistency(&setup)]),
        ),
        ("sine moment sweep", Box::new(|| vec![props::sine_moment_sweep(1e-9)])),
        (
            "bridge variance identity",
            Box::new(|| vec![props::bridge_variance_identity()]),
        ),
        (
            "Ito sum vs integration by parts",
            Box::new(|| vec![props::ito_parts_crosscheck(&setup, 100)]),
        ),
        (
            "Brownian bridge suite",
            Box::new(|| {
                let mut v = vec![props::bridge_independence(seed, t_end, n)];
                v.extend(props::bridge_symmetry(seed, t_end, n));
                v.push(props::conditional_covariance(seed, t_end, n));
                v.push(props::tower_consistency(seed, t_end, n));
                v
            }),
        ),
        (
            "Ito isometry",
            Box::new(|| props::ito_isometry(&setup, n, cfg.verify.coarse_grid_exp)),
        ),
        (
            "oracle equivalence",
            Box::new(|| vec![props::oracle_equivalence(&setup, cfg.verify.solver_paths)]),
        ),
        (
            "lower-bound dominance",
            Box::new(|| match error_curve(&setup, 0) {
                Ok(curve) => props::dominance(&setup, &curve),
                Err(e) => vec![Check {
                    name: "error_curve".into(),
                    passed: false,
                    measured: f64::NAN,
                    threshold: f64::NAN,
                    detail: e.to_string(),
                }],
            }),
        ),
        (
            "psi property suite",
            Box::new(|| {
                let spec = setup.glued().expect("default psi is glued");
                props::psi_suite(spec, &setup.psi_consts, &setup, cfg.verify.psi_pairs, seed)
            }),
        ),
        ("reproducibility across workers", Box::new(|| reproducibility(&cfg))),
    ];

    let mut failed = 0;
    for (k, (label, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
        println!(
            "criterion {:>2} {:<32} {}  ({:.1} s)",
            k + 1,
            label,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!(
                "      {} {:<30} measured {:.5e} threshold {:.5e}  {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.measured,
                c.threshold,
                c.detail
            );
        }
        if !ok {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
