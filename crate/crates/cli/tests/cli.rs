use std::path::Path;
use std::process::{Command, Output};

fn sdebound(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdebound"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.json");
    std::fs::write(
        &p,
        r#"{"num_paths": 8, "fine_grid_exp": 12, "tail_grid_exp": 6, "n_list": [25, 26], "sample_paths": 2}"#,
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn constants_and_psi() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdebound(&["constants"], dir.path());
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("N0    = 25"), "{stdout}");
    assert!(dir.path().join("schema.json").exists());
    assert_eq!(
        header(&dir.path().join("bound_curve.csv")),
        "N,raw_bound,clamped_bound,D_N,psi_inv_DN,extrapolated_flag"
    );

    let o = sdebound(&["build-psi"], dir.path());
    assert!(o.status.success());
    let spec =
        sdebound_core::PsiSpec::from_json(&std::fs::read_to_string(dir.path().join("psi.json")).unwrap()).unwrap();
    assert_eq!(spec.n0(), 25);
    assert_eq!(header(&dir.path().join("knots.csv")), "N,b_N,d_N");
}

#[test]
fn error_curve_and_sample_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = sdebound(&["error-curve", "--config", &cfg, "--seed", "5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&out.join("error_curve.csv")),
        "N,scheme,mean_abs_error,std_error,measured_cost,thm1_bound,cor3_bound"
    );
    let rows = std::fs::read_to_string(out.join("error_curve.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + 2 * 3);
    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed["master_seed"], 5);

    let o = sdebound(&["sample", "--config", &cfg], &out);
    assert!(o.status.success());
    assert_eq!(header(&out.join("paths.csv")), "path_index,t,w");
    assert_eq!(header(&out.join("runs.csv")), "scheme,N,path_index,nu,x1,x2,x3,x4,err");
    let paths = std::fs::read_to_string(out.join("paths.csv")).unwrap().lines().count();
    assert_eq!(paths, 1 + 2 * 1025);
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"coefficients": {"tau1": 0.7, "tau2": 0.5}}"#).unwrap();
    let out = dir.path().join("out");
    let o = sdebound(&["verify", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau1"));
    assert!(!out.join("verify.json").exists());
}
