use std::path::Path;
use std::process::{Command, Output};

fn critsense(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_critsense"));
    cmd.args(args).env_remove("CRITSENSE_THREADS");
    if let Some(t) = threads_env {
        cmd.env("CRITSENSE_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn successful_run_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"probes":["ghz","spin_coherent"],"sizes":[2,4,6],"seed":3}"#);
    let out = dir.path().join("out");
    let o = critsense(&["qfi_scaling", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["qfi_scaling.csv", "qfi_scaling_plot.csv", "qfi_scaling_plot.gp"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("qfi_scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 + 2);
}

#[test]
fn seed_flag_and_env_threads_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sizes":[3],"betas":[0.5],"shots":100,"seed":1}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = critsense(&["deformed", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "77"], Some("1"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = critsense(&["deformed", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "77", "--threads", "2"], None);
    assert_eq!(o.status.code(), Some(0));
    let ca = std::fs::read(a.join("deformed.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("deformed.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",77,")));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let cfg = write_config(dir.path(), r#"{"sizes":[99]}"#);
    let o = critsense(&["qfi_scaling", "--config", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`sizes`"));
    assert!(!Path::new(out).exists());

    let o = critsense(&["qfi_scaling", "--config", "/nonexistent/config.json", "--out", out], None);
    assert_eq!(o.status.code(), Some(2));

    let o = critsense(&["no_such_scenario", "--config", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), r#"{"probes":["ghz"],"sizes":[2,4,6]}"#);
    let o = critsense(&["qfi_scaling", "--config", &cfg, "--out", out], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CRITSENSE_THREADS"));
}

#[test]
fn numeric_failures_exit_with_3() {
    // the XXZ ground state conserves ΣZ, so ⟨S_x⟩ = 0 and the S_y readout has no slope
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"channel":{"kind":"global_dephase","chi":0.1,"t":1.0},"probes":["spin_coherent"],"model":{"kind":"xxz","anisotropy":0.5,"sites":4},"sizes":[4]}"#,
    );
    let out = dir.path().join("out");
    let o = critsense(&["channel_sweep", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = write_config(
        dir.path(),
        r#"{"channel":{"kind":"global_dephase","chi":0.1,"t":1.0},"probes":["critical"],"model":{"kind":"xxz","anisotropy":0.5,"sites":4},"sizes":[4]}"#,
    );
    let o = critsense(&["channel_sweep", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("numeric failure in channels::global_dephasing_sensitivity_ed"), "{err}");
}
