use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ipaal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipaal")).args(args).output().expect("spawn ipaal")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"
thetas = [1.0, 0.5]
rho_hat = 1e-3
eta_hat = 1e-3

[instance.generate]
seed = 4
l = 2
n = 4
density = 0.5
l_max = 50.0
m = 1.0
"#;

#[test]
fn run_emits_csv_with_the_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = ipaal(&["run", "--config", &cfg, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "theta,variant,acg_iters,outer_iters,cycles,runtime_s,stationarity,feasibility,final_c");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.0,constant,") || lines[1].starts_with("1,constant,"), "{}", lines[1]);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_path = dir.path().join("report.json");
    let out = ipaal(&[
        "run", "--config", &cfg, "--theta", "0.1", "--variant", "theoretical", "constant", "--rho", "5e-3",
        "--mode", "absolute", "--penalty-factor", "3", "--no-warm-start", "--jobs", "2", "--format", "json", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&out_path).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["theta"] == 0.1));
    assert_eq!(rows[0]["variant"], "theoretical");
    assert_eq!(rows[1]["variant"], "constant");
}

#[test]
fn capped_rows_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = ipaal(&["run", "--config", &cfg, "--max-cycles", "1", "--c1", "1e-6", "--format", "table"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("(capped)"));
}

#[test]
fn config_errors_exit_with_one_and_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("rho_hat = 1e-3", "rho_hat = -1.0"));
    let out = ipaal(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho_hat"));

    let cfg = write_config(dir.path(), &SMALL.replace("thetas = [1.0, 0.5]", "thetas = [1.0, 0.5]\nbogus = 3"));
    let out = ipaal(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("line"), "{err}");

    let out = ipaal(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = ipaal(&["run", "--config", &cfg, "--format", "xml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = ipaal(&[
        "gen", "--seed", "3", "--l", "2", "--n", "4", "--density", "0.5", "--Lmax", "20", "--m", "1", "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read(&inst).unwrap();
    ipaal(&[
        "gen", "--seed", "3", "--l", "2", "--n", "4", "--density", "0.5", "--Lmax", "20", "--m", "1", "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&inst).unwrap(), first);

    let cfg = write_config(dir.path(), "thetas = [1.0]\nrho_hat = 1e-3\neta_hat = 1e-3\n\n[instance.load]\npath = \"inst.json\"\n");
    let out = ipaal(&["run", "--config", &cfg, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["instance"]["seed"], 3);
}

#[test]
fn identical_runs_match_except_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        for row in v["rows"].as_array_mut().unwrap() {
            row["runtime_s"] = serde_json::Value::Null;
        }
        v
    };
    let a = strip(ipaal(&["run", "--config", &cfg, "--format", "json"]));
    let b = strip(ipaal(&["run", "--config", &cfg, "--format", "json", "--jobs", "2"]));
    assert_eq!(a, b);
}
