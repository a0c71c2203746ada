use std::path::Path;
use std::process::{Command, Output};

fn lmgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmgc")).args(args).output().expect("run lmgc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn single_point_csv() {
    let o = lmgc(&["--n", "10", "--chi", "0.5", "--b", "0.3", "--T", "0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("b,C,nC,C+,C-,phase,breakdown,complex_termination,note"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let c: f64 = row[1].parse().unwrap();
    let nc: f64 = row[2].parse().unwrap();
    assert!(c > 0.0 && (nc - 10.0 * c).abs() < 1e-12);
    assert!(lines.next().is_none());
}

#[test]
fn sweep_to_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = lmgc(&[
        "--n",
        "20",
        "--chi",
        "0.5",
        "--T",
        "0.1",
        "--sweep",
        "field",
        "--from",
        "0",
        "--to",
        "2",
        "--points",
        "5",
        "--outputs",
        "C,nC,alpha_x,lnZ",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let v = json(&out);
    assert_eq!(v["metadata"]["units"], "v_x");
    assert_eq!(v["metadata"]["method"], "exact");
    assert_eq!(v["metadata"]["temperature"], 0.1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["rows"][4]["b"], 2.0);
    assert!(v["rows"][2]["alpha_x"].as_f64().is_some());
}

#[test]
fn explicit_vx_switches_units() {
    let o = lmgc(&["--n", "6", "--vx", "2", "--vy", "1", "--b", "0.5", "--T", "0.2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metadata"]["units"], "absolute");
    assert_eq!(v["metadata"]["params"]["vx"], 2.0);
}

#[test]
fn chi_and_vy_conflict() {
    let o = lmgc(&["--n", "10", "--chi", "0.5", "--vy", "0.2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_arguments_exit_2() {
    for args in [
        vec!["--n", "10", "--sweep", "field", "--from", "0", "--to", "1", "--points", "1"],
        vec!["--n", "13", "--method", "oracle"],
        vec!["--n", "10", "--method", "nope"],
        vec!["--n", "10", "--vx", "1", "--vy", "2"],
        vec!["--chi", "0.5"],
        vec!["--n", "10", "--method", "cspa"],
        vec!["--n", "10", "--method", "oracle", "--outputs", "T_L+"],
        vec!["--n", "10", "--sweep", "field"],
    ] {
        let o = lmgc(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn numerical_failure_exit_3() {
    // zero-field MF+RPA above T_c has a vanishing gap
    let o = lmgc(&["--n", "10", "--chi", "0.5", "--method", "mfrpa_full", "--T", "0.7"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverges"));
}

#[test]
fn row_failures_do_not_change_exit_code() {
    let o = lmgc(&[
        "--n",
        "10",
        "--chi",
        "0.5",
        "--method",
        "mfrpa_full",
        "--sweep",
        "temperature",
        "--from",
        "0.1",
        "--to",
        "0.7",
        "--points",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("0.7,,,") && last.contains("diverges"), "{last}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"n": 8, "chi": 0.5, "T": 0.2, "sweep": "temperature", "from": 0.1, "to": 0.5, "points": 3, "format": "json"}"#,
    )
    .unwrap();
    let o = lmgc(&["--config", cfg.to_str().unwrap(), "--points", "4", "--vy", "0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metadata"]["grid"]["points"], 4);
    assert_eq!(v["metadata"]["params"]["vy"], 0.25);
    assert_eq!(v["metadata"]["params"]["n"], 8);

    std::fs::write(&cfg, r#"{"n": 8, "bogus": 1}"#).unwrap();
    assert_eq!(code(&lmgc(&["--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn output_is_deterministic() {
    let args = [
        "--n",
        "30",
        "--chi",
        "0.5",
        "--T",
        "0.1",
        "--sweep",
        "field",
        "--from",
        "0",
        "--to",
        "1.5",
        "--points",
        "6",
        "--outputs",
        "C,nC,lnZ,sz,omega,lambda",
    ];
    let a = lmgc(&args);
    let b = lmgc(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn phase_map_and_spectrum() {
    let o = lmgc(&[
        "--n",
        "20",
        "--chi",
        "0.5",
        "--phase-map",
        "--method",
        "mfrpa_asymptotic",
        "--from",
        "0",
        "--to",
        "2",
        "--points",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("b,b/b_c,T_L+,T_L-,T_c,"));
    assert_eq!(text.lines().count(), 4);

    let o = lmgc(&["--n", "4", "--chi", "0.5", "--spectrum", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("two_s,k,parity,delta_e"));
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().ends_with(",0.0"));
}
