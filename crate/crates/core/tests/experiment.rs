use std::fs;
use std::path::Path;
use std::process::Command;

use vortalign::experiment::*;
use vortalign::Error;

fn config(dir: &Path, body: &str) -> RunConfig {
    RunConfig::parse(&format!("{body}\noutput_dir = {}\n", dir.display())).unwrap()
}

const ABC: &str = "\
grid_n = 16
nu_m2_per_s = 0.1
t_end_s = 1.0
dt_s = 0.05
init = abc
abc_a_m_per_s = 1
abc_b_m_per_s = 0
abc_c_m_per_s = 0
q_list = 2,4
record_stride_steps = 4
checkpoint_stride_records = 2";

#[test]
fn abc_run_has_exponential_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), ABC);
    let out = cmd_simulate(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    let (hash, recs) = parse_ledger_csv(&text).unwrap();
    assert_eq!(hash, cfg.hash());
    assert_eq!(recs.len(), 2 * 6);
    for r in &recs {
        let q0 = recs.iter().find(|s| s.q == r.q).unwrap().big_q;
        let expected = q0 * (-r.q * 0.1 * r.t).exp();
        assert!((r.big_q - expected).abs() < 1e-9 * q0, "{r:?}");
    }
    assert_eq!(out.summary.checkpoints, 3);
    assert_eq!(list_checkpoints(dir.path()).unwrap().len(), 3);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], cfg.hash());
    assert!(summary["rng"].as_str().unwrap().contains("ChaCha8"));
    assert!(!dir.path().join("BLOWUP").exists());
}

#[test]
fn zero_duration_gives_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &ABC.replace("t_end_s = 1.0", "t_end_s = 0").replace("q_list = 2,4", "q_list = 3"));
    let out = cmd_simulate(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.summary.records, 1);
}

#[test]
fn reruns_are_byte_identical() {
    let body = "\
grid_n = 8
nu_m2_per_s = 0.05
t_end_s = 0.2
dt_s = 0.02
init = random
seed = 7
q_list = 2,3";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_simulate(&config(a.path(), body)).unwrap();
    cmd_simulate(&config(b.path(), body)).unwrap();
    for f in ["ledger.csv", "summary.json", "config.txt"] {
        let (x, y) = (fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        assert!(x == y || f == "config.txt", "{f} differs");
    }
    let other = tempfile::tempdir().unwrap();
    cmd_simulate(&config(other.path(), &body.replace("seed = 7", "seed = 8"))).unwrap();
    assert_ne!(
        fs::read(a.path().join("ledger.csv")).unwrap(),
        fs::read(other.path().join("ledger.csv")).unwrap()
    );
}

#[test]
fn blow_up_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &format!("{ABC}\nvorticity_ceiling_per_s = 0.95"));
    let out = cmd_simulate(&cfg).unwrap();
    assert!(out.summary.blow_up.is_some());
    assert!(dir.path().join("BLOWUP").exists());
    assert!(dir.path().join("ledger.csv").exists());
    assert!(!out.records.is_empty());
}

#[test]
fn diagnose_above_max_vorticity_gives_pure_x() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &ABC.replace("abc_b_m_per_s = 0", "abc_b_m_per_s = 0.5"));
    cmd_simulate(&cfg).unwrap();
    let rows = cmd_diagnose(dir.path(), 2.0, 0.75, 10.0).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.y_int, 0.0);
        assert_eq!(r.z_int, 0.0);
        assert_eq!(r.pairs, 0);
        assert!(r.rho_hat.is_infinite());
        assert!(r.z_chain_ok);
    }
    let text = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(text.starts_with(&format!("# schema={DIAGNOSTICS_SCHEMA} config_hash={}", cfg.hash())));
}

#[test]
fn diagnose_random_run_checks_z_chain() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
grid_n = 16
nu_m2_per_s = 0.05
t_end_s = 0.2
dt_s = 0.02
init = random
q_list = 2
angle_pairs = 5000
j_bound_c = 1.0";
    let cfg = config(dir.path(), body);
    cmd_simulate(&cfg).unwrap();
    let lambda = 0.5 * cfg.initial_state().unwrap().vorticity().max_magnitude();
    let rows = cmd_diagnose(dir.path(), 2.0, 0.75, lambda).unwrap();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert!(r.identity_residual < 1e-10);
        assert!(r.pairs > 0 && r.rho_hat.is_finite());
        assert!(r.z_chain_ok, "{r:?}");
        assert!(r.j_bound_margin.is_some());
        assert_eq!(r.rho_hat_grid.len(), 3);
    }
    // interior records carry a slack value
    assert!(rows[1..rows.len() - 1].iter().all(|r| r.slack.is_some_and(|s| s > 0.0)));
    let again = cmd_diagnose(dir.path(), 2.0, 0.75, lambda).unwrap();
    assert_eq!(format!("{rows:?}"), format!("{again:?}"));
}

#[test]
fn missing_run_dir_is_a_clean_error() {
    let err = cmd_diagnose(Path::new("/nonexistent/run"), 2.0, 0.75, 1.0).unwrap_err();
    assert!(matches!(err, Error::MissingRunDir(_)));
}

#[test]
fn cli_rejects_empty_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.cfg");
    fs::write(&path, "# nothing\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vortalign"))
        .args(["simulate", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty configuration"));
    let out = Command::new(env!("CARGO_BIN_EXE_vortalign")).arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_simulate_honours_out_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, format!("{}\noutput_dir = /nonexistent\n", ABC.replace("t_end_s = 1.0", "t_end_s = 0.1"))).unwrap();
    let run = dir.path().join("run");
    let out = Command::new(env!("CARGO_BIN_EXE_vortalign"))
        .args(["simulate", "--seed", "5", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = RunConfig::load(&run.join("config.txt")).unwrap();
    assert_eq!(cfg.seed, 5);
}

#[test]
fn cli_indices_and_verify() {
    let out = Command::new(env!("CARGO_BIN_EXE_vortalign"))
        .args(["indices", "--q", "2,4", "--delta", "0,0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(&format!("# schema={FEASIBILITY_SCHEMA}")));
    assert_eq!(text.lines().count(), 2 + 4);

    let out = Command::new(env!("CARGO_BIN_EXE_vortalign"))
        .args(["verify", "--only", "5,8"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 2);
}
