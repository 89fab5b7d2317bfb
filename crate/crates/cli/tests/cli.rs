use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tnt-readout"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().find(|l| !l.starts_with('#')).unwrap().to_string()
}

#[test]
fn fig1_small_system() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig1");
    run_ok(&["fig", "--preset", "fig1", "--N", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(
        csv_header(&out.join("fig1_gain.csv")),
        "chi_t,fq_over_n_tnt,fq_over_n_oat,gain_tnt,gain_oat,heisenberg_over_n"
    );
    for i in 1..=4 {
        let text = fs::read_to_string(out.join(format!("fig1_q_{i}.csv"))).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 90);
        assert!(rows.iter().all(|r| r.split(',').count() == 180));
    }
    // F_Q / N starts at 1 for the coherent state
    let text = fs::read_to_string(out.join("fig1_gain.csv")).unwrap();
    let first: Vec<f64> = text.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((first[1] - 1.0).abs() < 1e-9);
}

#[test]
fn fig3_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig3");
    run_ok(&["fig", "--preset", "fig3", "--out", out.to_str().unwrap()]);
    for readout in ["trivial", "echo"] {
        for tag in ["phi0", "dphi"] {
            assert!(out.join(format!("fig3_q_{readout}_{tag}.csv")).exists());
            assert_eq!(csv_header(&out.join(format!("fig3_probs_{readout}_{tag}.csv"))), "m,p,p_sigma_1");
        }
    }
    let h = read_json(&out.join("fig3_hellinger.json"));
    for readout in ["trivial", "echo"] {
        let d = &h["distances"][readout];
        let ideal = d["hellinger_sq_ideal"].as_f64().unwrap();
        let noisy = d["hellinger_sq_noisy"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&ideal) && (0.0..=1.0).contains(&noisy));
        assert!(noisy <= ideal);
    }
}

#[test]
fn fig4_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "coarse.toml",
        "[scan]\nsigma = { start = 0.0, stop = 2.0, step = 1.0 }\nt1_values = [0.05]\nasym_opt_ratio = { start = 1.0, stop = 3.0, step = 1.0 }\n[search]\ngrid = 16\n",
    );
    let out = tmp.path().join("fig4");
    run_ok(&["fig", "--preset", "fig4", "--N", "10", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        csv_header(&out.join("fig4_t1_0.05.csv")),
        "sigma,fc_trivial,fc_echo,fc_asym,fc_pseudo,qcrb,snl"
    );
    assert_eq!(csv_header(&out.join("fig4_asym_opt_t1_0.05.csv")), "sigma,fc_asym_opt,ratio");
    assert!(read_json(&out.join("fig4_crossings.json"))["sigma_star"]["0.05"].is_object());
}

#[test]
fn run_coherent_state_is_standard_quantum_limit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "N = 12\nt1 = 0.0\n");
    let out = tmp.path().join("run");
    run_ok(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let v = read_json(&out.join("run.json"));
    assert!((v["qfi"].as_f64().unwrap() - 12.0).abs() < 1e-9);
}

#[test]
fn run_echo_saturates_qfi() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "N = 20\nt1 = 0.1\nreadout = \"echo\"\nsigmas = [0.0]\n");
    let out = tmp.path().join("run");
    run_ok(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let v = read_json(&out.join("run.json"));
    let fq = v["qfi"].as_f64().unwrap();
    let fc = v["cfi"][0]["fc_analytic"].as_f64().unwrap();
    let fd = v["cfi"][0]["fc_fd"].as_f64().unwrap();
    assert!(((fc - fq) / fq).abs() < 1e-3, "fc {fc} fq {fq}");
    assert!(((fd - fc) / fc).abs() < 1e-4);
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "N = 10\nsigmaa = [1.0]\n");
    let out = bin().args(["run", "--config", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigmaa"));
}

#[test]
fn invalid_value_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "N = 10\nlambda = -1.0\n");
    let out = bin().args(["run", "--config", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

fn certify(tmp: &TempDir, text: &str) -> (Option<i32>, String) {
    let cfg = write_config(tmp.path(), "cert.toml", text);
    let out = bin().args(["certify", "--config", &cfg]).output().unwrap();
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn certify_echo_in_sx_basis() {
    let tmp = TempDir::new().unwrap();
    let (code, stdout) = certify(&tmp, "N = 10\nt1 = 0.1\nreadout = \"echo\"\n");
    assert_eq!(code, Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn certify_rejects_sz_basis_with_tnt_readout() {
    let tmp = TempDir::new().unwrap();
    let (code, stdout) = certify(&tmp, "N = 10\nt1 = 0.1\nreadout = \"echo\"\nmeasurement = \"sz\"\n");
    assert_eq!(code, Some(1));
    let third = stdout.lines().nth(2).unwrap();
    assert!(third.starts_with("FAIL readout commutes"), "{stdout}");
}

#[test]
fn certify_rotation_about_x() {
    let tmp = TempDir::new().unwrap();
    let (code, stdout) = certify(
        &tmp,
        "N = 10\nt1 = 0.1\nreadout = \"rotation\"\nrotation_axis = [1.0, 0.0, 0.0]\nrotation_angle = 0.7\n",
    );
    assert_eq!(code, Some(0), "{stdout}");
}

#[test]
fn outputs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "N = 16\nt1 = 0.05\nreadout = \"echo\"\nsigmas = [0.0, 1.0]\nbasis = \"optimized\"\n[search]\ngrid = 16\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "2"]);
    run_ok(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]);
    for name in ["run.json", "run_probs.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_round_trips() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("m");
    run_ok(&["run", "--N", "8", "--out", out.to_str().unwrap()]);
    let manifest: tnt_cli::output::Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.hash(), manifest.config_hash);
    assert_eq!(manifest.command, "run");
    for f in &manifest.files {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("run_probs.csv")).unwrap();
    assert!(csv.starts_with(&format!("# config_hash={}", manifest.config_hash)));
}
