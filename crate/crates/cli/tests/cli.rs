//! End-to-end checks of the command-line surface: config strictness,
//! override handling, exit-code families, CSV schemas, and the determinism
//! contract (identical config leads to identical bytes; a manifest replays
//! its run).

use std::path::{Path, PathBuf};
use std::process::Command;

fn rns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rns"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rns-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TABLE1_POINTS: &str = "[[0.01,9.25],[0.025,8.6],[0.05,7.75],[0.1,6.85],[0.12,6.65],[0.14,6.35],[0.16,6.15],[0.2,5.75],[0.24,5.35]]";

#[test]
fn unknown_keys_are_errors_with_code_2() {
    let dir = tmpdir("badkey");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "[wave]\nnot_a_field = 1\n");
    let out = rns()
        .args(["znd", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_field"));
}

#[test]
fn domain_errors_exit_with_code_3() {
    let dir = tmpdir("domain");
    let cfg = dir.join("cfg.toml");
    // Heat release beyond the CJ limit.
    write(&cfg, "[wave]\nq = 5.0\n");
    let out = rns()
        .args(["znd", "--config", cfg.to_str().unwrap()])
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CJ limit"));
}

#[test]
fn ignition_misread_aborts_rather_than_proceeding() {
    // Reading the 0.99 of the boundary-sweep captions as a temperature
    // forbids ignition entirely; the run must abort with the ignition error.
    let dir = tmpdir("ignition");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "[wave]\nt_ig = 0.99\n");
    let out = rns()
        .args(["znd", "--config", cfg.to_str().unwrap()])
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignition failure"));
}

#[test]
fn znd_rerun_and_manifest_replay_are_byte_identical() {
    let dir = tmpdir("replay");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "[wave]\nactivation_energy = 3.1\n");
    for (sub, out) in [("a", "out_a"), ("b", "out_b")] {
        let _ = sub;
        let status = rns()
            .args(["znd", "--config", cfg.to_str().unwrap(), "--out", out])
            .current_dir(&dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.join("out_a/znd.csv")).unwrap();
    let b = std::fs::read(dir.join("out_b/znd.csv")).unwrap();
    assert_eq!(a, b, "identical config must give identical CSV bytes");

    // Replay from the emitted manifest.
    let status = rns()
        .args([
            "znd",
            "--config",
            dir.join("out_a/manifest.json").to_str().unwrap(),
            "--out",
            "out_c",
        ])
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let c = std::fs::read(dir.join("out_c/znd.csv")).unwrap();
    assert_eq!(a, c, "manifest replay must reproduce outputs");
}

#[test]
fn overrides_apply_and_are_recorded() {
    let dir = tmpdir("override");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "");
    let status = rns()
        .args([
            "znd",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "wave.activation_energy=4.0",
            "--out",
            "out",
        ])
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        manifest["overrides"][0].as_str().unwrap(),
        "wave.activation_energy=4.0"
    );
    assert_eq!(
        manifest["resolved_config"]["wave"]["activation_energy"]
            .as_f64()
            .unwrap(),
        4.0
    );
    // Conventions and tolerances are part of every manifest.
    assert!(manifest["conventions"]["ignition"]["t_ig_resolved"].is_number());
    assert!(manifest["tolerances"]["endpoint_criterion"].is_number());
    assert!(manifest["conventions"]["reaction_rate"]["calibrated"]
        .as_bool()
        .unwrap());
}

#[test]
fn fit_subcommand_reproduces_reported_upper_curve() {
    let dir = tmpdir("fit");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "");
    let status = rns()
        .args([
            "fit",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "sweep.fit_model=\"linear_log\"",
            "--set",
            &format!("sweep.fit_points={TABLE1_POINTS}"),
            "--out",
            "out",
        ])
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/fit.json")).unwrap()).unwrap();
    let c: Vec<f64> = fit["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((c[0] / 5.67 - 1.0).abs() < 0.05);
    assert!((c[1] / -6.16 - 1.0).abs() < 0.05);
    assert!((c[2] / -0.804 - 1.0).abs() < 0.05);
}

#[test]
fn delay_subcommand_emits_table() {
    let dir = tmpdir("delay");
    let cfg = dir.join("cfg.toml");
    write(
        &cfg,
        "[sweep]\ne_star = 2.45\nfit_points = [[0.05, 2.65], [0.1, 2.75]]\n",
    );
    let status = rns()
        .args(["delay", "--config", cfg.to_str().unwrap(), "--out", "out"])
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("out/delay.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "nu,relative_delay");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.05");
    let d: f64 = row[1].parse().unwrap();
    assert!((d - (2.65 - 2.45) / 2.45).abs() < 1e-12);
}

#[test]
fn gmat_dump_has_49_entries() {
    let dir = tmpdir("gmat");
    let cfg = dir.join("cfg.toml");
    write(&cfg, "[evans]\ngmat_x = -2.0\ngmat_re_lambda = 0.5\ngmat_im_lambda = 0.25\n");
    let status = rns()
        .args(["gmat", "--config", cfg.to_str().unwrap(), "--out", "out"])
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("out/gmat.csv")).unwrap();
    assert_eq!(csv.lines().count(), 50); // header + 7x7
    // The (0,0) entry is lambda itself.
    let first = csv.lines().nth(1).unwrap();
    assert_eq!(first, "0,0,0.5,0.25");
}
