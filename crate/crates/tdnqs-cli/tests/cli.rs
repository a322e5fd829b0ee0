//! End-to-end tests of the `tdnqs` binary: exit codes, output files, and
//! byte-level determinism, all through real subprocess invocations.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tdnqs"));
    // Isolate from any ambient default-output override.
    c.env_remove("TDNQS_OUTPUT_DIR");
    c
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Run `ground-state` into `dir` with the given config text; returns the
/// process output.
fn ground_state(dir: &Path, config_text: &str) -> Output {
    let cfg = dir.join("run.cfg");
    write(&cfg, config_text);
    bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn malformed_config_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "seed = 174\nevolve.dt = fast\n");
    let out = bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.cfg:2"), "no line number in: {err}");
    assert!(err.contains("evolve.dt"), "offending key not named: {err}");
}

#[test]
fn tiny_grid_exits_2_naming_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let out = ground_state(dir.path(), "grid.n = 1\n");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("grid"), "constraint not named: {err}");
    assert!(err.contains("2"), "minimum not stated: {err}");
}

#[test]
fn missing_checkpoint_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "");
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--checkpoint")
        .arg(dir.path().join("absent.ckpt"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absent.ckpt"), "{}", stderr(&out));
}

#[test]
fn unknown_protocol_exits_2() {
    let out = bin()
        .args(["benchmark", "--protocol", "squeeze"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("coherent"), "{}", stderr(&out));
}

#[test]
fn ground_state_writes_documented_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ground_state(dir.path(), "");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("converged"), "{stdout}");
    assert!(stdout.contains("steps"), "{stdout}");

    for name in [
        "ground_state.ckpt",
        "energy_history.csv",
        "density.csv",
        "summary.json",
        "effective_config.txt",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }

    let s = summary(dir.path());
    assert_eq!(s["converged"], true);
    assert_eq!(s["seed"], 174);
    let energy = s["energy"].as_f64().unwrap();
    assert!((energy - 0.5).abs() <= 1e-6, "E = {energy}");

    // The checkpoint is well formed and carries the run's provenance.
    let ckpt = std::fs::read_to_string(dir.path().join("ground_state.ckpt")).unwrap();
    let mut lines = ckpt.lines();
    assert_eq!(lines.next(), Some("tdnqs-checkpoint 1"));
    assert_eq!(lines.next(), Some("hidden 5"));
    assert_eq!(lines.next(), Some("seed 174"));
    assert_eq!(lines.next(), Some("theta 16"));
    assert_eq!(ckpt.lines().count(), 4 + 16);

    // One history row per relaxation step, plus the header.
    let steps = s["steps"].as_u64().unwrap() as usize;
    let history = std::fs::read_to_string(dir.path().join("energy_history.csv")).unwrap();
    assert_eq!(history.lines().count(), steps + 1);
}

#[test]
fn evolve_outputs_are_deterministic_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = ground_state(dir.path(), "");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ckpt = dir.path().join("ground_state.ckpt");

    let cfg = dir.path().join("evolve.cfg");
    write(&cfg, "evolve.t_max = 2\nevolve.record_every = 5\n");
    let run = |sub: &str| {
        let sub_dir = dir.path().join(sub);
        let out = bin()
            .args(["evolve", "--config"])
            .arg(&cfg)
            .arg("--checkpoint")
            .arg(&ckpt)
            .arg("--output-dir")
            .arg(&sub_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        sub_dir
    };
    let a = run("a");
    let b = run("b");

    let traj = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with(
        "t,energy,norm,x_mean,x2_mean,variance,solve_residual,cond_estimate\n"
    ));
    // t ∈ {0, 0.5, 1.0, 1.5, 2.0} at record_every = 5, plus the header.
    assert_eq!(traj.lines().count(), 6);

    for name in ["trajectory.csv", "density_history.csv", "summary.json"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn env_var_supplies_the_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "");
    let target = dir.path().join("from_env");
    let out = bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .env("TDNQS_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(target.join("ground_state.ckpt").exists());
}

#[test]
fn global_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "seed = 174\n");
    let out = bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .args(["--seed", "8", "--amplitude-map", "f_direct"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(dir.path());
    assert_eq!(s["seed"], 8);
    assert_eq!(s["amplitude_map"], "f_direct");
    assert!((s["energy"].as_f64().unwrap() - 0.5).abs() <= 1e-6);
    // The effective config records the overridden values.
    let text = std::fs::read_to_string(dir.path().join("effective_config.txt")).unwrap();
    assert!(text.contains("seed = 8"), "{text}");
    assert!(text.contains("amplitude_map = f_direct"), "{text}");
}

#[test]
fn unconverged_search_exits_1_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ground_state(dir.path(), "gs.max_steps = 5\n");
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("partial"), "{}", stderr(&out));
    assert!(dir.path().join("ground_state.ckpt").exists());
    assert!(dir.path().join("energy_history.csv").exists());
    let s = summary(dir.path());
    assert_eq!(s["converged"], false);
    assert_eq!(s["steps"], 5);
}

#[test]
fn checkpoint_network_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = ground_state(dir.path(), "");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let cfg = dir.path().join("mismatch.cfg");
    write(&cfg, "net.hidden = 4\n");
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--checkpoint")
        .arg(dir.path().join("ground_state.ckpt"))
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hidden"), "{}", stderr(&out));
}
