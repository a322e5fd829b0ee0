//! The acceptance gate: one test per release criterion, each printing a
//! single line with the measured values against the pinned tolerances
//! (run with `-- --nocapture` to see the lines for passing criteria too).
//!
//! Two clauses are expected to fail at the pinned integrator settings: the
//! benchmark density bounds of criteria 2 and 3 sit on a classic-RK4 phase
//! defect that no choice of seed, map, or preparation depth can remove (the
//! book's benchmarks chapter derives the floor). They are kept red here
//! rather than loosened; everything else is green at the documented seed.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use tdnqs::integrate::{evolve, ground_state, EvolveOptions, GsOptions};
use tdnqs::linalg::{one_norm, two_norm};
use tdnqs::model::{local_energy, sample, AmplitudeMap, Grid, Hamiltonian};
use tdnqs::oracle::max_abs_diff;
use tdnqs::prelude::Network;
use tdnqs::tdvp::{forces, qgt};
use tempfile::TempDir;

// Criterion 1: converged ground-state energy vs the exact ½ħω.
const ENERGY_TOL: f64 = 1e-6;
// Criteria 2–3: benchmark bounds (density and drift share one bar).
const DENSITY_TOL: f64 = 1e-5;
const DRIFT_TOL: f64 = 1e-5;
const TRACKING_TOL: f64 = 1e-3;
// Criterion 4: report-only warning level for parameter drift.
const PARAM_DRIFT_WARN: f64 = 0.10;
// Criterion 5: property-suite bars.
const FD_TOL: f64 = 1e-6;
const HERMITICITY_TOL: f64 = 1e-10;
const PSD_REL_TOL: f64 = 1e-8;
const GAUGE_TOL: f64 = 1e-10;
const BRUTE_FORCE_TOL: f64 = 1e-12;
const STATIONARY_ENERGY_TOL: f64 = 1e-8;
const STATIONARY_DENSITY_TOL: f64 = 1e-6;
const MONOTONE_SLACK: f64 = 1e-10;
const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tdnqs"));
    c.env_remove("TDNQS_OUTPUT_DIR");
    c
}

fn read_summary(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

struct CmdRun {
    #[allow(dead_code)]
    dir: TempDir,
    summary: serde_json::Value,
    exit: i32,
    stderr: String,
}

fn f(v: &serde_json::Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("summary field '{key}' missing or not a number"))
}

/// `tdnqs ground-state` on an otherwise-default config with the given
/// preparation center.
fn run_ground_state(x0: f64) -> CmdRun {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("prepare.x0 = {x0}\n")).unwrap();
    let out = bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.code() == Some(0),
        "ground-state x0={x0} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    CmdRun {
        summary: read_summary(dir.path()),
        exit: 0,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        dir,
    }
}

/// `tdnqs benchmark --protocol <name>`: the full prepare→quench→compare
/// pipeline; threshold misses exit 1 by design, so only exit 2 (setup
/// problems) is treated as a harness failure here.
fn run_benchmark(protocol: &str) -> CmdRun {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["benchmark", "--protocol", protocol, "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    let exit = out.status.code().unwrap_or(-1);
    assert!(
        exit == 0 || exit == 1,
        "benchmark {protocol} did not run: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    CmdRun {
        summary: read_summary(dir.path()),
        exit,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        dir,
    }
}

fn gs_x1() -> &'static CmdRun {
    static RUN: OnceLock<CmdRun> = OnceLock::new();
    RUN.get_or_init(|| run_ground_state(1.0))
}

fn gs_x0() -> &'static CmdRun {
    static RUN: OnceLock<CmdRun> = OnceLock::new();
    RUN.get_or_init(|| run_ground_state(0.0))
}

fn coherent() -> &'static CmdRun {
    static RUN: OnceLock<CmdRun> = OnceLock::new();
    RUN.get_or_init(|| run_benchmark("coherent"))
}

fn breathing() -> &'static CmdRun {
    static RUN: OnceLock<CmdRun> = OnceLock::new();
    RUN.get_or_init(|| run_benchmark("breathing"))
}

/// Deeply relaxed state evolved under its own Hamiltonian (criterion 5) —
/// kept so energy drift, density drift, and residuals can be shared.
struct Stationary {
    energy_drift: f64,
    density_drift: f64,
    prep_max_residual: f64,
    evolve_max_residual: f64,
}

fn stationary() -> &'static Stationary {
    static RUN: OnceLock<Stationary> = OnceLock::new();
    RUN.get_or_init(|| {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta0 = net.init(174);
        let run = ground_state(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta0.view(),
            &GsOptions {
                tol: 1e-12,
                max_steps: 40_000,
                ..GsOptions::default()
            },
        )
        .expect("deep relaxation on the documented seed");
        let ev = evolve(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &run.theta.view(),
            &EvolveOptions {
                t_max: 10.0,
                lambda: Complex64::new(0.0, 1e-4),
                ..EvolveOptions::default()
            },
        )
        .expect("stationary evolution");
        let d0 = ev.points[0].density.clone();
        let density_drift = ev
            .points
            .iter()
            .map(|p| max_abs_diff(&p.density.view(), &d0.view()))
            .fold(0.0, f64::max);
        Stationary {
            energy_drift: ev.energy_drift(),
            density_drift,
            prep_max_residual: run.max_residual,
            evolve_max_residual: ev.max_residual,
        }
    })
}

#[test]
fn criterion_1_ground_state_energy() {
    let e1 = (f(&gs_x1().summary, "energy") - 0.5).abs();
    let e0 = (f(&gs_x0().summary, "energy") - 0.5).abs();
    let pass = e1 <= ENERGY_TOL && e0 <= ENERGY_TOL;
    let line = format!(
        "criterion 1 (ground-state energy): |E-0.5| = {e1:.3e} (x0=1), {e0:.3e} (x0=0), tol {ENERGY_TOL:.0e} — {}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(pass, "{line}");
}

fn benchmark_criterion(which: usize, run: &CmdRun, tracking_label: &str) {
    let density = f(&run.summary, "max_density_error");
    let drift = f(&run.summary, "energy_drift");
    let tracking = f(&run.summary, "tracking_error");
    let protocol = run.summary["protocol"].as_str().unwrap();

    // The tool's own verdict must agree with its exit code before the
    // clauses are judged.
    let pass_field = run.summary["pass"].as_bool().unwrap();
    assert_eq!(
        run.exit == 0,
        pass_field,
        "benchmark exit code disagrees with its pass field"
    );

    let clause = |v: f64, tol: f64| if v <= tol { "PASS" } else { "FAIL" };
    let all = density <= DENSITY_TOL && drift <= DRIFT_TOL && tracking <= TRACKING_TOL;
    let line = format!(
        "criterion {which} ({protocol} benchmark): density {density:.3e} (≤{DENSITY_TOL:.0e}) {}; energy drift {drift:.3e} (≤{DRIFT_TOL:.0e}) {}; {tracking_label} {tracking:.3e} (≤{TRACKING_TOL:.0e}) {} — {}",
        clause(density, DENSITY_TOL),
        clause(drift, DRIFT_TOL),
        clause(tracking, TRACKING_TOL),
        if all { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(all, "{line}");
}

#[test]
fn criterion_2_coherent_benchmark() {
    benchmark_criterion(2, coherent(), "<x> error");
}

#[test]
fn criterion_3_breathing_benchmark() {
    benchmark_criterion(3, breathing(), "sigma^2 error");
}

#[test]
fn criterion_4_parameter_drift_is_reported_never_gating() {
    let mut parts = Vec::new();
    for run in [coherent(), breathing()] {
        let drift = f(&run.summary, "max_param_drift");
        let protocol = run.summary["protocol"].as_str().unwrap();
        assert!(drift.is_finite(), "{protocol}: drift not reported");
        if drift >= PARAM_DRIFT_WARN {
            // Over the line: the tool must warn on stderr, and the excursion
            // must not be among the gating failures.
            assert!(
                run.stderr.contains("warning") && run.stderr.contains("drifted"),
                "{protocol}: no drift warning in stderr: {}",
                run.stderr
            );
            assert!(
                !run.stderr.contains("thresholds missed: max parameter"),
                "{protocol}: parameter drift treated as a hard failure"
            );
        }
        parts.push(format!("{protocol} {:.2}%", 100.0 * drift));
    }
    let line = format!(
        "criterion 4 (parameter drift report): {} (warn at {:.0}%, reported, never gating) — PASS",
        parts.join(", "),
        100.0 * PARAM_DRIFT_WARN
    );
    println!("{line}");
}

/// Criterion 5a: analytic derivatives vs central differences, 100 draws.
fn worst_fd_error() -> f64 {
    let net = Network::default_shape();
    let mut worst = 0.0f64;
    let rel = |analytic: Complex64, fd: Complex64| {
        (analytic - fd).norm() / analytic.norm().max(1e-3)
    };
    for seed in 0..100u64 {
        let th = net.init(seed);
        let x = -6.0 + 12.0 * (seed as f64 / 99.0);
        let h = 1e-5;
        let p = net.eval(&th.view(), x).unwrap();
        let plus = net.eval(&th.view(), x + h).unwrap();
        let minus = net.eval(&th.view(), x - h).unwrap();
        worst = worst.max(rel(p.fx, (plus.f - minus.f) / (2.0 * h)));
        worst = worst.max(rel(p.fxx, (plus.fx - minus.fx) / (2.0 * h)));
        let h = 1e-6;
        for mu in 0..net.param_count() {
            let mut up = th.clone();
            let mut dn = th.clone();
            up[mu] += Complex64::new(h, 0.0);
            dn[mu] -= Complex64::new(h, 0.0);
            let fd = (net.eval(&up.view(), x).unwrap().f - net.eval(&dn.view(), x).unwrap().f)
                / (2.0 * h);
            worst = worst.max(rel(p.grad[mu], fd));
        }
    }
    worst
}

/// Criterion 5b: worst relative Hermiticity defect, most negative relative
/// eigenvalue, worst gauge-shift change, and worst brute-force mismatch of
/// the geometric tensor and forces over both maps and three seeds.
fn qgt_property_errors() -> (f64, f64, f64, f64) {
    let net = Network::default_shape();
    let grid = Grid::default_grid();
    let ham = Hamiltonian::new(1.0, 1.0);
    let mut herm = 0.0f64;
    let mut neg_eig = 0.0f64;
    let mut gauge = 0.0f64;
    let mut brute = 0.0f64;
    for map in [AmplitudeMap::ExpOfF, AmplitudeMap::FDirect] {
        for seed in [0u64, 7, 174] {
            let theta = net.init(seed);
            let mut s = sample(&net, map, &theta.view(), &grid).unwrap();
            let eloc = local_energy(&s, &ham, &grid);
            let q = qgt(&s);
            let fr = forces(&s, &eloc.view());
            let (n, m) = s.lj.dim();
            let qscale = one_norm(&q.view());

            for i in 0..m {
                for j in 0..m {
                    herm = herm.max((q[(i, j)] - q[(j, i)].conj()).norm() / qscale);
                }
            }

            let hermitized =
                DMatrix::from_fn(m, m, |i, j| (q[(i, j)] + q[(j, i)].conj()) * 0.5);
            let eigs = hermitized.symmetric_eigenvalues();
            let max_eig = eigs.iter().cloned().fold(0.0f64, f64::max);
            neg_eig = neg_eig.max(eigs.iter().cloned().fold(0.0f64, f64::min).abs() / max_eig);

            let avg = |g: &dyn Fn(usize) -> Complex64| -> Complex64 {
                (0..n).map(|i| s.rho[i] * g(i)).sum()
            };
            let fscale = two_norm(&fr.view()).max(1.0);
            let de_mean = avg(&|i| eloc[i]);
            for nu in 0..m {
                let onu_mean = avg(&|i| s.lj[(i, nu)]);
                let brute_f =
                    avg(&|i| s.lj[(i, nu)].conj() * eloc[i]) - onu_mean.conj() * de_mean;
                brute = brute.max((fr[nu] - brute_f).norm() / fscale);
                for mu in 0..m {
                    let omu_mean = avg(&|i| s.lj[(i, mu)]);
                    let brute_s = avg(&|i| s.lj[(i, nu)].conj() * s.lj[(i, mu)])
                        - onu_mean.conj() * omu_mean;
                    brute = brute.max((q[(nu, mu)] - brute_s).norm() / qscale.max(1.0));
                }
            }

            // Gauge shift: O_μ(x) → O_μ(x) + c_μ must leave S and F alone.
            for mu in 0..m {
                let shift = Complex64::new(0.3 + mu as f64, -1.7 * mu as f64);
                for i in 0..n {
                    s.lj[(i, mu)] += shift;
                }
            }
            let q1 = qgt(&s);
            let f1 = forces(&s, &eloc.view());
            for i in 0..m {
                gauge = gauge.max((fr[i] - f1[i]).norm() / fscale);
                for j in 0..m {
                    gauge = gauge.max((q[(i, j)] - q1[(i, j)]).norm() / qscale);
                }
            }
        }
    }
    (herm, neg_eig, gauge, brute)
}

#[test]
fn criterion_5_property_suites() {
    let fd = worst_fd_error();
    let (herm, neg_eig, gauge, brute) = qgt_property_errors();
    let st = stationary();
    let rise1 = f(&gs_x1().summary, "max_rise");
    let rise0 = f(&gs_x0().summary, "max_rise");
    let max_rise = rise1.max(rise0);
    // Worst tangent-solve residual over every run this suite performs.
    let residual = [
        f(&gs_x1().summary, "max_residual"),
        f(&gs_x0().summary, "max_residual"),
        f(&coherent().summary, "prepare_max_residual"),
        f(&coherent().summary, "max_solve_residual"),
        f(&breathing().summary, "prepare_max_residual"),
        f(&breathing().summary, "max_solve_residual"),
        st.prep_max_residual,
        st.evolve_max_residual,
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    let checks = [
        ("derivatives", fd, FD_TOL),
        ("hermiticity", herm, HERMITICITY_TOL),
        ("psd", neg_eig, PSD_REL_TOL),
        ("gauge", gauge, GAUGE_TOL),
        ("brute-force", brute, BRUTE_FORCE_TOL),
        ("stationary E", st.energy_drift, STATIONARY_ENERGY_TOL),
        ("stationary density", st.density_drift, STATIONARY_DENSITY_TOL),
        ("monotone rise", max_rise, MONOTONE_SLACK),
        ("solve residual", residual, SOLVE_RESIDUAL_TOL),
    ];
    let all = checks.iter().all(|(_, v, tol)| v <= tol);
    let line = format!(
        "criterion 5 (property suites): {} — {}",
        checks
            .iter()
            .map(|(name, v, tol)| format!(
                "{name} {v:.2e} (≤{tol:.0e}) {}",
                if v <= tol { "PASS" } else { "FAIL" }
            ))
            .collect::<Vec<_>>()
            .join("; "),
        if all { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(all, "{line}");
}

#[test]
fn criterion_6_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "evolve.t_max = 5\n").unwrap();
    let gs_dir = dir.path().join("gs");
    let out = bin()
        .args(["ground-state", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&gs_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let run = |name: &str| {
        let sub = dir.path().join(name);
        let out = bin()
            .args(["evolve", "--config"])
            .arg(&cfg)
            .arg("--checkpoint")
            .arg(gs_dir.join("ground_state.ckpt"))
            .arg("--output-dir")
            .arg(&sub)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        sub
    };
    let a = run("a");
    let b = run("b");
    let mut identical = true;
    for name in ["trajectory.csv", "density_history.csv"] {
        identical &= std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap();
    }
    let line = format!(
        "criterion 6 (determinism): identical config+seed → CSV bytes {} — {}",
        if identical { "identical" } else { "differ" },
        if identical { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(identical, "{line}");
}
