//! The three commands. Each resolves its configuration (file → overrides →
//! output directory), runs the engine, and persists results; on a mid-run
//! numerical failure the outputs produced so far are still written before
//! the error propagates, so a crashed run leaves an inspectable record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use num_complex::Complex64;
use tdnqs::ansatz::Network;
use tdnqs::integrate::{
    evolve_observed, ground_state_observed, EvolveOptions, GsOptions, TrajPoint,
};
use tdnqs::model::{density, sample, AmplitudeMap, Grid, Hamiltonian};
use tdnqs::oracle;
use tdnqs::tdvp::COND_WARN;

use crate::checkpoint::Checkpoint;
use crate::config::Config;
use crate::error::CliError;
use crate::output::{
    self, BenchmarkSummary, EvolveSummary, GroundStateSummary,
};

/// Global flags; each one beats the corresponding config setting.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub amplitude_map: Option<AmplitudeMap>,
}

/// The two built-in quench protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Protocol {
    /// Prepare at x₀=1, release into the trap centered at 0 (ω unchanged).
    Coherent,
    /// Prepare at ω=1, halve the trap frequency (center unchanged).
    Breathing,
}

impl Protocol {
    fn name(&self) -> &'static str {
        match self {
            Protocol::Coherent => "coherent",
            Protocol::Breathing => "breathing",
        }
    }

    /// Pin the protocol's physics onto `cfg`. Grid, network, seed, map, and
    /// output directory stay user-controlled; everything the benchmark
    /// thresholds depend on is fixed here.
    fn apply(&self, cfg: &mut Config) {
        match self {
            Protocol::Coherent => {
                cfg.prepare_omega = 1.0;
                cfg.prepare_x0 = 1.0;
                cfg.evolve_omega = 1.0;
                cfg.evolve_x0 = 0.0;
            }
            Protocol::Breathing => {
                cfg.prepare_omega = 1.0;
                cfg.prepare_x0 = 0.0;
                cfg.evolve_omega = 0.5;
                cfg.evolve_x0 = 0.0;
            }
        }
        cfg.evolve_dt = 0.1;
        cfg.evolve_t_max = 50.0;
        cfg.evolve_lambda_re = 0.0;
        cfg.evolve_lambda_im = 1e-6;
        cfg.evolve_record_every = 1;
        // The density comparison needs a preparation far below the evolution
        // error floor, so the benchmark relaxes much deeper than the
        // ground-state command's default tolerance.
        cfg.gs_tol = 1e-12;
        cfg.gs_patience = 10;
        cfg.gs_max_steps = 40_000;
        cfg.gs_lambda = 1e-4;
    }
}

/// Benchmark pass/fail bars and the parameter-drift warning level.
pub const DENSITY_THRESHOLD: f64 = 1e-5;
pub const DRIFT_THRESHOLD: f64 = 1e-5;
pub const TRACKING_THRESHOLD: f64 = 1e-3;
pub const PARAM_DRIFT_WARN: f64 = 0.10;

/// Apply overrides and resolve where outputs go: `--output-dir` beats the
/// config's `output_dir`, which beats `TDNQS_OUTPUT_DIR`, which beats the
/// working directory. The directory is created and recorded back into the
/// config so the effective-config dump names it.
fn finalize(cfg: &mut Config, ov: &Overrides) -> Result<PathBuf, CliError> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(map) = ov.amplitude_map {
        cfg.amplitude_map = map;
    }
    if let Some(dir) = &ov.output_dir {
        cfg.output_dir = Some(dir.display().to_string());
    }
    let dir = match &cfg.output_dir {
        Some(dir) => PathBuf::from(dir),
        None => match std::env::var_os("TDNQS_OUTPUT_DIR") {
            Some(dir) => PathBuf::from(dir),
            None => PathBuf::from("."),
        },
    };
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    cfg.output_dir = Some(dir.display().to_string());
    Ok(dir)
}

struct Setup {
    net: Network,
    grid: Grid,
}

fn setup(cfg: &Config) -> Result<Setup, CliError> {
    Ok(Setup {
        net: Network::new(cfg.net_hidden)?,
        grid: Grid::new(cfg.grid_x_min, cfg.grid_x_max, cfg.grid_n)?,
    })
}

fn gs_options(cfg: &Config) -> GsOptions {
    GsOptions {
        lambda: cfg.gs_lambda,
        tol: cfg.gs_tol,
        patience: cfg.gs_patience,
        max_steps: cfg.gs_max_steps,
        ..GsOptions::default()
    }
}

fn evolve_options(cfg: &Config) -> EvolveOptions {
    EvolveOptions {
        dt: cfg.evolve_dt,
        t_max: cfg.evolve_t_max,
        lambda: Complex64::new(cfg.evolve_lambda_re, cfg.evolve_lambda_im),
        record_every: cfg.evolve_record_every,
    }
}

/// Largest |E(t) − E(0)| and largest relative parameter excursion over a
/// recorded trajectory (shared by the complete and partial output paths).
fn drift_metrics(points: &[TrajPoint]) -> (f64, f64) {
    let e0 = points[0].energy.re;
    let theta0 = &points[0].theta;
    let mut energy_drift = 0.0f64;
    let mut param_drift = 0.0f64;
    for p in points {
        energy_drift = energy_drift.max((p.energy.re - e0).abs());
        for mu in 0..theta0.len() {
            let rel = (p.theta[mu] - theta0[mu]).norm() / theta0[mu].norm().max(1.0);
            param_drift = param_drift.max(rel);
        }
    }
    (energy_drift, param_drift)
}

fn evolve_summary(cfg: &Config, points: &[TrajPoint], completed: bool) -> EvolveSummary {
    let (energy_drift, max_param_drift) = drift_metrics(points);
    let last = points.last().expect("at least the initial point");
    EvolveSummary {
        command: "evolve",
        seed: cfg.seed,
        amplitude_map: cfg.amplitude_map.name(),
        completed,
        recorded_points: points.len(),
        final_t: last.t,
        final_energy: last.energy.re,
        energy_drift,
        max_param_drift,
        max_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        max_cond: points.iter().map(|p| p.cond).fold(0.0, f64::max),
        max_im_ratio: points.iter().map(|p| p.im_ratio).fold(0.0, f64::max),
        cond_warnings: points.iter().filter(|p| p.cond > COND_WARN).count(),
    }
}

fn write_trajectory(dir: &Path, grid: &Grid, points: &[TrajPoint]) -> Result<(), CliError> {
    output::write_atomic(
        &dir.join("trajectory.csv"),
        output::trajectory_csv(points).as_bytes(),
    )?;
    output::write_atomic(
        &dir.join("density_history.csv"),
        output::density_history_csv(grid, points).as_bytes(),
    )
}

/// Relax to the ground state of the prepare-Hamiltonian and write the
/// checkpoint, the energy history, and the final density.
pub fn ground_state_cmd(config: &Path, ov: &Overrides) -> Result<(), CliError> {
    let mut cfg = Config::load(config)?;
    let dir = finalize(&mut cfg, ov)?;
    let s = setup(&cfg)?;
    let ham = Hamiltonian::new(cfg.prepare_omega, cfg.prepare_x0);
    let theta0 = s.net.init(cfg.seed);
    output::write_atomic(&dir.join("effective_config.txt"), cfg.to_text().as_bytes())?;

    let mut energies: Vec<f64> = Vec::new();
    let mut last_theta: Option<Array1<Complex64>> = None;
    let result = ground_state_observed(
        &s.net,
        cfg.amplitude_map,
        &ham,
        &s.grid,
        &theta0.view(),
        &gs_options(&cfg),
        |_, e, th| {
            energies.push(e);
            last_theta = Some(th.clone());
        },
    );

    match result {
        Ok(run) => {
            Checkpoint::new(s.net.hidden(), cfg.seed, run.theta.clone())
                .save(&dir.join("ground_state.ckpt"))?;
            output::write_atomic(
                &dir.join("energy_history.csv"),
                output::energy_history_csv(&run.energies).as_bytes(),
            )?;
            let sampled = sample(&s.net, cfg.amplitude_map, &run.theta.view(), &s.grid)?;
            output::write_atomic(
                &dir.join("density.csv"),
                output::density_csv(&s.grid, &density(&sampled, &s.grid)).as_bytes(),
            )?;
            output::write_json(
                &dir.join("summary.json"),
                &GroundStateSummary {
                    command: "ground-state",
                    seed: cfg.seed,
                    amplitude_map: cfg.amplitude_map.name(),
                    converged: true,
                    energy: Some(run.energy),
                    steps: run.steps,
                    max_rise: Some(run.max_rise),
                    max_im_ratio: Some(run.max_im_ratio),
                    max_residual: Some(run.max_residual),
                    max_cond: Some(run.max_cond),
                    cond_warnings: Some(run.cond_warnings),
                },
            )?;
            println!("ground state converged: E = {:.12} in {} steps", run.energy, run.steps);
            println!("outputs in {}", dir.display());
            Ok(())
        }
        Err(e) => {
            // Keep whatever the search produced before it gave up.
            if let Some(theta) = &last_theta {
                Checkpoint::new(s.net.hidden(), cfg.seed, theta.clone())
                    .save(&dir.join("ground_state.ckpt"))?;
                if let Ok(sampled) = sample(&s.net, cfg.amplitude_map, &theta.view(), &s.grid) {
                    output::write_atomic(
                        &dir.join("density.csv"),
                        output::density_csv(&s.grid, &density(&sampled, &s.grid)).as_bytes(),
                    )?;
                }
            }
            if !energies.is_empty() {
                output::write_atomic(
                    &dir.join("energy_history.csv"),
                    output::energy_history_csv(&energies).as_bytes(),
                )?;
            }
            let max_rise = energies
                .windows(2)
                .map(|w| (w[1] - w[0]).max(0.0))
                .fold(f64::NEG_INFINITY, f64::max);
            output::write_json(
                &dir.join("summary.json"),
                &GroundStateSummary {
                    command: "ground-state",
                    seed: cfg.seed,
                    amplitude_map: cfg.amplitude_map.name(),
                    converged: false,
                    energy: energies.last().copied(),
                    steps: energies.len(),
                    max_rise: if energies.len() >= 2 { Some(max_rise) } else { None },
                    max_im_ratio: None,
                    max_residual: None,
                    max_cond: None,
                    cond_warnings: None,
                },
            )?;
            eprintln!("partial outputs written to {}", dir.display());
            Err(e.into())
        }
    }
}

/// Load a checkpoint and run the real-time quench, writing the trajectory
/// and density history (also on a mid-run failure, for whatever was
/// recorded up to that point).
pub fn evolve_cmd(config: &Path, checkpoint: &Path, ov: &Overrides) -> Result<(), CliError> {
    let mut cfg = Config::load(config)?;
    let dir = finalize(&mut cfg, ov)?;
    let ck = Checkpoint::load(checkpoint)?;
    if ck.hidden != cfg.net_hidden {
        return Err(CliError::Config {
            path: checkpoint.to_path_buf(),
            line: None,
            message: format!(
                "checkpoint hidden size {} does not match net.hidden = {}",
                ck.hidden, cfg.net_hidden
            ),
        });
    }
    let s = setup(&cfg)?;
    let ham = Hamiltonian::new(cfg.evolve_omega, cfg.evolve_x0);
    output::write_atomic(&dir.join("effective_config.txt"), cfg.to_text().as_bytes())?;

    let mut points: Vec<TrajPoint> = Vec::new();
    let result = evolve_observed(
        &s.net,
        cfg.amplitude_map,
        &ham,
        &s.grid,
        &ck.theta.view(),
        &evolve_options(&cfg),
        |p| points.push(p.clone()),
    );

    match result {
        Ok(ev) => {
            write_trajectory(&dir, &s.grid, &ev.points)?;
            let summary = evolve_summary(&cfg, &ev.points, true);
            output::write_json(&dir.join("summary.json"), &summary)?;
            println!(
                "evolved to t = {} ({} points recorded), energy drift {:.3e}",
                summary.final_t, summary.recorded_points, summary.energy_drift
            );
            println!("outputs in {}", dir.display());
            Ok(())
        }
        Err(e) => {
            if !points.is_empty() {
                write_trajectory(&dir, &s.grid, &points)?;
                output::write_json(
                    &dir.join("summary.json"),
                    &evolve_summary(&cfg, &points, false),
                )?;
                eprintln!(
                    "partial trajectory ({} points, t ≤ {}) written to {}",
                    points.len(),
                    points.last().unwrap().t,
                    dir.display()
                );
            }
            Err(e.into())
        }
    }
}

/// One line of the benchmark report: metric, threshold, verdict.
fn gate_line(label: &str, value: f64, threshold: f64, failed: &mut Vec<String>) -> String {
    let ok = value <= threshold;
    if !ok {
        failed.push(format!("{label} {value:.3e} > {threshold:.0e}"));
    }
    format!(
        "{label:<28} {value:>12.3e}   (threshold {threshold:.0e})   {}",
        if ok { "PASS" } else { "FAIL" }
    )
}

/// Run a built-in protocol end to end and compare every recorded point
/// against the analytic solution.
pub fn benchmark_cmd(
    protocol: Protocol,
    config: Option<&Path>,
    ov: &Overrides,
) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    protocol.apply(&mut cfg);
    let dir = finalize(&mut cfg, ov)?;
    let s = setup(&cfg)?;
    let prepare = Hamiltonian::new(cfg.prepare_omega, cfg.prepare_x0);
    let quench = Hamiltonian::new(cfg.evolve_omega, cfg.evolve_x0);
    let theta0 = s.net.init(cfg.seed);
    output::write_atomic(&dir.join("effective_config.txt"), cfg.to_text().as_bytes())?;

    let clock = Instant::now();
    let run = tdnqs::integrate::ground_state(
        &s.net,
        cfg.amplitude_map,
        &prepare,
        &s.grid,
        &theta0.view(),
        &gs_options(&cfg),
    )?;
    let prepare_secs = clock.elapsed().as_secs_f64();
    Checkpoint::new(s.net.hidden(), cfg.seed, run.theta.clone())
        .save(&dir.join("ground_state.ckpt"))?;
    output::write_atomic(
        &dir.join("energy_history.csv"),
        output::energy_history_csv(&run.energies).as_bytes(),
    )?;

    let clock = Instant::now();
    let ev = tdnqs::integrate::evolve(
        &s.net,
        cfg.amplitude_map,
        &quench,
        &s.grid,
        &run.theta.view(),
        &evolve_options(&cfg),
    )?;
    let evolve_secs = clock.elapsed().as_secs_f64();
    write_trajectory(&dir, &s.grid, &ev.points)?;

    // Oracle comparison at every recorded time.
    let x = s.grid.x();
    let amp = cfg.prepare_x0 - cfg.evolve_x0;
    let mut max_density_error = 0.0f64;
    let mut tracking_error = 0.0f64;
    let mut boundary_density = 0.0f64;
    for p in &ev.points {
        let exact = match protocol {
            Protocol::Coherent => oracle::coherent_density(&x.view(), p.t, cfg.evolve_omega, amp),
            Protocol::Breathing => {
                oracle::breathing_density(&x.view(), p.t, cfg.prepare_omega, cfg.evolve_omega)
            }
        };
        max_density_error =
            max_density_error.max(oracle::max_abs_diff(&p.density.view(), &exact.view()));
        let tracked = match protocol {
            Protocol::Coherent => {
                (p.x_mean - oracle::coherent_center(p.t, cfg.evolve_omega, amp)).abs()
            }
            Protocol::Breathing => {
                (p.sigma2() - oracle::breathing_sigma2(p.t, cfg.prepare_omega, cfg.evolve_omega))
                    .abs()
            }
        };
        tracking_error = tracking_error.max(tracked);
        boundary_density = boundary_density
            .max(p.density[0])
            .max(p.density[p.density.len() - 1]);
    }
    let (energy_drift, max_param_drift) = drift_metrics(&ev.points);

    let mut failed: Vec<String> = Vec::new();
    let tracking_label = match protocol {
        Protocol::Coherent => "center tracking error",
        Protocol::Breathing => "variance tracking error",
    };
    let density_line = gate_line("max density error", max_density_error, DENSITY_THRESHOLD, &mut failed);
    let drift_line = gate_line("energy drift", energy_drift, DRIFT_THRESHOLD, &mut failed);
    let tracking_line = gate_line(tracking_label, tracking_error, TRACKING_THRESHOLD, &mut failed);
    let pass = failed.is_empty();
    let param_pct = 100.0 * max_param_drift;
    let param_verdict = if max_param_drift < PARAM_DRIFT_WARN { "OK" } else { "WARNING" };

    let mut report = String::new();
    report.push_str("tdnqs benchmark report\n");
    report.push_str(&format!("protocol:      {}\n", protocol.name()));
    report.push_str(&format!("seed:          {}\n", cfg.seed));
    report.push_str(&format!("amplitude map: {}\n", cfg.amplitude_map.name()));
    report.push_str(&format!(
        "grid:          [{}, {}] with n = {}\n",
        cfg.grid_x_min, cfg.grid_x_max, cfg.grid_n
    ));
    report.push_str(&format!(
        "prepare:       omega = {}, x0 = {} (tol {:.0e}, max {} steps)\n",
        cfg.prepare_omega, cfg.prepare_x0, cfg.gs_tol, cfg.gs_max_steps
    ));
    report.push_str(&format!(
        "evolve:        omega = {}, x0 = {}, dt = {}, t_max = {}, lambda = {}+{}i\n",
        cfg.evolve_omega,
        cfg.evolve_x0,
        cfg.evolve_dt,
        cfg.evolve_t_max,
        cfg.evolve_lambda_re,
        cfg.evolve_lambda_im
    ));
    report.push('\n');
    report.push_str(&format!(
        "prepared energy: {:.12} after {} steps (analytic {})\n",
        run.energy,
        run.steps,
        prepare.ground_energy()
    ));
    report.push_str(&format!(
        "wall clock: prepare {prepare_secs:.2} s, evolve {evolve_secs:.2} s (recorded, never gating)\n"
    ));
    report.push('\n');
    report.push_str(&density_line);
    report.push('\n');
    report.push_str(&drift_line);
    report.push('\n');
    report.push_str(&tracking_line);
    report.push('\n');
    report.push_str(&format!(
        "{:<28} {param_pct:>11.2}%   (warning at {:.0}%)    {param_verdict}\n",
        "max parameter drift",
        100.0 * PARAM_DRIFT_WARN
    ));
    report.push_str(&format!(
        "{:<28} {:>12.3e}   (monitor: stays < 1e-8)\n",
        "boundary density max", boundary_density
    ));
    report.push_str(&format!(
        "{:<28} {:>12.3e}\n",
        "max solve residual", ev.max_residual
    ));
    report.push_str(&format!(
        "{:<28} {:>12.3e}\n",
        "max condition estimate", ev.max_cond
    ));
    report.push('\n');
    report.push_str(&format!(
        "result: {}\n",
        if pass {
            "PASS".to_string()
        } else {
            format!("FAIL ({})", failed.join("; "))
        }
    ));
    output::write_atomic(&dir.join("benchmark_report.txt"), report.as_bytes())?;

    output::write_json(
        &dir.join("summary.json"),
        &BenchmarkSummary {
            command: "benchmark",
            protocol: protocol.name().to_string(),
            seed: cfg.seed,
            amplitude_map: cfg.amplitude_map.name(),
            pass,
            max_density_error,
            density_threshold: DENSITY_THRESHOLD,
            energy_drift,
            drift_threshold: DRIFT_THRESHOLD,
            tracking_error,
            tracking_threshold: TRACKING_THRESHOLD,
            max_param_drift,
            param_drift_warning_at: PARAM_DRIFT_WARN,
            prepared_energy: run.energy,
            prepare_steps: run.steps,
            prepare_max_residual: run.max_residual,
            max_solve_residual: ev.max_residual,
            boundary_density_max: boundary_density,
        },
    )?;

    print!("{report}");
    if max_param_drift >= PARAM_DRIFT_WARN {
        eprintln!(
            "warning: parameters drifted {param_pct:.2}% (> {:.0}%)",
            100.0 * PARAM_DRIFT_WARN
        );
    }
    println!("outputs in {}", dir.display());
    if pass {
        Ok(())
    } else {
        Err(CliError::Threshold { failed })
    }
}
