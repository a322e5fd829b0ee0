//! Time integration: the classic fixed-step RK4 rule and the two drivers
//! built on it — imaginary-time relaxation to the ground state and real-time
//! evolution with trajectory recording.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;

use crate::ansatz::Network;
use crate::error::{Error, Result};
use crate::model::{density, observables, sample, AmplitudeMap, Grid, Hamiltonian};
use crate::tdvp::{equation_of_motion, EvolutionMode};

/// Imaginary-time energies beyond this magnitude are treated as divergence.
pub const ENERGY_BLOWUP: f64 = 1e4;

/// One classic Runge–Kutta 4 step of size `dt` for the parameter vector.
/// `rhs` may fail (the tangent-space solve is fallible), so the step does too.
pub fn rk4_step<F>(theta: &ArrayView1<Complex64>, dt: f64, mut rhs: F) -> Result<Array1<Complex64>>
where
    F: FnMut(&ArrayView1<Complex64>) -> Result<Array1<Complex64>>,
{
    let half = dt / 2.0;
    let k1 = rhs(theta)?;
    let y2 = stage(theta, &k1, half);
    let k2 = rhs(&y2.view())?;
    let y3 = stage(theta, &k2, half);
    let k3 = rhs(&y3.view())?;
    let y4 = stage(theta, &k3, dt);
    let k4 = rhs(&y4.view())?;
    let mut out = theta.to_owned();
    for i in 0..out.len() {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn stage(theta: &ArrayView1<Complex64>, k: &Array1<Complex64>, h: f64) -> Array1<Complex64> {
    let mut y = theta.to_owned();
    for i in 0..y.len() {
        y[i] += h * k[i];
    }
    y
}

/// Settings for imaginary-time ground-state relaxation.
#[derive(Debug, Clone, Copy)]
pub struct GsOptions {
    /// RK4 step in imaginary time.
    pub dt: f64,
    /// Real diagonal shift added to the geometric tensor.
    pub lambda: f64,
    /// Convergence threshold on the per-step energy change |δE|.
    pub tol: f64,
    /// Number of consecutive steps |δE| must stay below `tol`.
    pub patience: usize,
    /// Abort with [`Error::NotConverged`] beyond this many steps.
    pub max_steps: usize,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            dt: 0.1,
            lambda: 1e-4,
            tol: 1e-8,
            patience: 10,
            max_steps: 10_000,
        }
    }
}

/// Result of a converged ground-state search plus run diagnostics.
#[derive(Debug, Clone)]
pub struct GsRun {
    pub theta: Array1<Complex64>,
    /// Converged variational energy Re⟨H⟩.
    pub energy: f64,
    /// RK4 steps taken until the stopping rule fired.
    pub steps: usize,
    /// Re⟨H⟩ after every step (index 0 = after the first step).
    pub energies: Vec<f64>,
    /// Largest single-step energy *increase* seen (0 for a monotone descent).
    pub max_rise: f64,
    /// Largest |Im⟨H⟩|/|⟨H⟩| seen (reported; not an error in imaginary time).
    pub max_im_ratio: f64,
    pub max_residual: f64,
    pub max_cond: f64,
    pub cond_warnings: usize,
}

/// Relax `theta0` to the variational ground state of `ham`.
pub fn ground_state(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta0: &ArrayView1<Complex64>,
    opts: &GsOptions,
) -> Result<GsRun> {
    ground_state_observed(net, map, ham, grid, theta0, opts, |_, _, _| {})
}

/// [`ground_state`] with an observer called after every accepted step with
/// (step number, Re⟨H⟩, current parameters), so a caller can keep the energy
/// history and the latest state even when the search errors out.
pub fn ground_state_observed(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta0: &ArrayView1<Complex64>,
    opts: &GsOptions,
    mut on_step: impl FnMut(usize, f64, &Array1<Complex64>),
) -> Result<GsRun> {
    validate_step(opts.dt)?;
    let lambda = Complex64::new(opts.lambda, 0.0);
    let mut theta = theta0.to_owned();
    let mut energies = Vec::new();
    let mut prev_energy: Option<f64> = None;
    let mut streak = 0usize;
    let mut max_rise = 0.0f64;
    let mut max_im_ratio = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut max_cond = 0.0f64;
    let mut cond_warnings = 0usize;
    let mut last_delta = f64::INFINITY;

    for step in 0..opts.max_steps {
        theta = rk4_step(&theta.view(), opts.dt, |th| {
            let out = equation_of_motion(
                net,
                map,
                ham,
                grid,
                th,
                lambda,
                EvolutionMode::ImaginaryTime,
            )?;
            max_residual = max_residual.max(out.residual);
            max_cond = max_cond.max(out.cond);
            if out.cond_warning {
                cond_warnings += 1;
            }
            Ok(out.theta_dot)
        })?;

        let s = sample(net, map, &theta.view(), grid)?;
        let obs = observables(&s, ham, grid);
        let e = obs.energy.re;
        if !e.is_finite() || e.abs() > ENERGY_BLOWUP {
            return Err(Error::EnergyDiverged {
                energy: e.abs(),
                steps: step + 1,
            });
        }
        max_im_ratio =
            max_im_ratio.max(obs.energy.im.abs() / obs.energy.norm().max(f64::MIN_POSITIVE));
        energies.push(e);
        on_step(step + 1, e, &theta);

        if let Some(prev) = prev_energy {
            let delta = e - prev;
            max_rise = max_rise.max(delta);
            last_delta = delta.abs();
            if delta.abs() <= opts.tol {
                streak += 1;
                if streak >= opts.patience {
                    return Ok(GsRun {
                        theta,
                        energy: e,
                        steps: step + 1,
                        energies,
                        max_rise,
                        max_im_ratio,
                        max_residual,
                        max_cond,
                        cond_warnings,
                    });
                }
            } else {
                streak = 0;
            }
        }
        prev_energy = Some(e);
    }
    Err(Error::NotConverged {
        max_steps: opts.max_steps,
        last_delta,
    })
}

/// Settings for real-time evolution.
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Diagonal shift; imaginary values damp the near-singular directions.
    pub lambda: Complex64,
    /// Record the trajectory every this many steps (the initial and final
    /// states are always recorded).
    pub record_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 0.1,
            t_max: 50.0,
            lambda: Complex64::new(0.0, 1e-6),
            record_every: 1,
        }
    }
}

/// One recorded point of a real-time trajectory.
#[derive(Debug, Clone)]
pub struct TrajPoint {
    pub t: f64,
    pub step: usize,
    pub energy: Complex64,
    /// Quadrature norm of the recorded density (1 up to rounding; recorded
    /// so the output files state it rather than assume it).
    pub norm: f64,
    pub x_mean: f64,
    pub x2_mean: f64,
    /// Continuum-normalized density on the grid.
    pub density: Array1<f64>,
    pub theta: Array1<Complex64>,
    /// Worst tangent-solve residual among the RK4 stages since the previous
    /// recorded point (0 for the initial point — nothing solved yet).
    pub residual: f64,
    /// Worst condition number over the same stages.
    pub cond: f64,
    /// Worst |Im⟨H⟩|/|⟨H⟩| over the same stages.
    pub im_ratio: f64,
    /// Largest |θ̇| component over the same stages.
    pub max_theta_dot: f64,
}

impl TrajPoint {
    pub fn sigma2(&self) -> f64 {
        self.x2_mean - self.x_mean * self.x_mean
    }
}

/// A recorded real-time run.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub points: Vec<TrajPoint>,
    pub max_residual: f64,
    pub max_cond: f64,
    /// Largest |Im⟨H⟩|/|⟨H⟩| seen over the run (hard-bounded by the solver).
    pub max_im_ratio: f64,
    pub cond_warnings: usize,
}

impl Evolution {
    /// Largest |E(t) − E(0)| over the recorded points.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.points[0].energy.re;
        self.points
            .iter()
            .map(|p| (p.energy.re - e0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest per-parameter drift relative to the initial magnitude
    /// (floored at one so near-zero parameters don't inflate the ratio).
    pub fn max_param_drift(&self) -> f64 {
        let theta0 = &self.points[0].theta;
        let mut worst = 0.0f64;
        for p in &self.points {
            for mu in 0..theta0.len() {
                let rel = (p.theta[mu] - theta0[mu]).norm() / theta0[mu].norm().max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }
}

/// Evolve `theta0` under `ham` in real time, recording as configured.
pub fn evolve(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta0: &ArrayView1<Complex64>,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    evolve_observed(net, map, ham, grid, theta0, opts, |_| {})
}

/// [`evolve`] with an observer called after each recorded point. The
/// observer sees every point the result would contain, so a caller can
/// persist the trajectory as it grows and keep the partial record when a
/// later step fails.
pub fn evolve_observed(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta0: &ArrayView1<Complex64>,
    opts: &EvolveOptions,
    mut on_record: impl FnMut(&TrajPoint),
) -> Result<Evolution> {
    validate_step(opts.dt)?;
    if opts.record_every == 0 {
        return Err(Error::Invalid {
            what: "record_every",
            why: "must be at least 1".into(),
        });
    }
    if !(opts.t_max.is_finite() && opts.t_max >= 0.0) {
        return Err(Error::Invalid {
            what: "t_max",
            why: format!("must be finite and non-negative, got {}", opts.t_max),
        });
    }
    let n_steps = (opts.t_max / opts.dt).round() as usize;
    let mut theta = theta0.to_owned();
    let mut ev = Evolution {
        points: Vec::with_capacity(n_steps / opts.record_every + 2),
        max_residual: 0.0,
        max_cond: 0.0,
        max_im_ratio: 0.0,
        cond_warnings: 0,
    };
    // Stage diagnostics accumulated since the last recorded point.
    let mut window = StageWindow::default();
    record(net, map, ham, grid, &theta, 0, opts.dt, &window, &mut ev)?;
    on_record(ev.points.last().expect("just recorded"));
    for step in 1..=n_steps {
        theta = rk4_step(&theta.view(), opts.dt, |th| {
            let out =
                equation_of_motion(net, map, ham, grid, th, opts.lambda, EvolutionMode::RealTime)?;
            window.absorb(&out);
            ev.max_residual = ev.max_residual.max(out.residual);
            ev.max_cond = ev.max_cond.max(out.cond);
            ev.max_im_ratio = ev.max_im_ratio.max(window.im_ratio);
            if out.cond_warning {
                ev.cond_warnings += 1;
            }
            Ok(out.theta_dot)
        })?;
        if step % opts.record_every == 0 || step == n_steps {
            record(net, map, ham, grid, &theta, step, opts.dt, &window, &mut ev)?;
            on_record(ev.points.last().expect("just recorded"));
            window = StageWindow::default();
        }
    }
    Ok(ev)
}

/// Worst-case stage diagnostics between two recorded points.
#[derive(Debug, Clone, Copy, Default)]
struct StageWindow {
    residual: f64,
    cond: f64,
    im_ratio: f64,
    max_theta_dot: f64,
}

impl StageWindow {
    fn absorb(&mut self, out: &crate::tdvp::EomOutput) {
        self.residual = self.residual.max(out.residual);
        self.cond = self.cond.max(out.cond);
        self.im_ratio = self
            .im_ratio
            .max(out.energy.im.abs() / out.energy.norm().max(f64::MIN_POSITIVE));
        let biggest = out
            .theta_dot
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        self.max_theta_dot = self.max_theta_dot.max(biggest);
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta: &Array1<Complex64>,
    step: usize,
    dt: f64,
    window: &StageWindow,
    ev: &mut Evolution,
) -> Result<()> {
    let s = sample(net, map, &theta.view(), grid)?;
    let obs = observables(&s, ham, grid);
    let d = density(&s, grid);
    let norm: f64 = d
        .iter()
        .zip(grid.weights().iter())
        .map(|(di, wi)| di * wi)
        .sum();
    ev.points.push(TrajPoint {
        t: step as f64 * dt,
        step,
        energy: obs.energy,
        norm,
        x_mean: obs.x_mean,
        x2_mean: obs.x2_mean,
        density: d,
        theta: theta.clone(),
        residual: window.residual,
        cond: window.cond,
        im_ratio: window.im_ratio,
        max_theta_dot: window.max_theta_dot,
    });
    Ok(())
}

fn validate_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invalid {
            what: "dt",
            why: format!("must be finite and positive, got {dt}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    // One step of ẏ = −y from y = 1 at δt = 0.1: the RK4 polynomial
    // 1 − h + h²/2 − h³/6 + h⁴/24 evaluates to exactly 0.9048375.
    #[test]
    fn rk4_scalar_step_frozen_value() {
        let y0 = array![Complex64::ONE];
        let y1 = rk4_step(&y0.view(), 0.1, |y| Ok(y.mapv(|v| -v))).unwrap();
        assert_eq!(y1[0].re, 0.9048375);
        assert_eq!(y1[0].im, 0.0);
    }

    // ẏ = iωy rotates on the circle; 100 RK4 steps at h = 0.05 must track
    // e^{iωt} with the textbook O(h⁴) global error and no more.
    #[test]
    fn rk4_tracks_complex_rotation() {
        let omega = 1.3;
        let mut y = array![Complex64::ONE];
        let dt = 0.05;
        for _ in 0..100 {
            y = rk4_step(&y.view(), dt, |y| {
                Ok(y.mapv(|v| Complex64::new(0.0, omega) * v))
            })
            .unwrap();
        }
        let exact = Complex64::new(0.0, omega * 5.0).exp();
        let err = (y[0] - exact).norm();
        // Global error ≈ t·(ωh)⁵/(120h) ≈ 9.7e-7 here.
        assert!(err < 2e-6, "rotation error {err:e}");
        assert!(err > 1e-8, "suspiciously exact: {err:e}");
    }

    #[test]
    fn rk4_propagates_rhs_failure() {
        let y0 = array![Complex64::ONE];
        let mut calls = 0;
        let r = rk4_step(&y0.view(), 0.1, |_| {
            calls += 1;
            if calls == 3 {
                Err(Error::NonFinite {
                    what: "test",
                    context: "rk4",
                })
            } else {
                Ok(array![Complex64::ZERO])
            }
        });
        assert!(r.is_err());
        assert_eq!(calls, 3, "failure must stop the remaining stages");
    }

    #[test]
    fn ground_state_converges_on_documented_seed() {
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
            &GsOptions::default(),
        )
        .unwrap();
        assert!((run.energy - 0.5).abs() < 1e-6, "E = {}", run.energy);
        assert_eq!(run.max_rise, 0.0, "descent was not monotone");
        assert!(run.steps < 200, "took {} steps", run.steps);
        assert_eq!(run.energies.len(), run.steps);
        assert!(run.max_residual < crate::tdvp::RESIDUAL_TOL);
        assert_eq!(run.cond_warnings, 0);
    }

    // Most Xavier basins blow up under this flow; the guard must catch them
    // within a few hundred steps rather than looping to max_steps.
    #[test]
    fn ground_state_reports_divergent_basins() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta0 = net.init(1);
        let r = ground_state(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta0.view(),
            &GsOptions::default(),
        );
        match r {
            Err(e) => assert!(e.is_numerical(), "unexpected error kind: {e}"),
            Ok(run) => panic!("seed 1 unexpectedly converged to {}", run.energy),
        }
    }

    #[test]
    fn ground_state_not_converged_at_tiny_budget() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta0 = net.init(174);
        let r = ground_state(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta0.view(),
            &GsOptions {
                max_steps: 3,
                ..GsOptions::default()
            },
        );
        assert!(matches!(r, Err(Error::NotConverged { max_steps: 3, .. })));
    }

    #[test]
    fn ground_state_rejects_bad_step() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta0 = net.init(174);
        let r = ground_state(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta0.view(),
            &GsOptions {
                dt: -0.1,
                ..GsOptions::default()
            },
        );
        assert!(matches!(r, Err(Error::Invalid { what: "dt", .. })));
    }

    fn prepared_state() -> (Network, Grid, Array1<Complex64>) {
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
            &GsOptions::default(),
        )
        .unwrap();
        (net, grid, run.theta)
    }

    #[test]
    fn evolve_records_expected_grid_of_points() {
        let (net, grid, theta) = prepared_state();
        let ham = Hamiltonian::new(1.0, 0.0);
        let ev = evolve(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            &EvolveOptions {
                t_max: 2.0,
                record_every: 4,
                ..EvolveOptions::default()
            },
        )
        .unwrap();
        // Steps 0, 4, 8, 12, 16, 20 — the final step coincides with the grid.
        let steps: Vec<usize> = ev.points.iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![0, 4, 8, 12, 16, 20]);
        assert!((ev.points[1].t - 0.4).abs() < 1e-12);
        assert!(ev.points.iter().all(|p| p.energy.re.is_finite()));
        assert!(ev.max_residual < crate::tdvp::RESIDUAL_TOL);
        // The quenched coherent state keeps its width, so spot-check σ².
        for p in &ev.points {
            assert!((p.sigma2() - 0.5).abs() < 1e-2);
        }
    }

    #[test]
    fn evolve_final_step_recorded_off_grid() {
        let (net, grid, theta) = prepared_state();
        let ham = Hamiltonian::new(1.0, 0.0);
        let ev = evolve(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            &EvolveOptions {
                t_max: 1.0,
                record_every: 3,
                ..EvolveOptions::default()
            },
        )
        .unwrap();
        let steps: Vec<usize> = ev.points.iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 9, 10]);
    }

    #[test]
    fn evolve_validates_options() {
        let (net, grid, theta) = prepared_state();
        let ham = Hamiltonian::new(1.0, 0.0);
        let bad_record = EvolveOptions {
            record_every: 0,
            ..EvolveOptions::default()
        };
        assert!(evolve(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            &bad_record
        )
        .is_err());
        let bad_t = EvolveOptions {
            t_max: f64::NAN,
            ..EvolveOptions::default()
        };
        assert!(evolve(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            &bad_t
        )
        .is_err());
    }

    #[test]
    fn drift_metrics_on_synthetic_trajectory() {
        let mk = |e: f64, th: Complex64| TrajPoint {
            t: 0.0,
            step: 0,
            energy: Complex64::new(e, 0.0),
            norm: 1.0,
            x_mean: 0.0,
            x2_mean: 0.0,
            density: array![0.0],
            theta: array![th, Complex64::new(0.01, 0.0)],
            residual: 0.0,
            cond: 0.0,
            im_ratio: 0.0,
            max_theta_dot: 0.0,
        };
        let ev = Evolution {
            points: vec![
                mk(1.0, Complex64::new(2.0, 0.0)),
                mk(1.25, Complex64::new(2.5, 0.0)),
                mk(0.9, Complex64::new(2.0, 0.1)),
            ],
            max_residual: 0.0,
            max_cond: 0.0,
            max_im_ratio: 0.0,
            cond_warnings: 0,
        };
        assert!((ev.energy_drift() - 0.25).abs() < 1e-15);
        // Param 0: worst |Δθ|/|θ₀| = 0.5/2 = 0.25; param 1 is floored at 1.
        assert!((ev.max_param_drift() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn evolution_is_deterministic() {
        let (net, grid, theta) = prepared_state();
        let ham = Hamiltonian::new(1.0, 0.0);
        let opts = EvolveOptions {
            t_max: 1.0,
            ..EvolveOptions::default()
        };
        let a = evolve(&net, AmplitudeMap::ExpOfF, &ham, &grid, &theta.view(), &opts).unwrap();
        let b = evolve(&net, AmplitudeMap::ExpOfF, &ham, &grid, &theta.view(), &opts).unwrap();
        for (pa, pb) in a.points.iter().zip(b.points.iter()) {
            assert_eq!(pa.energy, pb.energy);
            assert_eq!(pa.theta, pb.theta);
            assert_eq!(pa.density, pb.density);
        }
    }
}
