//! End-to-end behavior of the two drivers on the documented seed: deep
//! relaxation, stationary real-time evolution, and the solver's handling of
//! the converged-state residual floor.

use ndarray::Array1;
use num_complex::Complex64;
use tdnqs::oracle::max_abs_diff;
use tdnqs::prelude::*;
use tdnqs::tdvp::RESIDUAL_TOL;

fn deep_ground_state(tol: f64, max_steps: usize) -> (Network, Grid, Array1<Complex64>) {
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
            tol,
            max_steps,
            ..GsOptions::default()
        },
    )
    .unwrap();
    assert!(run.max_rise <= 0.0, "descent rose by {}", run.max_rise);
    (net, grid, run.theta)
}

// A deeply relaxed state evolved under its own Hamiltonian must go nowhere:
// energy to 1e-8, density to 1e-6 over t ∈ [0, 10]. With λ = i·1e-4 the
// shifted tensor stays well-conditioned, so every recorded solve residual
// also stays under the 1e-8 line.
#[test]
fn stationary_state_stays_stationary() {
    let (net, grid, theta) = deep_ground_state(1e-12, 40_000);
    let ham = Hamiltonian::new(1.0, 1.0);
    let ev = evolve(
        &net,
        AmplitudeMap::ExpOfF,
        &ham,
        &grid,
        &theta.view(),
        &EvolveOptions {
            t_max: 10.0,
            lambda: Complex64::new(0.0, 1e-4),
            ..EvolveOptions::default()
        },
    )
    .unwrap();
    assert!(ev.energy_drift() < 1e-8, "energy drift {}", ev.energy_drift());
    let d0 = ev.points[0].density.clone();
    let dens_drift = ev
        .points
        .iter()
        .map(|p| max_abs_diff(&p.density.view(), &d0.view()))
        .fold(0.0, f64::max);
    assert!(dens_drift < 1e-6, "density drift {dens_drift}");
    assert!(ev.max_residual < RESIDUAL_TOL, "residual {}", ev.max_residual);
    assert!(ev.max_im_ratio < 1e-6);
    // The converged packet lives far from the grid edge; the boundary
    // density staying at rounding level is what justifies the ±8 box.
    for p in &ev.points {
        assert!(p.density[0] < 1e-8 && p.density[grid.len() - 1] < 1e-8);
    }
}

// At very deep convergence the forces are rounding noise and the *relative*
// residual of the tangent solve cannot reach 1e-8 in double precision — the
// exactly-rounded solution already misses it. The solver must recognize the
// floor by its backward error (which stays at machine level) instead of
// aborting a physically perfect run.
#[test]
fn residual_floor_is_recognized_not_fatal() {
    let (net, grid, theta) = deep_ground_state(1e-14, 80_000);
    let ham = Hamiltonian::new(1.0, 1.0);
    let ev = evolve(
        &net,
        AmplitudeMap::ExpOfF,
        &ham,
        &grid,
        &theta.view(),
        &EvolveOptions {
            t_max: 2.0,
            lambda: Complex64::new(0.0, 1e-6),
            ..EvolveOptions::default()
        },
    )
    .unwrap();
    // The recorded metric honestly reports the floor…
    assert!(
        ev.max_residual > RESIDUAL_TOL,
        "expected a floored residual, saw {}",
        ev.max_residual
    );
    assert!(ev.max_residual < 1e-6, "floor too high: {}", ev.max_residual);
    // …while the run itself is as stationary as ever.
    assert!(ev.energy_drift() < 1e-9, "energy drift {}", ev.energy_drift());
    let d0 = ev.points[0].density.clone();
    for p in &ev.points {
        assert!(max_abs_diff(&p.density.view(), &d0.view()) < 1e-6);
    }
}

// The energies recorded on the way down must descend monotonically from the
// first step to the stopping point (the acceptance suite re-checks this with
// its own slack; here it is exact for the documented seed).
#[test]
fn relaxation_energies_descend_monotonically() {
    let net = Network::default_shape();
    let grid = Grid::default_grid();
    for x0 in [0.0, 1.0] {
        let ham = Hamiltonian::new(1.0, x0);
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
        for w in run.energies.windows(2) {
            assert!(w[1] <= w[0], "energy rose from {} to {}", w[0], w[1]);
        }
        assert!((run.energy - 0.5).abs() < 1e-6);
    }
}

// Both amplitude maps must relax their own documented basins: exp_of_f on
// seed 174, f_direct on seeds 0 and 8.
#[test]
fn documented_basins_converge_per_map() {
    let net = Network::default_shape();
    let grid = Grid::default_grid();
    let ham = Hamiltonian::new(1.0, 1.0);
    for (map, seed) in [
        (AmplitudeMap::ExpOfF, 174),
        (AmplitudeMap::FDirect, 0),
        (AmplitudeMap::FDirect, 8),
    ] {
        let theta0 = net.init(seed);
        let run = ground_state(&net, map, &ham, &grid, &theta0.view(), &GsOptions::default())
            .unwrap_or_else(|e| panic!("{} seed {seed}: {e}", map.name()));
        assert!(
            (run.energy - 0.5).abs() < 1e-6,
            "{} seed {seed}: E = {}",
            map.name(),
            run.energy
        );
    }
}
