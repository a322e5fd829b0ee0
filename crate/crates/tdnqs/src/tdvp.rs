//! Tangent-space projection: the quantum geometric tensor, the variational
//! forces, and the regularized equation of motion for the parameters.
//!
//! With O_μ(x) = ∂L/∂θ_μ and ⟨·⟩ the density-weighted grid average, the
//! centered covariances
//!
//!   S_νμ = ⟨O_ν* O_μ⟩ − ⟨O_ν*⟩⟨O_μ⟩
//!   F*_ν = ⟨O_ν* E_loc⟩ − ⟨O_ν*⟩⟨E_loc⟩
//!
//! drive the parameter flow (S + λ𝟙) θ̇ = −i F* in real time and
//! (S + λ𝟙) θ̇ = −F* in imaginary time (ħ = 1). λ is a small diagonal shift
//! that tames the near-singular directions of S; in real time it is taken
//! imaginary, which makes the shifted system deliberately non-Hermitian, so
//! nothing here ever assumes Hermitian structure of the solve.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::ansatz::Network;
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, one_norm, two_norm};
use crate::model::{local_energy, observables, sample, AmplitudeMap, Grid, Hamiltonian, Sampled};

/// Hard bound on the relative residual of every tangent-space solve.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Normwise backward-error bound under which a solve is accepted even when
/// the relative residual misses [`RESIDUAL_TOL`]. At a deeply converged
/// state the forces are pure rounding noise, so ‖rhs‖ can sit eight or more
/// orders below ‖S+λ𝟙‖·‖θ̇‖; then even the exactly-rounded solution carries a
/// relative residual of ε·‖A‖‖θ̇‖/‖rhs‖ ≳ 1e-8 and no double-precision
/// algorithm can do better. The backward error ‖r‖/(‖A‖‖θ̇‖+‖rhs‖) stays at
/// rounding level in exactly that situation and only there, so it separates
/// "the metric hit the representation floor" from "the solve went bad".
pub const BACKWARD_ERROR_TOL: f64 = 1e-14;
/// Condition numbers above this are reported as warnings.
pub const COND_WARN: f64 = 1e12;
/// Condition numbers above this abort the run.
pub const COND_ERROR: f64 = 1e14;
/// Hard bound on |Im⟨H⟩|/|⟨H⟩| during real-time evolution.
pub const REALITY_TOL: f64 = 1e-6;

/// Which Schrödinger flow the parameters follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionMode {
    /// Unitary dynamics, θ̇ = −i (S+λ)⁻¹ F*.
    RealTime,
    /// Energy descent towards the ground state, θ̇ = −(S+λ)⁻¹ F*.
    ImaginaryTime,
}

/// Quantum geometric tensor from a sampled state (Hermitian by construction
/// up to rounding).
pub fn qgt(s: &Sampled) -> Array2<Complex64> {
    let (n, m) = s.lj.dim();
    let mut mean = Array1::<Complex64>::zeros(m);
    for i in 0..n {
        for mu in 0..m {
            mean[mu] += s.rho[i] * s.lj[(i, mu)];
        }
    }
    let mut out = Array2::zeros((m, m));
    for i in 0..n {
        let w = s.rho[i];
        for nu in 0..m {
            let onu = (s.lj[(i, nu)] - mean[nu]).conj() * w;
            for mu in 0..m {
                out[(nu, mu)] += onu * (s.lj[(i, mu)] - mean[mu]);
            }
        }
    }
    out
}

/// Variational forces F*_ν from a sampled state and its local energies.
pub fn forces(s: &Sampled, eloc: &ArrayView1<Complex64>) -> Array1<Complex64> {
    let (n, m) = s.lj.dim();
    let mut mean = Array1::<Complex64>::zeros(m);
    let mut ebar = Complex64::ZERO;
    for i in 0..n {
        for mu in 0..m {
            mean[mu] += s.rho[i] * s.lj[(i, mu)];
        }
        ebar += s.rho[i] * eloc[i];
    }
    let mut f = Array1::zeros(m);
    for i in 0..n {
        let de = eloc[i] - ebar;
        for nu in 0..m {
            f[nu] += s.rho[i] * (s.lj[(i, nu)] - mean[nu]).conj() * de;
        }
    }
    f
}

/// One tangent-space solve: θ̇ plus the diagnostics the drivers track.
#[derive(Debug, Clone)]
pub struct EomOutput {
    pub theta_dot: Array1<Complex64>,
    pub energy: Complex64,
    /// Relative residual ‖(S+λ)θ̇ − rhs‖/‖rhs‖ of the solve.
    pub residual: f64,
    /// Exact 1-norm condition number of S + λ𝟙.
    pub cond: f64,
    /// True when `cond` exceeded [`COND_WARN`] (run continues).
    pub cond_warning: bool,
}

/// Assemble and solve the equation of motion at one point in parameter space.
pub fn equation_of_motion(
    net: &Network,
    map: AmplitudeMap,
    ham: &Hamiltonian,
    grid: &Grid,
    theta: &ArrayView1<Complex64>,
    lambda: Complex64,
    mode: EvolutionMode,
) -> Result<EomOutput> {
    let s = sample(net, map, theta, grid)?;
    let eloc = local_energy(&s, ham, grid);
    let obs = observables(&s, ham, grid);
    if mode == EvolutionMode::RealTime {
        let ratio = obs.energy.im.abs() / obs.energy.norm().max(f64::MIN_POSITIVE);
        if ratio > REALITY_TOL {
            return Err(Error::EnergyNotReal {
                ratio,
                limit: REALITY_TOL,
            });
        }
    }

    let mut a = qgt(&s);
    let m = a.nrows();
    for k in 0..m {
        a[(k, k)] += lambda;
    }
    let f = forces(&s, &eloc.view());
    let rhs = match mode {
        EvolutionMode::RealTime => f.mapv(|v| -Complex64::I * v),
        EvolutionMode::ImaginaryTime => f.mapv(|v| -v),
    };

    let lu = lu_factor(&a.view())?;
    let mut theta_dot = lu.solve(&rhs.view());
    // A couple of rounds of iterative refinement: a single LU solve leaves a
    // relative residual of order ε·cond(A), which crosses 1e-8 exactly when
    // the rhs is force-free (converged states) and the shifted tensor is at
    // its most ill-conditioned. Refinement pushes it back to rounding level.
    let rhs_norm = two_norm(&rhs.view());
    let mut resid_vec = &rhs - &a.dot(&theta_dot);
    for _ in 0..3 {
        if two_norm(&resid_vec.view()) <= RESIDUAL_TOL / 100.0 * rhs_norm {
            break;
        }
        let correction = lu.solve(&resid_vec.view());
        theta_dot += &correction;
        resid_vec = &rhs - &a.dot(&theta_dot);
    }
    let resid_norm = two_norm(&resid_vec.view());
    let residual = if rhs_norm > 0.0 {
        resid_norm / rhs_norm
    } else {
        0.0
    };
    let a_norm = one_norm(&a.view());
    if residual > RESIDUAL_TOL {
        let backward =
            resid_norm / (a_norm * two_norm(&theta_dot.view()) + rhs_norm).max(f64::MIN_POSITIVE);
        if backward > BACKWARD_ERROR_TOL {
            return Err(Error::SolveResidual {
                residual,
                tol: RESIDUAL_TOL,
            });
        }
    }
    let cond = a_norm * lu.inverse_one_norm();
    if cond > COND_ERROR {
        return Err(Error::IllConditioned {
            cond,
            limit: COND_ERROR,
        });
    }
    Ok(EomOutput {
        theta_dot,
        energy: obs.energy,
        residual,
        cond,
        cond_warning: cond > COND_WARN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sampled_state(map: AmplitudeMap, seed: u64) -> Sampled {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let theta = net.init(seed);
        sample(&net, map, &theta.view(), &grid).unwrap()
    }

    fn both_maps() -> [AmplitudeMap; 2] {
        [AmplitudeMap::ExpOfF, AmplitudeMap::FDirect]
    }

    #[test]
    fn qgt_is_hermitian() {
        for map in both_maps() {
            for seed in [0u64, 7, 174] {
                let s = sampled_state(map, seed);
                let q = qgt(&s);
                let scale = crate::linalg::one_norm(&q.view());
                for i in 0..q.nrows() {
                    for j in 0..q.ncols() {
                        let asym = (q[(i, j)] - q[(j, i)].conj()).norm();
                        assert!(
                            asym < 1e-10 * scale,
                            "{} seed {seed} ({i},{j}): {asym:e}",
                            map.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn qgt_is_positive_semidefinite() {
        for map in both_maps() {
            for seed in [0u64, 7, 174] {
                let s = sampled_state(map, seed);
                let q = qgt(&s);
                let m = q.nrows();
                // Hermitize before the eigensolve; the asymmetry is rounding-level.
                let herm =
                    DMatrix::from_fn(m, m, |i, j| (q[(i, j)] + q[(j, i)].conj()) * 0.5);
                let eigs = herm.symmetric_eigenvalues();
                let max = eigs.iter().cloned().fold(0.0f64, f64::max);
                let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(
                    min > -1e-8 * max,
                    "{} seed {seed}: λ_min = {min:e}, λ_max = {max:e}",
                    map.name()
                );
            }
        }
    }

    // S and F* are built from centered tangent vectors, so shifting every
    // O_μ(x) by an x-independent constant (a gauge change of the
    // log-amplitude) must leave both untouched.
    #[test]
    fn gauge_shift_leaves_qgt_and_forces_invariant() {
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        for map in both_maps() {
            let mut s = sampled_state(map, 174);
            let eloc = local_energy(&s, &ham, &grid);
            let q0 = qgt(&s);
            let f0 = forces(&s, &eloc.view());
            let m = s.lj.ncols();
            for mu in 0..m {
                let shift = Complex64::new(0.3 + mu as f64, -1.7 * mu as f64);
                for i in 0..s.lj.nrows() {
                    s.lj[(i, mu)] += shift;
                }
            }
            let q1 = qgt(&s);
            let f1 = forces(&s, &eloc.view());
            let qscale = crate::linalg::one_norm(&q0.view());
            let fscale = two_norm(&f0.view());
            for i in 0..m {
                assert!((f0[i] - f1[i]).norm() < 1e-10 * fscale.max(1e-12));
                for j in 0..m {
                    assert!(
                        (q0[(i, j)] - q1[(i, j)]).norm() < 1e-10 * qscale,
                        "{} ({i},{j})",
                        map.name()
                    );
                }
            }
        }
    }

    // The production accumulators against a direct transcription of the
    // centered-covariance definitions, computed term by term.
    #[test]
    fn qgt_and_forces_match_brute_force_definitions() {
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 0.0);
        for map in both_maps() {
            let s = sampled_state(map, 174);
            let eloc = local_energy(&s, &ham, &grid);
            let (n, m) = s.lj.dim();
            let q = qgt(&s);
            let f = forces(&s, &eloc.view());

            let avg = |g: &dyn Fn(usize) -> Complex64| -> Complex64 {
                (0..n).map(|i| s.rho[i] * g(i)).sum()
            };
            let qscale = crate::linalg::one_norm(&q.view());
            for nu in 0..m {
                let onu_mean = avg(&|i| s.lj[(i, nu)]);
                let de_mean = avg(&|i| eloc[i]);
                let brute_f =
                    avg(&|i| s.lj[(i, nu)].conj() * eloc[i]) - onu_mean.conj() * de_mean;
                assert!(
                    (f[nu] - brute_f).norm() < 1e-12 * two_norm(&f.view()).max(1.0),
                    "{} F[{nu}]",
                    map.name()
                );
                for mu in 0..m {
                    let omu_mean = avg(&|i| s.lj[(i, mu)]);
                    let brute_s = avg(&|i| s.lj[(i, nu)].conj() * s.lj[(i, mu)])
                        - onu_mean.conj() * omu_mean;
                    assert!(
                        (q[(nu, mu)] - brute_s).norm() < 1e-12 * qscale.max(1.0),
                        "{} S[{nu},{mu}]",
                        map.name()
                    );
                }
            }
        }
    }

    // With the same shift the two modes solve the same system up to the
    // factor −i on the right-hand side, so θ̇_real = i·θ̇_imag
    // (θ̇_imag = −(S+λ)⁻¹F*, θ̇_real = −i(S+λ)⁻¹F* = i·θ̇_imag).
    #[test]
    fn real_time_velocity_is_rotated_imaginary_time_velocity() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta = net.init(174);
        let lambda = Complex64::new(1e-4, 0.0);
        let im = equation_of_motion(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            lambda,
            EvolutionMode::ImaginaryTime,
        )
        .unwrap();
        // A fresh Xavier draw usually has Im⟨H⟩ too large for the real-time
        // reality guard, so solve the rotated system through the same path by
        // checking the defining identity instead of calling the driver twice.
        let s = sample(&net, AmplitudeMap::ExpOfF, &theta.view(), &grid).unwrap();
        let eloc = local_energy(&s, &ham, &grid);
        let f = forces(&s, &eloc.view());
        let mut a = qgt(&s);
        for k in 0..a.nrows() {
            a[(k, k)] += lambda;
        }
        let rhs_rt = f.mapv(|v| -Complex64::I * v);
        let lhs_rt = a.dot(&im.theta_dot.mapv(|v| Complex64::I * v));
        let diff = &lhs_rt - &rhs_rt;
        assert!(two_norm(&diff.view()) < 1e-7 * two_norm(&rhs_rt.view()));
    }

    // Imaginary-time flow descends: dE/dt = 2·Re[F*†θ̇] = −2·Re[F*†(S+λ)⁻¹F*]
    // ≤ 0 for PSD S and real λ ≥ 0.
    #[test]
    fn imaginary_time_velocity_descends() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        for map in both_maps() {
            for seed in [0u64, 7, 174] {
                let theta = net.init(seed);
                let out = equation_of_motion(
                    &net,
                    map,
                    &ham,
                    &grid,
                    &theta.view(),
                    Complex64::new(1e-4, 0.0),
                    EvolutionMode::ImaginaryTime,
                )
                .unwrap();
                let s = sample(&net, map, &theta.view(), &grid).unwrap();
                let eloc = local_energy(&s, &ham, &grid);
                let f = forces(&s, &eloc.view());
                let descent: f64 = f
                    .iter()
                    .zip(out.theta_dot.iter())
                    .map(|(fi, ti)| (fi.conj() * ti).re)
                    .sum();
                let scale = two_norm(&f.view()) * two_norm(&out.theta_dot.view());
                assert!(
                    descent <= 1e-12 * scale,
                    "{} seed {seed}: Re[F†θ̇] = {descent:e}",
                    map.name()
                );
            }
        }
    }

    #[test]
    fn healthy_solve_reports_small_residual_and_cond() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let theta = net.init(174);
        let out = equation_of_motion(
            &net,
            AmplitudeMap::ExpOfF,
            &ham,
            &grid,
            &theta.view(),
            Complex64::new(1e-4, 0.0),
            EvolutionMode::ImaginaryTime,
        )
        .unwrap();
        assert!(out.residual < RESIDUAL_TOL);
        assert!(out.cond > 1.0 && out.cond < COND_WARN);
        assert!(!out.cond_warning);
        assert!(out.theta_dot.iter().all(|v| v.is_finite()));
    }

    // Fresh Xavier draws have O(1) boundary truncation and therefore a
    // complex ⟨H⟩; real-time evolution must refuse such states loudly.
    #[test]
    fn real_time_rejects_complex_energy() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let mut seen = false;
        for seed in 0..20u64 {
            let theta = net.init(seed);
            let r = equation_of_motion(
                &net,
                AmplitudeMap::FDirect,
                &ham,
                &grid,
                &theta.view(),
                Complex64::new(0.0, 1e-6),
                EvolutionMode::RealTime,
            );
            if let Err(Error::EnergyNotReal { ratio, limit }) = r {
                assert!(ratio > limit);
                seen = true;
                break;
            }
        }
        assert!(seen, "no seed in 0..20 tripped the reality guard");
    }
}
