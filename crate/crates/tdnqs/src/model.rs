//! Physical model: the grid, the Hamiltonian, and everything derived from a
//! parameter vector sampled on the grid (log-amplitudes, densities, local
//! energies, expectation values).
//!
//! The wavefunction never exists as a normalized vector; all expectation
//! values are trapezoid-rule integrals weighted by the normalized density,
//! evaluated with a max-shift so that only *ratios* of |Ψ|² ever appear.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::ansatz::Network;
use crate::error::{Error, Result};

/// Uniform spatial grid with trapezoid quadrature weights.
#[derive(Debug, Clone)]
pub struct Grid {
    x: Array1<f64>,
    w: Array1<f64>,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Invalid {
                what: "grid bounds",
                why: format!("need finite x_min < x_max, got [{x_min}, {x_max}]"),
            });
        }
        if n < 2 {
            return Err(Error::Invalid {
                what: "grid size",
                why: format!("need at least 2 points, got {n}"),
            });
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        let x = Array1::from_iter((0..n).map(|i| x_min + h * i as f64));
        let mut w = Array1::from_elem(n, h);
        w[0] = h / 2.0;
        w[n - 1] = h / 2.0;
        Ok(Grid { x, w })
    }

    /// The working grid used throughout: [−8, 8] with 100 points.
    pub fn default_grid() -> Self {
        Grid::new(-8.0, 8.0, 100).expect("default grid is valid")
    }

    pub fn x(&self) -> &Array1<f64> {
        &self.x
    }

    /// Trapezoid weights [h/2, h, …, h, h/2].
    pub fn weights(&self) -> &Array1<f64> {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Harmonic trap H = −½ ∂² + ½ ω² (x − x₀)², in units ħ = m = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    pub omega: f64,
    pub x0: f64,
}

impl Hamiltonian {
    pub fn new(omega: f64, x0: f64) -> Self {
        Hamiltonian { omega, x0 }
    }

    pub fn potential(&self, x: f64) -> f64 {
        0.5 * self.omega * self.omega * (x - self.x0) * (x - self.x0)
    }

    /// Exact ground-state energy ½ħω.
    pub fn ground_energy(&self) -> f64 {
        0.5 * self.omega
    }
}

/// How the network output becomes the log-amplitude L = log Ψ.
///
/// `ExpOfF` (the default) applies one more exponential, L = e^f; `FDirect`
/// uses the output as the log-amplitude itself, L = f. Both are holomorphic,
/// so the tangent-space machinery is identical — only the pointwise values
/// and the parameter Jacobian change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMap {
    #[default]
    ExpOfF,
    FDirect,
}

impl AmplitudeMap {
    pub fn name(&self) -> &'static str {
        match self {
            AmplitudeMap::ExpOfF => "exp_of_f",
            AmplitudeMap::FDirect => "f_direct",
        }
    }
}

impl std::str::FromStr for AmplitudeMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_of_f" => Ok(AmplitudeMap::ExpOfF),
            "f_direct" => Ok(AmplitudeMap::FDirect),
            other => Err(Error::Invalid {
                what: "amplitude map",
                why: format!("unknown value '{other}' (expected exp_of_f or f_direct)"),
            }),
        }
    }
}

/// Log-amplitude data for one parameter vector sampled on the whole grid:
/// L, ∂L/∂x, ∂²L/∂x² per point, the Jacobian ∂L/∂θ_μ (rows = grid points),
/// and the normalized quadrature-weighted density `rho` (sums to 1).
#[derive(Debug, Clone)]
pub struct Sampled {
    pub l: Array1<Complex64>,
    pub lx: Array1<Complex64>,
    pub lxx: Array1<Complex64>,
    pub lj: Array2<Complex64>,
    pub rho: Array1<f64>,
}

/// Evaluate the ansatz on every grid point and form the density weights.
pub fn sample(
    net: &Network,
    map: AmplitudeMap,
    theta: &ArrayView1<Complex64>,
    grid: &Grid,
) -> Result<Sampled> {
    let n = grid.len();
    let m = net.param_count();
    let mut l = Array1::zeros(n);
    let mut lx = Array1::zeros(n);
    let mut lxx = Array1::zeros(n);
    let mut lj = Array2::zeros((n, m));
    for (i, &xi) in grid.x().iter().enumerate() {
        let p = net.eval(theta, xi)?;
        let (li, lxi, lxxi) = match map {
            AmplitudeMap::FDirect => (p.f, p.fx, p.fxx),
            AmplitudeMap::ExpOfF => {
                let e = p.f.exp();
                // L = e^f: chain rule gives L′ = e^f f′, L″ = e^f (f″ + f′²).
                (e, e * p.fx, e * (p.fxx + p.fx * p.fx))
            }
        };
        l[i] = li;
        lx[i] = lxi;
        lxx[i] = lxxi;
        let scale = match map {
            AmplitudeMap::FDirect => Complex64::ONE,
            AmplitudeMap::ExpOfF => l[i],
        };
        for mu in 0..m {
            lj[(i, mu)] = scale * p.grad[mu];
        }
    }
    for (what, arr) in [("log-amplitude", &l), ("dL/dx", &lx), ("d2L/dx2", &lxx)] {
        if arr.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite {
                what,
                context: "sampling the ansatz on the grid",
            });
        }
    }
    if lj.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite {
            what: "parameter Jacobian",
            context: "sampling the ansatz on the grid",
        });
    }
    let rho = rho_weights(&l.view(), grid)?;
    Ok(Sampled { l, lx, lxx, lj, rho })
}

/// Normalized expectation weights ρ_i ∝ w_i |Ψ(x_i)|², computed from the log
/// amplitudes alone. The largest Re L is subtracted before exponentiating so
/// arbitrarily scaled (even heavily overflowing) amplitudes stay usable.
pub fn rho_weights(l: &ArrayView1<Complex64>, grid: &Grid) -> Result<Array1<f64>> {
    let shift = l.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::NonFinite {
            what: "log-amplitude",
            context: "normalizing the density",
        });
    }
    let mut rho = Array1::zeros(l.len());
    for i in 0..l.len() {
        rho[i] = grid.weights()[i] * (2.0 * (l[i].re - shift)).exp();
    }
    let total: f64 = rho.sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFinite {
            what: "density normalization",
            context: "normalizing the density",
        });
    }
    rho /= total;
    Ok(rho)
}

/// Continuum-normalized density |Ψ(x_i)|² / ∫|Ψ|² dx at the grid points.
pub fn density(s: &Sampled, grid: &Grid) -> Array1<f64> {
    let mut d = s.rho.clone();
    d /= grid.weights();
    d
}

/// Local energy E_loc(x_i) = −½(L″ + (L′)²) + V(x_i).
pub fn local_energy(s: &Sampled, ham: &Hamiltonian, grid: &Grid) -> Array1<Complex64> {
    let n = grid.len();
    let mut e = Array1::zeros(n);
    for i in 0..n {
        let kinetic = -0.5 * (s.lxx[i] + s.lx[i] * s.lx[i]);
        e[i] = kinetic + ham.potential(grid.x()[i]);
    }
    e
}

/// ⟨H⟩, ⟨x⟩ and ⟨x²⟩ in one pass.
#[derive(Debug, Clone, Copy)]
pub struct Observables {
    pub energy: Complex64,
    pub x_mean: f64,
    pub x2_mean: f64,
}

impl Observables {
    /// Density variance σ² = ⟨x²⟩ − ⟨x⟩².
    pub fn sigma2(&self) -> f64 {
        self.x2_mean - self.x_mean * self.x_mean
    }
}

pub fn observables(s: &Sampled, ham: &Hamiltonian, grid: &Grid) -> Observables {
    let eloc = local_energy(s, ham, grid);
    let mut energy = Complex64::ZERO;
    let mut x_mean = 0.0;
    let mut x2_mean = 0.0;
    for i in 0..grid.len() {
        energy += s.rho[i] * eloc[i];
        x_mean += s.rho[i] * grid.x()[i];
        x2_mean += s.rho[i] * grid.x()[i] * grid.x()[i];
    }
    Observables {
        energy,
        x_mean,
        x2_mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    /// Exact harmonic ground state ψ ∝ exp(−ω(x−x₀)²/2) as log-amplitude
    /// data, bypassing any network. `lj` is a dummy single column.
    fn gaussian_sampled(ham: &Hamiltonian, grid: &Grid) -> Sampled {
        let n = grid.len();
        let mut l = Array1::zeros(n);
        let mut lx = Array1::zeros(n);
        let mut lxx = Array1::zeros(n);
        for (i, &x) in grid.x().iter().enumerate() {
            let d = x - ham.x0;
            l[i] = Complex64::new(-0.5 * ham.omega * d * d, 0.0);
            lx[i] = Complex64::new(-ham.omega * d, 0.0);
            lxx[i] = Complex64::new(-ham.omega, 0.0);
        }
        let rho = rho_weights(&l.view(), grid).unwrap();
        Sampled {
            l,
            lx,
            lxx,
            lj: Array2::zeros((n, 1)),
            rho,
        }
    }

    #[test]
    fn default_grid_trapezoid_weights() {
        let grid = Grid::default_grid();
        assert_eq!(grid.len(), 100);
        let h = 16.0 / 99.0;
        assert!((grid.weights()[0] - h / 2.0).abs() < 1e-15);
        assert!((grid.weights()[99] - h / 2.0).abs() < 1e-15);
        for i in 1..99 {
            assert!((grid.weights()[i] - h).abs() < 1e-15);
        }
        let total: f64 = grid.weights().sum();
        assert!((total - 16.0).abs() < 1e-12);
        assert!((grid.x()[0] + 8.0).abs() < 1e-15);
        assert!((grid.x()[99] - 8.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(2.0, -2.0, 10).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 10).is_err());
        assert!(Grid::new(-1.0, 1.0, 2).is_ok());
    }

    // On the exact Gaussian the local energy is ω/2 identically: the x² terms
    // of −½(L″+L′²) and the potential cancel pointwise.
    #[test]
    fn gaussian_local_energy_is_flat() {
        let grid = Grid::default_grid();
        for (omega, x0) in [(1.0, 0.0), (1.0, 1.0), (0.5, 0.0)] {
            let ham = Hamiltonian::new(omega, x0);
            let s = gaussian_sampled(&ham, &grid);
            let e = local_energy(&s, &ham, &grid);
            for (i, v) in e.iter().enumerate() {
                assert!(
                    (v - ham.ground_energy()).norm() < 1e-12,
                    "ω={omega} x₀={x0} i={i}: {v}"
                );
            }
        }
    }

    // Trapezoid quadrature of a centered Gaussian is superalgebraically
    // accurate, so the analytic moments come out far below 1e-8 even on the
    // coarse 100-point grid.
    #[test]
    fn gaussian_moments_match_analytic() {
        let grid = Grid::default_grid();
        for (omega, x0) in [(1.0, 0.0), (1.0, 1.0), (0.5, 0.0)] {
            let ham = Hamiltonian::new(omega, x0);
            let s = gaussian_sampled(&ham, &grid);
            let obs = observables(&s, &ham, &grid);
            assert!((obs.energy.re - 0.5 * omega).abs() < 1e-12);
            assert!(obs.energy.im.abs() < 1e-15);
            assert!((obs.x_mean - x0).abs() < 1e-9, "⟨x⟩ = {}", obs.x_mean);
            let x2 = x0 * x0 + 0.5 / omega;
            assert!((obs.x2_mean - x2).abs() < 1e-8, "⟨x²⟩ = {}", obs.x2_mean);
            assert!((obs.sigma2() - 0.5 / omega).abs() < 1e-8);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 1.0);
        let s = gaussian_sampled(&ham, &grid);
        let d = density(&s, &grid);
        let integral: f64 = d
            .iter()
            .zip(grid.weights().iter())
            .map(|(di, wi)| di * wi)
            .sum();
        assert!((integral - 1.0).abs() < 1e-12);
        // Pointwise the continuum density matches ρ_gs(x) = √(ω/π) e^{−ω(x−x₀)²}.
        let norm = (1.0 / std::f64::consts::PI).sqrt();
        for (i, &x) in grid.x().iter().enumerate() {
            let exact = norm * (-(x - 1.0) * (x - 1.0)).exp();
            assert!((d[i] - exact).abs() < 1e-9, "x = {x}");
        }
    }

    // The max-shift keeps ρ finite for amplitudes that would overflow e^{2L}
    // by hundreds of orders, and a constant offset in L cancels exactly.
    #[test]
    fn rho_weights_survive_extreme_scales() {
        let grid = Grid::default_grid();
        let ham = Hamiltonian::new(1.0, 0.0);
        let base = gaussian_sampled(&ham, &grid);
        let shifted: Array1<Complex64> = base.l.mapv(|v| v + Complex64::new(400.0, -3.0));
        let rho = rho_weights(&shifted.view(), &grid).unwrap();
        assert!(rho.iter().all(|r| r.is_finite()));
        assert!((rho.sum() - 1.0).abs() < 1e-12);
        // Adding 400 costs the low bits of L (ulp ≈ 6e−14), which the
        // exponential turns into a matching relative error in ρ.
        for i in 0..grid.len() {
            assert!((rho[i] - base.rho[i]).abs() < 1e-13);
        }
    }

    // Under L = e^f every sampled quantity is the f_direct one pushed through
    // the chain rule; checking the relation catches transform bugs in either
    // branch.
    #[test]
    fn amplitude_maps_are_chain_rule_consistent() {
        let net = Network::default_shape();
        let grid = Grid::default_grid();
        let th = net.init(174);
        let fd = sample(&net, AmplitudeMap::FDirect, &th.view(), &grid).unwrap();
        let ex = sample(&net, AmplitudeMap::ExpOfF, &th.view(), &grid).unwrap();
        for i in 0..grid.len() {
            let e = fd.l[i].exp();
            assert!((ex.l[i] - e).norm() < 1e-14 * e.norm());
            assert!((ex.lx[i] - e * fd.lx[i]).norm() < 1e-13 * ex.lx[i].norm().max(1e-12));
            let lxx = e * (fd.lxx[i] + fd.lx[i] * fd.lx[i]);
            assert!((ex.lxx[i] - lxx).norm() < 1e-13 * lxx.norm().max(1e-12));
            for mu in 0..net.param_count() {
                let lj = e * fd.lj[(i, mu)];
                assert!((ex.lj[(i, mu)] - lj).norm() < 1e-13 * lj.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn sample_rejects_overflowing_amplitudes() {
        let net = Network::new(1).unwrap();
        let grid = Grid::default_grid();
        // f ≡ 800 ⇒ L = e^800 overflows under exp_of_f.
        let th = ndarray::array![
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(800.0, 0.0),
        ];
        match sample(&net, AmplitudeMap::ExpOfF, &th.view(), &grid) {
            Err(Error::NonFinite { .. }) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
        // The same parameters are fine when f is the log-amplitude itself:
        // the max-shift removes the constant.
        assert!(sample(&net, AmplitudeMap::FDirect, &th.view(), &grid).is_ok());
    }

    #[test]
    fn amplitude_map_names_round_trip() {
        for map in [AmplitudeMap::ExpOfF, AmplitudeMap::FDirect] {
            assert_eq!(map.name().parse::<AmplitudeMap>().unwrap(), map);
        }
        assert!("psi".parse::<AmplitudeMap>().is_err());
        assert_eq!(AmplitudeMap::default(), AmplitudeMap::ExpOfF);
    }

    #[test]
    fn hamiltonian_potential_and_ground_energy() {
        let ham = Hamiltonian::new(0.5, 1.0);
        assert!((ham.potential(3.0) - 0.5 * 0.25 * 4.0).abs() < 1e-15);
        assert!((ham.ground_energy() - 0.25).abs() < 1e-15);
    }
}
