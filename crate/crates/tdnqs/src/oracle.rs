//! Closed-form reference solutions for the harmonic-oscillator protocols and
//! the error metrics used to compare runs against them.
//!
//! Both laws follow from the exact propagation of Gaussian wavepackets in a
//! harmonic trap. A displaced ground state keeps its shape and its center
//! follows the classical trajectory; a frequency quench leaves the packet
//! centered but makes its width breathe between the two trap scales. The
//! breathing width law is cross-validated against an independent split-step
//! Fourier propagator in the test suite.

use ndarray::{Array1, ArrayView1};

/// Normalized Gaussian density with the given center and variance.
pub fn gaussian_density(x: &ArrayView1<f64>, center: f64, var: f64) -> Array1<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    x.mapv(|xi| norm * (-(xi - center) * (xi - center) / (2.0 * var)).exp())
}

/// Center of a coherent state released with amplitude `amp` at t = 0:
/// c(t) = amp · cos(ωt).
pub fn coherent_center(t: f64, omega: f64, amp: f64) -> f64 {
    amp * (omega * t).cos()
}

/// Density variance of the trap ground state, σ² = 1/(2ω).
pub fn ground_state_sigma2(omega: f64) -> f64 {
    1.0 / (2.0 * omega)
}

/// Density of a coherent state oscillating in a trap of frequency `omega`
/// with initial displacement `amp`: a rigid Gaussian on the classical path.
pub fn coherent_density(x: &ArrayView1<f64>, t: f64, omega: f64, amp: f64) -> Array1<f64> {
    gaussian_density(x, coherent_center(t, omega, amp), ground_state_sigma2(omega))
}

/// Width law after a frequency quench ω₀ → ω of a centered ground state:
/// σ²(t) = σ₀² cos²(ωt) + sin²(ωt)/(4σ₀²ω²), with σ₀² = 1/(2ω₀).
pub fn breathing_sigma2(t: f64, omega0: f64, omega: f64) -> f64 {
    let s0 = ground_state_sigma2(omega0);
    let (sin, cos) = (omega * t).sin_cos();
    s0 * cos * cos + sin * sin / (4.0 * s0 * omega * omega)
}

/// Density of the breathing mode: a centered Gaussian with the width law
/// above.
pub fn breathing_density(x: &ArrayView1<f64>, t: f64, omega0: f64, omega: f64) -> Array1<f64> {
    gaussian_density(x, 0.0, breathing_sigma2(t, omega0, omega))
}

/// Largest pointwise absolute difference between two grids of values.
pub fn max_abs_diff(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    assert_eq!(a.len(), b.len(), "comparing grids of different sizes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
