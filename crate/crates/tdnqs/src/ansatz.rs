//! The variational wavefunction: a single-hidden-layer complex network.
//!
//! The network maps a grid point x to f(x) = Σ_j W2_j σ(W1_j x + b1_j) + b2
//! with all weights complex and σ the logistic sigmoid. Because f depends on
//! the parameters θ but never on their conjugates, the ansatz is holomorphic:
//! every derivative used by the equations of motion has a closed form, and no
//! autodiff is needed.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sigmoid denominators smaller than this trigger [`Error::SigmoidPole`].
pub const POLE_TOL: f64 = 1e-12;

/// Shape of the 1–h–1 network. Only a single hidden layer is supported; the
/// closed-form second derivatives below are specific to that depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Network {
    hidden: usize,
}

/// Value and derivatives of f at one grid point: f, ∂f/∂x, ∂²f/∂x², and the
/// parameter gradient ∂f/∂θ_μ in the layout [W1; b1; W2; b2].
#[derive(Debug, Clone)]
pub struct NetPoint {
    pub f: Complex64,
    pub fx: Complex64,
    pub fxx: Complex64,
    pub grad: Array1<Complex64>,
}

impl Network {
    pub fn new(hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Invalid {
                what: "network width",
                why: "hidden layer must have at least one unit".into(),
            });
        }
        Ok(Network { hidden })
    }

    /// The default 1–5–1 shape (16 complex parameters).
    pub fn default_shape() -> Self {
        Network { hidden: 5 }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Number of complex parameters: h weights in, h biases, h weights out,
    /// one output bias.
    pub fn param_count(&self) -> usize {
        3 * self.hidden + 1
    }

    /// Xavier-uniform initialization, deterministic in `seed`.
    ///
    /// Real and imaginary parts are drawn independently from
    /// U(−a, a) with a = √(6/(fan_in+fan_out)) / √2; halving the per-part
    /// variance makes the *complex* variance match the Xavier target
    /// 2/(fan_in+fan_out). Draw order is fixed (W1, b1, W2, b2; real part
    /// before imaginary) so a seed pins the parameter vector bit-for-bit.
    pub fn init(&self, seed: u64) -> Array1<Complex64> {
        let h = self.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (x >> 11) * 2^-53 gives a uniform double in [0, 1).
        let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        let a_in = (6.0 / (1.0 + h as f64)).sqrt() / 2f64.sqrt();
        let a_out = (6.0 / (h as f64 + 1.0)).sqrt() / 2f64.sqrt();
        let mut draw = |a: f64| {
            let re = -a + 2.0 * a * unit();
            let im = -a + 2.0 * a * unit();
            Complex64::new(re, im)
        };
        let mut theta = Array1::zeros(self.param_count());
        for j in 0..h {
            theta[j] = draw(a_in); // W1
        }
        for j in 0..h {
            theta[h + j] = draw(a_in); // b1
        }
        for j in 0..h {
            theta[2 * h + j] = draw(a_out); // W2
        }
        theta[3 * h] = draw(a_out); // b2
        theta
    }

    pub fn check_theta(&self, theta: &ArrayView1<Complex64>) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::Invalid {
                what: "parameter vector",
                why: format!(
                    "length {} does not match the 1-{}-1 network ({} parameters)",
                    theta.len(),
                    self.hidden,
                    self.param_count()
                ),
            });
        }
        Ok(())
    }

    /// Evaluate f and its derivatives at x.
    ///
    /// With z_j = W1_j x + b1_j and s_j = σ(z_j):
    ///   f   = Σ W2_j s_j + b2
    ///   f′  = Σ W2_j s_j(1−s_j) W1_j
    ///   f″  = Σ W2_j s_j(1−s_j)(1−2s_j) W1_j²
    ///   ∂f/∂W1_j = W2_j s_j(1−s_j) x,  ∂f/∂b1_j = W2_j s_j(1−s_j),
    ///   ∂f/∂W2_j = s_j,  ∂f/∂b2 = 1.
    pub fn eval(&self, theta: &ArrayView1<Complex64>, x: f64) -> Result<NetPoint> {
        self.check_theta(theta)?;
        let h = self.hidden;
        let (w1, rest) = theta.split_at(ndarray::Axis(0), h);
        let (b1, rest) = rest.split_at(ndarray::Axis(0), h);
        let (w2, b2) = rest.split_at(ndarray::Axis(0), h);
        let b2 = b2[0];

        let mut f = b2;
        let mut fx = Complex64::ZERO;
        let mut fxx = Complex64::ZERO;
        let mut grad = Array1::zeros(self.param_count());
        grad[3 * h] = Complex64::ONE;
        for j in 0..h {
            let z = w1[j] * x + b1[j];
            let denom = 1.0 + (-z).exp();
            if denom.norm() < POLE_TOL {
                return Err(Error::SigmoidPole {
                    z,
                    denom: denom.norm(),
                });
            }
            let s = denom.inv();
            let sp = s * (1.0 - s);
            let spp = sp * (1.0 - 2.0 * s);
            f += w2[j] * s;
            fx += w2[j] * sp * w1[j];
            fxx += w2[j] * spp * w1[j] * w1[j];
            grad[j] = w2[j] * sp * x;
            grad[h + j] = w2[j] * sp;
            grad[2 * h + j] = s;
        }
        Ok(NetPoint { f, fx, fxx, grad })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// A fixed, human-readable parameter set used by the frozen-value tests,
    /// in the [W1; b1; W2; b2] layout.
    fn frozen_theta() -> Array1<Complex64> {
        array![
            c(0.3, -0.2),
            c(-0.45, 0.1),
            c(0.2, 0.35),
            c(-0.15, -0.3),
            c(0.5, 0.05),
            c(0.1, 0.2),
            c(-0.25, -0.05),
            c(0.4, -0.1),
            c(0.0, 0.15),
            c(-0.3, 0.3),
            c(0.6, 0.1),
            c(-0.2, -0.4),
            c(0.35, 0.25),
            c(0.15, -0.2),
            c(-0.5, 0.45),
            c(0.05, -0.35),
        ]
    }

    #[test]
    fn shapes_and_counts() {
        let net = Network::default_shape();
        assert_eq!(net.hidden(), 5);
        assert_eq!(net.param_count(), 16);
        assert_eq!(Network::new(3).unwrap().param_count(), 10);
        assert!(Network::new(0).is_err());
    }

    #[test]
    fn check_theta_rejects_wrong_length() {
        let net = Network::default_shape();
        let short = Array1::<Complex64>::zeros(7);
        assert!(net.check_theta(&short.view()).is_err());
        let right = Array1::<Complex64>::zeros(16);
        assert!(net.check_theta(&right.view()).is_ok());
    }

    // Forward values computed independently at 50-digit precision (mpmath)
    // from the closed-form network definition, truncated to 22 digits. The
    // extra digits are the point: they record the reference to well past f64
    // and parse to the correctly rounded double.
    #[test]
    #[allow(clippy::excessive_precision)]
    fn frozen_forward_values() {
        let net = Network::default_shape();
        let th = frozen_theta();
        let cases = [
            (
                -3.7,
                c(0.3144506462523075932905, -0.6264511823216750593877),
                c(0.02222838328065874211488, 0.1239746116282280554976),
                c(-0.01685306546477487876926, -0.01815894506823752994571),
            ),
            (
                0.6,
                c(0.3120525020349830426743, -0.178234419794796336753),
                c(-0.01441206804556179538257, 0.1030671861916005108227),
                c(0.001270884163808679841073, 0.004019458015296127812558),
            ),
            (
                5.2,
                c(0.352072328289278627032, 0.2673651282375418245412),
                c(0.03460852335530494939893, 0.07314954973420448460557),
                c(0.004711887544466806272695, -0.01652701619517079262238),
            ),
        ];
        for (x, f, fx, fxx) in cases {
            let p = net.eval(&th.view(), x).unwrap();
            assert!((p.f - f).norm() < 1e-15 * f.norm(), "f at x={x}");
            assert!((p.fx - fx).norm() < 1e-14 * fx.norm(), "fx at x={x}");
            assert!((p.fxx - fxx).norm() < 1e-13 * fxx.norm(), "fxx at x={x}");
        }
    }

    // Spatial derivatives against central differences of the next-lower
    // derivative, 100 random draws, relative error < 1e-6.
    #[test]
    fn spatial_derivatives_match_finite_differences() {
        let net = Network::default_shape();
        let hstep = 1e-5;
        for seed in 0..100u64 {
            let th = net.init(seed);
            let x = -6.0 + 12.0 * (seed as f64 / 99.0);
            let p = net.eval(&th.view(), x).unwrap();
            let plus = net.eval(&th.view(), x + hstep).unwrap();
            let minus = net.eval(&th.view(), x - hstep).unwrap();
            let fx_fd = (plus.f - minus.f) / (2.0 * hstep);
            let fxx_fd = (plus.fx - minus.fx) / (2.0 * hstep);
            assert!(
                (p.fx - fx_fd).norm() < 1e-6 * p.fx.norm().max(1e-3),
                "seed {seed}: fx {} vs fd {}",
                p.fx,
                fx_fd
            );
            assert!(
                (p.fxx - fxx_fd).norm() < 1e-6 * p.fxx.norm().max(1e-3),
                "seed {seed}: fxx {} vs fd {}",
                p.fxx,
                fxx_fd
            );
        }
    }

    // Parameter gradient against central differences in each θ_μ. The
    // network is holomorphic, so a real step in θ_μ probes the full complex
    // derivative.
    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let net = Network::default_shape();
        let hstep = 1e-6;
        for seed in 0..100u64 {
            let th = net.init(seed);
            let x = 3.0 * ((seed as f64 * 0.77).sin());
            let p = net.eval(&th.view(), x).unwrap();
            for mu in 0..net.param_count() {
                let mut up = th.clone();
                let mut dn = th.clone();
                up[mu] += c(hstep, 0.0);
                dn[mu] -= c(hstep, 0.0);
                let fd = (net.eval(&up.view(), x).unwrap().f - net.eval(&dn.view(), x).unwrap().f)
                    / (2.0 * hstep);
                assert!(
                    (p.grad[mu] - fd).norm() < 1e-6 * p.grad[mu].norm().max(1e-3),
                    "seed {seed} mu {mu}: {} vs fd {}",
                    p.grad[mu],
                    fd
                );
            }
        }
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let net = Network::default_shape();
        let a = net.init(174);
        let b = net.init(174);
        assert_eq!(a, b);
        let other = net.init(175);
        assert!(a != other);
    }

    // Per-part bound |Re|,|Im| < a and complex variance 2a²/3 = 1/3 for the
    // default shape (a² = 3/(1+h) = 1/2), Monte-Carlo over 2000 seeds within
    // three standard errors.
    #[test]
    fn init_matches_xavier_statistics() {
        let net = Network::default_shape();
        let a = (6.0f64 / 6.0).sqrt() / 2.0f64.sqrt();
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..2000u64 {
            for v in net.init(seed).iter() {
                assert!(v.re.abs() <= a && v.im.abs() <= a);
                sum += v.norm_sqr();
                count += 1;
            }
        }
        let mean = sum / count as f64;
        // Var(|θ|²) = 28a⁴/45 − (2a²/3)² = 1/45 at a² = 1/2.
        let se = (1.0f64 / 45.0 / count as f64).sqrt();
        assert!(
            (mean - 1.0 / 3.0).abs() < 3.0 * se,
            "complex variance {mean} vs 1/3 (3σ = {})",
            3.0 * se
        );
    }

    #[test]
    fn sigmoid_pole_is_detected() {
        let net = Network::new(1).unwrap();
        // z = iπ puts the sigmoid denominator 1 + e^{−z} at zero.
        let th = array![
            Complex64::ZERO,
            c(0.0, std::f64::consts::PI),
            Complex64::ONE,
            Complex64::ZERO,
        ];
        match net.eval(&th.view(), 1.3) {
            Err(Error::SigmoidPole { denom, .. }) => assert!(denom < POLE_TOL),
            other => panic!("expected pole error, got {other:?}"),
        }
        // Nudged well off the pole the same shape evaluates fine.
        let th_ok = array![
            Complex64::ZERO,
            c(0.0, std::f64::consts::PI - 0.1),
            Complex64::ONE,
            Complex64::ZERO,
        ];
        assert!(net.eval(&th_ok.view(), 1.3).is_ok());
    }
}
