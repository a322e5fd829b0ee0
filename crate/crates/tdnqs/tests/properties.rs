//! Randomized invariants that should hold for *any* input, not just the
//! curated seeds: density-weight normalization and LU solve quality.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;

use tdnqs::linalg::{lu_factor, two_norm};
use tdnqs::model::{rho_weights, Grid};

fn finite_complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Whatever the log-amplitudes are — including ones spanning hundreds of
    // orders of magnitude — the normalized weights are a probability vector.
    #[test]
    fn rho_weights_form_a_distribution(
        l in proptest::collection::vec(finite_complex(300.0), 100)
    ) {
        let grid = Grid::default_grid();
        let l = Array1::from_vec(l);
        let rho = rho_weights(&l.view(), &grid).unwrap();
        prop_assert!(rho.iter().all(|r| r.is_finite() && *r >= 0.0));
        prop_assert!((rho.sum() - 1.0).abs() < 1e-12);
    }

    // Imaginary parts of L never influence the weights: ρ sees only |Ψ|².
    #[test]
    fn rho_weights_ignore_phases(
        l in proptest::collection::vec(finite_complex(10.0), 100)
    ) {
        let grid = Grid::default_grid();
        let l = Array1::from_vec(l);
        let stripped = l.mapv(|v| Complex64::new(v.re, 0.0));
        let a = rho_weights(&l.view(), &grid).unwrap();
        let b = rho_weights(&stripped.view(), &grid).unwrap();
        for i in 0..a.len() {
            prop_assert!((a[i] - b[i]).abs() < 1e-15);
        }
    }

    // Diagonally dominant systems are safely far from singular; the solve
    // must reconstruct the right-hand side to near machine precision.
    #[test]
    fn lu_solves_diagonally_dominant_systems(
        entries in proptest::collection::vec(finite_complex(1.0), 64),
        rhs in proptest::collection::vec(finite_complex(5.0), 8)
    ) {
        let mut a = Array2::from_shape_vec((8, 8), entries).unwrap();
        for k in 0..8 {
            a[(k, k)] += Complex64::new(10.0, 0.0);
        }
        let b = Array1::from_vec(rhs);
        let lu = lu_factor(&a.view()).unwrap();
        let x = lu.solve(&b.view());
        let r = &b - &a.dot(&x);
        let rel = two_norm(&r.view()) / two_norm(&b.view()).max(1e-300);
        prop_assert!(rel < 1e-12, "residual {rel}");
    }
}
