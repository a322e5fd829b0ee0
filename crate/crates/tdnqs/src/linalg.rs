//! Dense complex linear algebra for the (tiny) regularized tangent-space
//! systems: LU with partial pivoting, triangular solves, and an exact 1-norm
//! condition number. The matrices are M×M with M = 3·hidden + 1 (16 by
//! default), so cubic cost is irrelevant and clarity wins.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as structurally singular.
const PIVOT_TOL: f64 = 1e-300;

/// LU factorization PA = LU of a square complex matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Array2<Complex64>,
    perm: Vec<usize>,
}

/// Factor with partial (row) pivoting on |entry|.
pub fn lu_factor(a: &ArrayView2<Complex64>) -> Result<LuFactors> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "LU needs a square matrix");
    let mut lu = a.to_owned();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pivot_row, mut pivot_mag) = (k, lu[(k, k)].norm());
        for r in k + 1..n {
            let mag = lu[(r, k)].norm();
            if mag > pivot_mag {
                pivot_row = r;
                pivot_mag = mag;
            }
        }
        if pivot_mag < PIVOT_TOL {
            return Err(Error::Singular {
                pivot: pivot_mag,
                col: k,
            });
        }
        if pivot_row != k {
            perm.swap(k, pivot_row);
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(pivot_row, c)];
                lu[(pivot_row, c)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            lu[(r, k)] = factor;
            for c in k + 1..n {
                let sub = factor * lu[(k, c)];
                lu[(r, c)] -= sub;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.lu.nrows()
    }

    /// Solve A x = b using the stored factors.
    pub fn solve(&self, b: &ArrayView1<Complex64>) -> Array1<Complex64> {
        let n = self.n();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x = Array1::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // forward: L y = P b (unit diagonal)
        for i in 1..n {
            for j in 0..i {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
        }
        // backward: U x = y
        for i in (0..n).rev() {
            for j in i + 1..n {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Exact ‖A⁻¹‖₁ via n solves against the identity columns.
    pub fn inverse_one_norm(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e[j] = Complex64::ONE;
            let col = self.solve(&e.view());
            let sum: f64 = col.iter().map(|v| v.norm()).sum();
            worst = worst.max(sum);
            e[j] = Complex64::ZERO;
        }
        worst
    }
}

/// Matrix 1-norm (max absolute column sum).
pub fn one_norm(a: &ArrayView2<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        let sum: f64 = a.column(j).iter().map(|v| v.norm()).sum();
        worst = worst.max(sum);
    }
    worst
}

/// Euclidean norm of a complex vector.
pub fn two_norm(v: &ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Complex, DMatrix, DVector};
    use ndarray::array;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) - 0.5;
        Array2::from_shape_fn((n, n), |_| c(unit(), unit()))
    }

    fn random_vector(n: usize, seed: u64) -> Array1<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) - 0.5;
        Array1::from_shape_fn(n, |_| c(unit(), unit()))
    }

    fn to_nalgebra(a: &Array2<Complex64>) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let eye = Array2::from_diag_elem(5, Complex64::ONE);
        let lu = lu_factor(&eye.view()).unwrap();
        let b = random_vector(5, 3);
        let x = lu.solve(&b.view());
        for i in 0..5 {
            assert_eq!(x[i], b[i]);
        }
        assert!((lu.inverse_one_norm() - 1.0).abs() < 1e-15);
    }

    // A zero leading pivot forces a row swap; the solution is known by hand.
    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = array![[Complex64::ZERO, c(2.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)]];
        let lu = lu_factor(&a.view()).unwrap();
        let b = array![c(4.0, 0.0), c(3.0, 0.0)];
        let x = lu.solve(&b.view());
        // x₂ = 2, x₁ = 1.
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let zero = Array2::<Complex64>::zeros((4, 4));
        match lu_factor(&zero.view()) {
            Err(Error::Singular { col, .. }) => assert_eq!(col, 0),
            other => panic!("expected singular error, got {other:?}"),
        }
        // Rank-1: second column is a multiple of the first.
        let mut rank1 = Array2::<Complex64>::zeros((2, 2));
        rank1[(0, 0)] = c(1.0, 0.0);
        rank1[(0, 1)] = c(2.0, 0.0);
        rank1[(1, 0)] = c(3.0, 0.0);
        rank1[(1, 1)] = c(6.0, 0.0);
        assert!(matches!(
            lu_factor(&rank1.view()),
            Err(Error::Singular { .. })
        ));
    }

    // Independent check of both the solve and the exact condition number
    // against nalgebra's LU on random dense complex systems.
    #[test]
    fn solve_and_cond_match_nalgebra() {
        for seed in 0..20u64 {
            let a = random_matrix(16, seed);
            let b = random_vector(16, 1000 + seed);
            let lu = lu_factor(&a.view()).unwrap();
            let x = lu.solve(&b.view());

            let na = to_nalgebra(&a);
            let nb = DVector::from_fn(16, |i, _| b[i]);
            let nx = na.clone().lu().solve(&nb).expect("nalgebra solve");
            let xnorm = two_norm(&x.view());
            let mut diff: f64 = 0.0;
            for i in 0..16 {
                diff += (x[i] - nx[i]).norm_sqr();
            }
            assert!(
                diff.sqrt() < 1e-12 * xnorm,
                "seed {seed}: solutions differ by {}",
                diff.sqrt()
            );

            let inv = na.try_inverse().expect("invertible");
            let mut inv_norm: f64 = 0.0;
            for j in 0..16 {
                let col_sum: f64 = (0..16).map(|i| inv[(i, j)].norm()).sum();
                inv_norm = inv_norm.max(col_sum);
            }
            assert!(
                (lu.inverse_one_norm() - inv_norm).abs() < 1e-9 * inv_norm,
                "seed {seed}: ‖A⁻¹‖₁ {} vs nalgebra {}",
                lu.inverse_one_norm(),
                inv_norm
            );
        }
    }

    // The shape the equation of motion actually solves: Hermitian-PSD plus a
    // diagonal shift. Reconstruction must sit far below the 1e-10 bar.
    #[test]
    fn psd_plus_shift_reconstruction() {
        for seed in 0..20u64 {
            let b = random_matrix(16, 40 + seed);
            // S = B†B is Hermitian PSD.
            let mut s = Array2::<Complex64>::zeros((16, 16));
            for i in 0..16 {
                for j in 0..16 {
                    for k in 0..16 {
                        let add = b[(k, i)].conj() * b[(k, j)];
                        s[(i, j)] += add;
                    }
                }
            }
            for k in 0..16 {
                s[(k, k)] += c(1e-4, 0.0);
            }
            let f = random_vector(16, 2000 + seed);
            let lu = lu_factor(&s.view()).unwrap();
            let x = lu.solve(&f.view());
            let r = &f - &s.dot(&x);
            let rel = two_norm(&r.view()) / two_norm(&f.view());
            assert!(rel < 1e-10, "seed {seed}: residual {rel}");
        }
    }

    #[test]
    fn norms_on_known_values() {
        let a = array![[c(3.0, 4.0), c(0.0, 1.0)], [c(0.0, 0.0), c(-2.0, 0.0)]];
        // Column sums: 5 and 3.
        assert!((one_norm(&a.view()) - 5.0).abs() < 1e-15);
        let v = array![c(3.0, 4.0), c(0.0, 2.0)];
        assert!((two_norm(&v.view()) - 29.0f64.sqrt()).abs() < 1e-15);
    }
}
