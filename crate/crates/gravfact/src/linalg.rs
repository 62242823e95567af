//! Small dense linear-algebra helpers.

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64 as C64;

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn sigma_min_svd(a: &DMatrix<C64>) -> f64 {
    a.clone().svd(false, false).singular_values.min()
}

fn seed_vector(n: usize) -> DVector<C64> {
    // deterministic, generic start vector
    DVector::from_fn(n, |i, _| C64::new(((i as f64 + 1.0) * 0.754_877_666).sin(), ((i as f64 + 1.0) * 0.569_840_29).cos()))
}

/// Solve `A^H z = y` from the factors of `P A = L U`.
pub fn lu_adjoint_solve(lu: &LU<C64, Dyn, Dyn>, y: &DVector<C64>) -> Option<DVector<C64>> {
    let u = lu.u();
    let l = lu.l();
    let w = u.ad_solve_upper_triangular(y)?;
    let mut t = l.ad_solve_lower_triangular(&w)?;
    lu.p().inv_permute_rows(&mut t);
    Some(t)
}

/// Smallest singular value by inverse iteration on `A^H A`, reusing the LU factors of `A`.
pub fn sigma_min_lu(lu: &LU<C64, Dyn, Dyn>, n: usize) -> f64 {
    let mut x = seed_vector(n);
    x /= C64::new(x.norm(), 0.0);
    let mut est = f64::INFINITY;
    for _ in 0..60 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        let Some(z) = lu_adjoint_solve(lu, &y) else { return 0.0 };
        let lam = z.norm();
        if !lam.is_finite() || lam == 0.0 {
            return 0.0;
        }
        let next = 1.0 / lam.sqrt();
        x = z / C64::new(lam, 0.0);
        if (next - est).abs() <= 1e-6 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Largest singular value by power iteration on `A^H A`.
pub fn spectral_norm_estimate(a: &DMatrix<C64>) -> f64 {
    let mut x = seed_vector(a.ncols());
    x /= C64::new(x.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..100 {
        let z = a.ad_mul(&(a * &x));
        let lam = z.norm();
        if lam == 0.0 {
            return 0.0;
        }
        let next = lam.sqrt();
        x = z / C64::new(lam, 0.0);
        if (next - est).abs() <= 1e-8 * next {
            return next;
        }
        est = next;
    }
    est
}
