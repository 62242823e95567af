use approx::assert_abs_diff_eq;
use gravfact::cauchy::*;
use gravfact::contour::{bump_contour, unit_circle};
use gravfact::weyl::{spectral_omega, Sign, WeylPoint};
use gravfact::{Error, C64};
use proptest::prelude::*;

fn j0_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= -(x * x / 4.0) / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn cauchy_integral_basics() {
    let g = unit_circle(Sign::Plus, 64).unwrap();
    let one = BoundarySamples::from_fn(&g, |_| C64::new(1.0, 0.0));
    assert_abs_diff_eq!(cauchy_integral(&one, C64::new(0.0, 0.0)).unwrap().re, 1.0, epsilon = 1e-14);
    assert!(cauchy_integral(&one, C64::new(3.0, 0.0)).unwrap().norm() < 1e-14);
    let id = BoundarySamples::from_fn(&g, |u| u);
    assert!(cauchy_integral(&id, C64::new(0.0, 0.0)).unwrap().norm() < 1e-14);
    assert!(matches!(cauchy_integral(&one, C64::new(1.0, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn singular_operator_modes() {
    let g = unit_circle(Sign::Plus, 64).unwrap();
    let one = BoundarySamples::from_fn(&g, |_| C64::new(1.0, 0.0));
    assert!(max_diff(&singular_s(&one).values, &one.values) < 1e-12);
    let pos = BoundarySamples::from_fn(&g, |u| u);
    assert!(max_diff(&singular_s(&pos).values, &pos.values) < 1e-12);
    let neg = BoundarySamples::from_fn(&g, |u| 1.0 / u);
    let minus: Vec<C64> = neg.values.iter().map(|x| -x).collect();
    assert!(max_diff(&singular_s(&neg).values, &minus) < 1e-12);
    let mix = BoundarySamples::from_fn(&g, |u| u + 1.0 / u);
    let (p, m) = projections(&mix);
    assert!(max_diff(&p.values, &pos.values) < 1e-12);
    assert!(max_diff(&m.values, &neg.values) < 1e-12);
}

#[test]
fn matrix_and_matrix_free_agree() {
    let g = bump_contour(Sign::Minus, 0.6, 64).unwrap();
    let f = BoundarySamples::from_fn(&g, |u| (u * 0.3).exp() / (u - 3.0));
    let s = singular_matrix(&g);
    let v = nalgebra::DVector::from_vec(f.values.clone());
    let dense: Vec<C64> = (&s * v).iter().cloned().collect();
    assert!(max_diff(&dense, &singular_s(&f).values) < 1e-12);
}

#[test]
fn nyquist_mode_is_not_annihilated() {
    let g = bump_contour(Sign::Plus, 0.9, 32).unwrap();
    let s = singular_matrix(&g);
    let sv = s.singular_values();
    assert!(sv.min() > 0.1, "min singular value {}", sv.min());
}

#[test]
fn winding_numbers() {
    let g = unit_circle(Sign::Plus, 128).unwrap();
    assert_eq!(winding_number(&BoundarySamples::from_fn(&g, |u| u)).unwrap(), 1);
    let a = C64::new(0.2, 0.1);
    let b = C64::new(-0.3, 0.0);
    assert_eq!(winding_number(&BoundarySamples::from_fn(&g, |u| (u - a) / (u - b))).unwrap(), 0);
    assert_eq!(winding_number(&BoundarySamples::from_fn(&g, |u| 1.0 / (u * u))).unwrap(), -2);
    let z = BoundarySamples::from_fn(&g, |u| u - g.nodes[3]);
    assert!(matches!(winding_number(&z), Err(Error::NonVanishing(_))));
}

#[test]
fn schwarzschild_entry_case_one() {
    let (t1, t2) = (-1.0 - 2f64.sqrt(), 1.0 - 2f64.sqrt());
    let g = gravfact::contour::design::schwarzschild_case_contour(1, t1, t2, 256).unwrap();
    let p = WeylPoint::new(1.0, 0.0, Sign::Plus).unwrap();
    let sym = BoundarySamples::from_fn(&g, |t| {
        let w = spectral_omega(t, &p).unwrap();
        (w - 1.0) / (w + 1.0)
    });
    assert_eq!(winding_number(&sym).unwrap(), 0);
    let fac = scalar_factorize(&sym).unwrap();
    let expect = 3.0 - 2.0 * 2f64.sqrt();
    assert!((fac.plus_at_zero - expect).norm() < 1e-10 * expect);
    assert!(fac.node_residual(&sym.values) < 1e-8);
}

#[test]
fn nonzero_winding_is_rejected() {
    let g = unit_circle(Sign::Plus, 64).unwrap();
    let sym = BoundarySamples::from_fn(&g, |u| u);
    assert_eq!(scalar_factorize(&sym).unwrap_err(), Error::NonCanonicalScalar(1));
}

#[test]
fn einstein_rosen_entry() {
    let g = unit_circle(Sign::Minus, 256).unwrap();
    let p = WeylPoint::new(1.0, 0.0, Sign::Minus).unwrap();
    let sym = BoundarySamples::from_fn(&g, |t| (2.0 * spectral_omega(t, &p).unwrap().cos()).exp());
    let fac = scalar_factorize(&sym).unwrap();
    let expect = (2.0 * j0_series(1.0)).exp();
    assert!((fac.plus_at_zero - expect).norm() < 1e-10 * expect);
        assert_abs_diff_eq!(expect, 4.62000, epsilon = 1e-5);
}

#[test]
fn adaptive_doubling_stabilises() {
    // the spec's example bump passes within 0.035 (parametric) of a pole
    let g = bump_contour(Sign::Plus, 2.5f64.ln(), 64).unwrap();
    let p = WeylPoint::new(1.0, 0.0, Sign::Plus).unwrap();
    let f = |t: C64| {
        let w = spectral_omega(t, &p).unwrap();
        (w - 1.0) / (w + 1.0)
    };
    let fac = scalar_factorize_adaptive(&g, f, 64, 4096).unwrap();
    assert!((fac.plus_at_zero.re - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-10);
    assert!(fac.contour.n() <= 2048);
}

#[test]
fn plemelj_jump() {
    let g = bump_contour(Sign::Plus, 0.4, 512).unwrap();
    let func = |u: C64| (0.5 * u).sin() + 1.0 / (u - 4.0) + 1.0 / (u - 0.1);
    let f = BoundarySamples::from_fn(&g, func);
    for j in [0usize, 77, 200, 333] {
        let th = 2.0 * std::f64::consts::PI * j as f64 / 512.0;
        let (t, d) = g.eval(C64::new(th, 0.0));
        let normal = -C64::i() * d / d.norm();
        let jump = |d: f64| cauchy_integral(&f, t - d * normal).unwrap() - cauchy_integral(&f, t + d * normal).unwrap();
        // Richardson in the distance removes the O(d) term of the one-sided limits
        let (j1, j2, j4) = (jump(1e-3), jump(5e-4), jump(2.5e-4));
        let jump = (8.0 * j4 - 6.0 * j2 + j1) / 3.0;
        let exact = func(t);
        assert!((jump - exact).norm() < 1e-6, "j={j} err={}", (jump - exact).norm());
    }
}

#[test]
fn spectral_helpers() {
    let n = 32;
    let vals: Vec<C64> = (0..n).map(|j| {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        C64::new((3.0 * th).cos(), (2.0 * th).sin())
    }).collect();
    let d = spectral_derivative(&vals);
    for (j, x) in d.iter().enumerate() {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        assert!((x - C64::new(-3.0 * (3.0 * th).sin(), 2.0 * (2.0 * th).cos())).norm() < 1e-12);
    }
    let up = trig_resample(&vals, 128);
    for (j, x) in up.iter().enumerate() {
        let th = 2.0 * std::f64::consts::PI * j as f64 / 128.0;
        assert!((x - C64::new((3.0 * th).cos(), (2.0 * th).sin())).norm() < 1e-12);
        assert!((trig_eval(&vals, th) - x).norm() < 1e-12);
    }
}

fn analytic_samples(g: &gravfact::contour::AdmissibleContour, a: f64, b: f64, c: f64) -> BoundarySamples<'_> {
    BoundarySamples::from_fn(g, move |u| (a * u).exp() + b / (u - 5.0) + c / (u - C64::new(0.05, 0.1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn s_squared_is_identity(a in -1.0f64..1.0, b in -2.0f64..2.0, c in -2.0f64..2.0, cc in -1.0f64..1.0) {
        let g = bump_contour(Sign::Plus, cc, 256).unwrap();
        let f = analytic_samples(&g, a, b, c);
        let ss = singular_s(&singular_s(&f));
        prop_assert!(max_diff(&ss.values, &f.values) < 1e-10);
    }

    #[test]
    fn projections_are_complementary(a in -1.0f64..1.0, b in -2.0f64..2.0, c in -2.0f64..2.0, cc in -1.0f64..1.0) {
        let g = bump_contour(Sign::Minus, cc, 256).unwrap();
        let f = analytic_samples(&g, a, b, c);
        let (p, m) = projections(&f);
        let sum: Vec<C64> = p.values.iter().zip(&m.values).map(|(x, y)| x + y).collect();
        prop_assert!(max_diff(&sum, &f.values) < 1e-13);
        let (pp, pm) = projections(&p);
        prop_assert!(max_diff(&pp.values, &p.values) < 1e-10);
        prop_assert!(pm.values.iter().all(|x| x.norm() < 1e-10));
    }

    #[test]
    fn scalar_plus_values_multiply(a in -0.5f64..0.5, b in -0.5f64..0.5, v in -0.5f64..0.5) {
        let g = bump_contour(Sign::Plus, 2.5f64.ln(), 256).unwrap();
        let p = WeylPoint::new(1.0, v, Sign::Plus).unwrap();
        let f1 = |t: C64| { let w = spectral_omega(t, &p).unwrap(); (w - 1.0) / (w + 1.0) };
        let f2 = |t: C64| { let w = spectral_omega(t, &p).unwrap(); (a * w.cos() + b * (0.3 * w).sin()).exp() };
        let g1 = scalar_factorize(&BoundarySamples::from_fn(&g, f1)).unwrap();
        let g2 = scalar_factorize(&BoundarySamples::from_fn(&g, f2)).unwrap();
        let g12 = scalar_factorize(&BoundarySamples::from_fn(&g, |t| f1(t) * f2(t))).unwrap();
        prop_assert!((g12.plus_at_zero - g1.plus_at_zero * g2.plus_at_zero).norm() < 1e-8 * g12.plus_at_zero.norm());
    }
}

