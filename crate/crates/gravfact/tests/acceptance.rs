//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{bessel_oracle, tau12, tau12_plus};
use gravfact::cauchy::{cauchy_integral, projections, singular_s, winding_number, BoundarySamples};
use gravfact::contour::{bump_contour, classify_schwarzschild_case, unit_circle};
use gravfact::grid::Grid2;
use gravfact::monodromy::{family, MonodromyFamily};
use gravfact::recon::{
    connection_at, fields_from_m, metric_components, reconstruct, reference_solution, CosetField, FnField, RMat,
    ReconOptions,
};
use gravfact::solver::*;
use gravfact::taugen::*;
use gravfact::verify::{field_equation_residual_at, lax_residual, Branch};
use gravfact::weyl::{schwarzschild_coords, SchwarzschildBranch, Sign, WeylPoint};
use gravfact::C64;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn pt(rho: f64, v: f64, lam: Sign) -> WeylPoint {
    WeylPoint::new(rho, v, lam).expect("valid point")
}

fn err(e: gravfact::Error) -> String {
    e.to_string()
}

/// `Ok(detail)` when every `(ok, what)` holds, else the failing descriptions.
fn verdict(checks: Vec<(bool, String)>) -> Outcome {
    let failed: Vec<String> = checks.iter().filter(|c| !c.0).map(|c| c.1.clone()).collect();
    let all: Vec<String> = checks.into_iter().map(|c| c.1).collect();
    if failed.is_empty() {
        Ok(all.join("; "))
    } else {
        Err(failed.join("; "))
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn schwarzschild_four_cases() -> Outcome {
    let start = Instant::now();
    let m = 1.0;
    let f = family("schwarzschild", &[("m", m)]).map_err(err)?;
    let grid = Grid2::new(0.5, 2.0, 5, -0.6, 0.6, 5).map_err(err)?;
    let worst: Vec<[f64; 8]> = grid
        .points()
        .par_iter()
        .map(|&(rho, v)| -> Result<[f64; 8], String> {
            let p = pt(rho, v, Sign::Plus);
            let (t1, t2) = tau12(m, rho, v);
            let expect = [t2 / t1, t1 * t2, t1 / t2, 1.0 / (t1 * t2)];
            let mut out = [0.0; 8];
            for case in 1..=4u8 {
                // case 2 keeps both poles far from its contour
                let n = [256, 128, 256, 256][case as usize - 1];
                let g = schwarzschild_contour(m, &p, case, n).map_err(err)?;
                if classify_schwarzschild_case(&g, t1, t2).map_err(err)? != case {
                    return Err(format!("contour for case {case} misclassified at ({rho}, {v})"));
                }
                // fold contours resolve the density more slowly than M; the jump is reported
                let opts = SolverOptions { jump_tol: if case == 4 { 1e-2 } else { 1e-5 }, compute_sigma: false, ..Default::default() };
                let r = factorize_general(&f, &p, &g, &opts).map_err(err)?;
                let (mm, _) = positive_representative(&r.m);
                let e = expect[case as usize - 1];
                out[case as usize - 1] = (1.0 / mm[(1, 1)] - e).abs() / e.abs();
                out[case as usize + 3] = r.jump_residual;
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let per_case: Vec<f64> = (0..8).map(|c| worst.iter().map(|w| w[c]).fold(0.0, f64::max)).collect();
    let elapsed = start.elapsed();
    let mut checks: Vec<(bool, String)> = (0..4)
        .map(|c| (per_case[c] <= 1e-8, format!("case {} rel err {:.2e} (jump {:.1e})", c + 1, per_case[c], per_case[c + 4])))
        .collect();
    checks.push((elapsed < Duration::from_secs(30), format!("{:.1}s", secs(elapsed))));
    verdict(checks)
}

fn exterior_metric() -> Outcome {
    let m = 1.0;
    let f = family("schwarzschild", &[("m", m)]).map_err(err)?;
    let samples = [(2.5, 0.4), (3.0, 1.0), (4.0, PI / 2.0), (5.5, 2.2), (2.2, 1.3), (7.0, 0.8), (3.3, 2.3), (10.0, 1.9), (2.3, 1.57), (6.0, 0.2)];
    let mut worst = 0.0f64;
    for (r, th) in samples {
        let p = schwarzschild_coords(r, th, m, SchwarzschildBranch::Exterior).map_err(err)?;
        let g = schwarzschild_contour(m, &p, 1, 256).map_err(err)?;
        let res = factorize_general(&f, &p, &g, &SolverOptions::default()).map_err(err)?;
        let (mm, _) = positive_representative(&res.m);
        let (delta, bt) = fields_from_m(&mm).map_err(err)?;
        let gtt = metric_components(delta, bt, 0.0, &p).g_tt;
        worst = worst.max((gtt + (1.0 - 2.0 * m / r)).abs());
    }
    verdict(vec![(worst <= 1e-7, format!("max |g_tt + (1 - 2m/r)| = {worst:.2e} over 10 points"))])
}

/// Node pairs from 32 upward, doubled while sigma_min still drops between N and 2N. Where one
/// pole is far out the contour passes close to it and small N under-resolves the symbol.
fn escalating_diagnostic(f: &MonodromyFamily, p: &WeylPoint) -> Result<ExistenceReport, String> {
    let g = default_contour(f, p, 32).map_err(err)?;
    let mut n = 32;
    loop {
        let rep = injectivity_diagnostic(f, p, &g, n).map_err(err)?;
        let settled = rep.sigma_min_refined >= 0.5 * rep.sigma_min;
        if rep.verdict == Verdict::NoCanonical || settled || n >= 256 {
            return Ok(rep);
        }
        n *= 2;
    }
}

fn kerr_ergosurface() -> Outcome {
    let start = Instant::now();
    let (m, a) = (2.0, 1.0);
    let trace = ergosurface_trace(m, a, 50).map_err(err)?;
    let curve_err = trace.iter().map(|s| (s.u - (m * m - a * a * s.y * s.y).sqrt()).abs()).fold(0.0, f64::max);
    let f = family("kerr", &[("m", m), ("a", a)]).map_err(err)?;
    let c = (m * m - a * a).sqrt();
    let at = |u: f64, y: f64| pt(((u * u - c * c) * (1.0 - y * y)).sqrt(), u * y, Sign::Plus);
    // interior samples of the traced curve, away from the axis
    let picks = [6usize, 15, 24, 25, 34, 43];
    let mut checks = vec![(curve_err <= 1e-8, format!("curve max err {curve_err:.2e} over {} samples", trace.len()))];
    let mut flips = 0;
    let mut missed = vec![];
    let mut decay_ok = true;
    let mut worst_ratio = 0.0f64;
    for &k in &picks {
        let s = trace[k];
        let on = at(s.u, s.y);
        let rep = escalating_diagnostic(&f, &on)?;
        let rep_off = escalating_diagnostic(&f, &at(s.u * 1.05, s.y))?;
        if rep.verdict == Verdict::NoCanonical && rep_off.verdict == Verdict::Canonical {
            flips += 1;
        } else {
            missed.push(format!("y={:.3}: {:?} (N={}, sigma {:.1e}) / {:?}", s.y, rep.verdict, rep.n, rep.sigma_min, rep_off.verdict));
        }
        // halving, or already at the rounding floor
        let ok = rep.sigma_min_refined <= 0.5 * rep.sigma_min || rep.sigma_min_refined < 1e-13;
        decay_ok &= ok;
        worst_ratio = worst_ratio.max(rep.sigma_min_refined / rep.sigma_min.max(1e-300));
    }
    checks.push((flips == picks.len(), format!("verdict flips at {flips}/{} curve samples{}", picks.len(), if missed.is_empty() { String::new() } else { format!(": {}", missed.join(", ")) })));
    checks.push((decay_ok, format!("on-curve sigma_min(2N)/sigma_min(N) <= {worst_ratio:.2e} or at rounding floor")));
    let elapsed = start.elapsed();
    checks.push((elapsed < Duration::from_secs(120), format!("{:.1}s", secs(elapsed))));
    verdict(checks)
}

fn einstein_rosen() -> Outcome {
    let (a, b, k) = (0.5f64, 0.4, 1.3);
    let amp = 4.0 * b * (-a * k).exp();
    let f = family("einstein_rosen", &[("a", a), ("b", b), ("k", k)]).map_err(err)?;
    let grid = Grid2::new(0.5, 2.0, 10, -1.0, 1.0, 10).map_err(err)?;
    let circle = unit_circle(Sign::Minus, 64).map_err(err)?;
    let delta_err = grid
        .points()
        .par_iter()
        .map(|&(rho, v)| -> Result<f64, String> {
            let r = factorize_diagonal(&f, &pt(rho, v, Sign::Minus), &circle).map_err(err)?;
            let expect = (amp * (k * v).cos() * bessel_oracle(0, k * rho)).exp();
            Ok((1.0 / r.m[(1, 1)] - expect).abs() / expect)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let field = FnField {
        lambda: Sign::Minus,
        f: |rho: f64, v: f64| Ok(factorize_diagonal(&f, &WeylPoint::new(rho, v, Sign::Minus)?, &circle)?.m),
    };
    let fields = reconstruct(&field, &grid, &ReconOptions::for_lambda(Sign::Minus)).map_err(err)?;
    let reference = reference_solution("einstein_rosen", &params(&[("a", a), ("b", b), ("k", k)])).map_err(err)?;
    let base = grid.default_base();
    let psi0 = reference.psi_closed(grid.rho[base.0], grid.v[base.1]).unwrap();
    let psi_err = (0..grid.len())
        .map(|i| {
            let (rho, v) = grid.point(i);
            (fields.psi[i] - (reference.psi_closed(rho, v).unwrap() - psi0)).abs()
        })
        .fold(0.0, f64::max);

    let mut homotopy = 0.0f64;
    for c in [0.5, -0.4] {
        let bump = bump_contour(Sign::Minus, c, 256).map_err(err)?;
        for &(rho, v) in &[(0.7, -0.3), (1.3, 0.4), (1.9, 0.9)] {
            let p = pt(rho, v, Sign::Minus);
            let r1 = factorize_diagonal(&f, &p, &circle).map_err(err)?;
            let r2 = factorize_general(&f, &p, &bump, &SolverOptions::default()).map_err(err)?;
            homotopy = homotopy.max((&r1.m - &r2.m).abs().max());
        }
    }
    verdict(vec![
        (delta_err <= 1e-8, format!("Delta rel err {delta_err:.2e} on 10x10")),
        (psi_err <= 1e-6, format!("psi err {psi_err:.2e}")),
        (homotopy <= 1e-8, format!("circle vs bump {homotopy:.2e}")),
    ])
}

fn kasner_chain() -> Outcome {
    let f = family("kasner_power", &[("exponent", 4.0)]).map_err(err)?;
    let canonical = kasner_canonical_pair();
    let mut fact_err = 0.0f64;
    let mut renorm_err = 0.0f64;
    for &(rho, v) in &[(1.0, 2.0), (0.5, 1.5), (1.2, 3.0), (0.8, 2.2)] {
        let p = pt(rho, v, Sign::Minus);
        let r = factorize_general(&f, &p, &default_contour(&f, &p, 256).map_err(err)?, &SolverOptions::default())
            .map_err(err)?;
        // tau0: root of rho t^2 + 2 v t + rho outside the unit circle (v > rho)
        let t0 = (-v - (v * v - rho * rho).sqrt()) / rho;
        let mc = (rho * t0 / 2.0).powi(4);
        fact_err = fact_err.max((r.m[(0, 0)] - mc).abs() / mc).max((r.m[(1, 1)] * mc - 1.0).abs());
        let lib = canonical.m(rho, v).map_err(err)?;
        let kas = (rho / 2.0).powi(4);
        renorm_err = renorm_err
            .max((lib[(0, 0)] * t0.powi(-4) - kas).abs() / kas)
            .max((lib[(1, 1)] * t0.powi(4) * kas - 1.0).abs());
    }
    let pair = kasner_pair();
    let circle = unit_circle(Sign::Minus, 64).map_err(err)?;
    let mut inv = 0.0f64;
    let mut lax = 0.0f64;
    // absolute residuals; the pair's entries grow like rho^-4 below rho = 1
    for &(rho, v) in &[(1.0, 2.0), (1.5, 2.5), (2.0, 3.0)] {
        let p = pt(rho, v, Sign::Minus);
        inv = inv.max(tau_invariance_residual(&pair, &circle, &p).map_err(err)?);
        let (ar, av) = connection_at(&pair, rho, v).map_err(err)?;
        let xe = |t: C64, r: f64, w: f64| pair.x(t, r, w);
        for branch in [Branch::Plus, Branch::Minus] {
            lax = lax.max(lax_residual(&xe, &ar, &av, v + 1.25 * rho, branch, &p).map_err(err)?);
        }
    }
    verdict(vec![
        (fact_err <= 1e-8, format!("M_c rel err {fact_err:.2e}")),
        (renorm_err <= 1e-10, format!("renormalised rel err {renorm_err:.2e}")),
        (inv < 1e-8, format!("tau invariance {inv:.2e}")),
        (lax < 1e-8, format!("lax {lax:.2e}")),
    ])
}

fn generation() -> Outcome {
    let (a, b) = (1.0, 0.5);
    let er: Arc<dyn LaxPair> = Arc::new(einstein_rosen_pair(a, b, 1.0).map_err(err)?);
    let kas: Arc<dyn LaxPair> = Arc::new(kasner_pair());
    let prod = product_solution(er, kas).map_err(err)?;
    let bt = 2.0 * b * (-a).exp();
    let mut delta_err = 0.0f64;
    let mut field = 0.0f64;
    for &(rho, v) in &[(1.0, 2.0), (0.6, -1.4), (1.5, 2.5), (0.8, 0.3)] {
        let (delta, _) = fields_from_m(&prod.m(rho, v).map_err(err)?).map_err(err)?;
        let expect = (rho / 2.0f64).powi(4) * (2.0 * bt * v.cos() * bessel_oracle(0, rho)).exp();
        delta_err = delta_err.max((delta - expect).abs() / expect);
        field = field.max(field_equation_residual_at(&prod, rho, v, 1e-3).map_err(err)?);
    }

    let m = 1.0;
    let interior: Arc<dyn LaxPair> = Arc::new(interior_schwarzschild_pair(m).map_err(err)?);
    let n1: Arc<dyn LaxPair> = Arc::new(GeneratorPair::new(Sign::Minus, &[-m, -m], &[0.5, -0.5], Branch::Plus).map_err(err)?);
    let n2: Arc<dyn LaxPair> = Arc::new(GeneratorPair::new(Sign::Minus, &[m, m], &[-0.5, 0.5], Branch::Plus).map_err(err)?);
    let flat = product_solution(Arc::new(product_solution(interior.clone(), n1).map_err(err)?), n2).map_err(err)?;
    let mut flat_err = 0.0f64;
    let mut interior_err = 0.0f64;
    let mut metric_err = 0.0f64;
    for &(rho, v) in &[(0.3, 0.1), (0.5, -0.2), (0.2, 0.6), (0.7, 0.0), (0.1, -0.8)] {
        let mm = flat.m(rho, v).map_err(err)?;
        flat_err = flat_err.max((&mm - RMat::identity(2, 2)).abs().max());
        let (t1, t2) = tau12_plus(m, rho, v);
        interior_err = interior_err.max((interior.m(rho, v).map_err(err)?[(0, 0)] + t2 / t1).abs());
        let (delta, btilde) = fields_from_m(&mm).map_err(err)?;
        let g = metric_components(delta, btilde, 0.0, &WeylPoint::with_signs(rho, v, Sign::Minus, Sign::Plus).map_err(err)?);
        metric_err = metric_err
            .max((g.g_tt - 1.0).abs())
            .max((g.g_rhorho + 1.0).abs())
            .max((g.g_vv - 1.0).abs())
            .max((g.g_phiphi - rho * rho).abs());
    }
    verdict(vec![
        (delta_err <= 1e-8, format!("ER x Kasner Delta rel err {delta_err:.2e}")),
        (field < 1e-6, format!("field residual {field:.2e}")),
        (flat_err <= 1e-12, format!("interior x N1 x N2 - I = {flat_err:.2e}")),
        (interior_err <= 1e-12, format!("interior M vs roots {interior_err:.2e}")),
        (metric_err <= 1e-12, format!("flat metric err {metric_err:.2e}")),
    ])
}

/// Growth exponent of `dev` against `xi` from the end points of a doubling sequence.
fn growth_exponent(xi: &[f64], dev: &[f64]) -> f64 {
    (dev[dev.len() - 1] / dev[0]).ln() / (xi[xi.len() - 1] / xi[0]).ln()
}

fn deformed_schwarzschild() -> Outcome {
    let m = 1.0;
    let xis = [1e-3, 2e-3, 4e-3];
    let points = [(1.0, -2.0), (1.5, -2.5), (0.5, -1.5), (1.0, -3.0)];
    let grid = Grid2::new(0.6, 1.4, 3, -2.8, -2.0, 3).map_err(err)?;
    let circle = unit_circle(Sign::Plus, 64).map_err(err)?;
    let fast = SolverOptions { compute_sigma: false, ..Default::default() };
    let devs = xis
        .par_iter()
        .map(|&xi| -> Result<[f64; 3], String> {
            let f = family("schwarzschild_deformed", &[("m", m), ("xi", xi)]).map_err(err)?;
            let reference = reference_solution("deformed_schwarzschild", &params(&[("m", m), ("xi", xi)])).map_err(err)?;
            let solve = |rho: f64, v: f64| -> gravfact::Result<RMat> {
                let p = WeylPoint::new(rho, v, Sign::Plus)?;
                Ok(positive_representative(&factorize_general(&f, &p, &circle, &fast)?.m).0)
            };
            let mut out = [0.0f64; 3];
            for &(rho, v) in &points {
                let (delta, btilde) = fields_from_m(&solve(rho, v).map_err(err)?).map_err(err)?;
                out[0] = out[0].max((delta - reference.delta(rho, v)).abs());
                out[1] = out[1].max((btilde - reference.btilde(rho, v)).abs());
            }
            let field = FnField { lambda: Sign::Plus, f: solve };
            let fields = reconstruct(&field, &grid, &ReconOptions::for_lambda(Sign::Plus)).map_err(err)?;
            let base = grid.default_base();
            let psi0 = reference.psi_closed(grid.rho[base.0], grid.v[base.1]).unwrap();
            for k in 0..grid.len() {
                let (rho, v) = grid.point(k);
                out[2] = out[2].max((fields.psi[k] - (reference.psi_closed(rho, v).unwrap() - psi0)).abs());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dd: Vec<f64> = devs.iter().map(|d| d[0]).collect();
    let db: Vec<f64> = devs.iter().map(|d| d[1]).collect();
    let dpsi: Vec<f64> = devs.iter().map(|d| d[2]).collect();
    let (ed, eb, ep) = (growth_exponent(&xis, &dd), growth_exponent(&xis, &db), growth_exponent(&xis, &dpsi));
    let c_delta = dd.iter().zip(&xis).map(|(d, x)| d / (x * x)).fold(0.0, f64::max);
    let c_b = db.iter().zip(&xis).map(|(d, x)| d / (x * x)).fold(0.0, f64::max);
    let c_psi = dpsi.iter().zip(&xis).map(|(d, x)| d / (x * x)).fold(0.0, f64::max);
    verdict(vec![
        (ed >= 1.8, format!("Delta dev {:.2e}..{:.2e}, exponent {ed:.2}, C = {c_delta:.2}", dd[0], dd[2])),
        (eb >= 1.8, format!("Btilde dev {:.2e}..{:.2e}, exponent {eb:.2}, C = {c_b:.2}", db[0], db[2])),
        (ep >= 1.8, format!("psi dev {:.2e}..{:.2e}, exponent {ep:.2}, C = {c_psi:.2}", dpsi[0], dpsi[2])),
    ])
}

fn attractor() -> Outcome {
    let f = family("attractor", &[("q", 1.0), ("p", 2.0), ("h1", 1.0), ("h2", 1.5)]).map_err(err)?;
    let grid = Grid2::new(0.5, 2.0, 4, -1.0, 1.0, 4).map_err(err)?;
    let fast = SolverOptions { compute_sigma: false, ..Default::default() };
    let rows = grid
        .points()
        .par_iter()
        .map(|&(rho, v)| -> Result<(f64, f64, f64), String> {
            let p = pt(rho, v, Sign::Plus);
            let g = default_contour(&f, &p, 128).map_err(err)?;
            let inside = f.primary_poles(&p).iter().all(|z| g.winding_about(*z) == 1);
            if !inside {
                return Err(format!("poles not enclosed at ({rho}, {v})"));
            }
            let r = factorize_general(&f, &p, &g, &SolverOptions::default()).map_err(err)?;
            // the contour of the centre point serves the whole stencil
            let field = FnField {
                lambda: Sign::Plus,
                f: |r: f64, w: f64| Ok(factorize_general(&f, &WeylPoint::new(r, w, Sign::Plus)?, &g, &fast)?.m),
            };
            let fe = field_equation_residual_at(&field, rho, v, 1e-3).map_err(err)?;
            Ok(((r.det() - 1.0).abs(), fe, r.asymmetry))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let det = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let fe = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let sym = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    verdict(vec![
        (det <= 1e-8, format!("|det M - 1| {det:.2e} on 4x4")),
        (fe < 1e-5, format!("field residual {fe:.2e}")),
        (sym <= 1e-8, format!("relative asymmetry under the involution {sym:.2e}")),
    ])
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn invariants(f: &MonodromyFamily, p: &WeylPoint) -> Result<(f64, f64), String> {
    let g = default_contour(f, p, 128).map_err(err)?;
    let r = factorize_general(f, p, &g, &SolverOptions::default()).map_err(err)?;
    Ok(((r.det() - 1.0).abs(), r.asymmetry.max(symmetric_form_check(&r, f).map_err(err)?)))
}

fn property_suite() -> Outcome {
    let g = bump_contour(Sign::Plus, 0.4, 256).map_err(err)?;
    let func = |u: C64| (0.5 * u).sin() + 1.0 / (u - 4.0) + 1.0 / (u - C64::new(0.05, 0.1));
    let f = BoundarySamples::from_fn(&g, func);
    let s2 = max_diff(&singular_s(&singular_s(&f)).values, &f.values);
    let (plus, _) = projections(&f);
    let (pp, pm) = projections(&plus);
    let idem = max_diff(&pp.values, &plus.values).max(pm.values.iter().map(|z| z.norm()).fold(0.0, f64::max));

    let fine = bump_contour(Sign::Plus, 0.4, 512).map_err(err)?;
    let ff = BoundarySamples::from_fn(&fine, func);
    let mut jump = 0.0f64;
    for j in [0usize, 77, 200, 333] {
        let th = 2.0 * PI * j as f64 / 512.0;
        let (t, d) = fine.eval(C64::new(th, 0.0));
        let normal = -C64::i() * d / d.norm();
        let side = |h: f64| -> Result<C64, String> {
            Ok(cauchy_integral(&ff, t - h * normal).map_err(err)? - cauchy_integral(&ff, t + h * normal).map_err(err)?)
        };
        let (j1, j2, j4) = (side(1e-3)?, side(5e-4)?, side(2.5e-4)?);
        jump = jump.max(((8.0 * j4 - 6.0 * j2 + j1) / 3.0 - func(t)).norm());
    }

    let circle = unit_circle(Sign::Plus, 128).map_err(err)?;
    let (za, zb) = (C64::new(0.2, 0.1), C64::new(-0.3, 0.0));
    let windings = [
        winding_number(&BoundarySamples::from_fn(&circle, |u| u)).map_err(err)?,
        winding_number(&BoundarySamples::from_fn(&circle, |u| (u - za) / (u - zb))).map_err(err)?,
        winding_number(&BoundarySamples::from_fn(&circle, |u| 1.0 / (u * u))).map_err(err)?,
    ];

    let kerr = family("kerr", &[("m", 2.0), ("a", 1.0)]).map_err(err)?;
    let p = pt(3.0, 0.5, Sign::Plus);
    let gk = default_contour(&kerr, &p, 128).map_err(err)?;
    let symbol = kerr.eval_on_contour(&p, &gk).map_err(err)?;
    let base = coset_from_samples(&symbol, &gk).map_err(err)?;
    let mut ratios = vec![];
    for eps in [1e-6, 1e-7, 1e-8] {
        let pert: Vec<_> = symbol
            .iter()
            .enumerate()
            .map(|(j, m)| {
                m + gravfact::monodromy::CMat::from_fn(2, 2, |a, b| {
                    C64::new(eps * ((j + 3 * a + 5 * b) as f64).sin(), eps * ((j * a + b) as f64).cos())
                })
            })
            .collect();
        let mp = coset_from_samples(&pert, &gk).map_err(err)?;
        ratios.push((&mp - &base).iter().map(|z| z.norm()).fold(0.0, f64::max) / eps);
    }
    let linear = ratios.iter().all(|r| *r < 1e3) && (ratios[0] - ratios[2]).abs() < 0.1 * ratios[0] + 1e-3;

    let mut det = 0.0f64;
    let mut sym = 0.0f64;
    for (name, prm, rho, v) in [
        ("schwarzschild", vec![("m", 1.0)], 1.2, 0.3),
        ("kerr", vec![("m", 2.0), ("a", 1.0)], 3.0, -0.4),
        ("schwarzschild_deformed", vec![("m", 1.0), ("xi", 0.3)], 1.0, -2.0),
    ] {
        let fam = family(name, &prm).map_err(err)?;
        let (d, s) = invariants(&fam, &pt(rho, v, Sign::Plus))?;
        det = det.max(d);
        sym = sym.max(s);
    }
    verdict(vec![
        (s2 < 1e-10, format!("S^2 - I {s2:.2e}")),
        (idem < 1e-10, format!("projection idempotence {idem:.2e}")),
        (jump < 1e-6, format!("Plemelj jump {jump:.2e}")),
        (windings == [1, 0, -2], format!("windings {windings:?}")),
        (linear, format!("perturbation response/eps {:.3} {:.3} {:.3}", ratios[0], ratios[1], ratios[2])),
        (det < 1e-8 && sym < 1e-8, format!("|det - 1| {det:.2e}, asymmetry {sym:.2e}")),
    ])
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("schwarzschild four cases", schwarzschild_four_cases),
        ("exterior metric", exterior_metric),
        ("kerr ergosurface", kerr_ergosurface),
        ("einstein-rosen", einstein_rosen),
        ("kasner chain", kasner_chain),
        ("generation", generation),
        ("deformed schwarzschild", deformed_schwarzschild),
        ("attractor", attractor),
        ("operator properties", property_suite),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.unwrap_or_else(|e| e);
        println!("{tag} {}. {name} [{:.1}s]: {detail}", i + 1, secs(t.elapsed()));
        failures += usize::from(tag == "FAIL");
    }
    // this binary covers the heavy criteria; the remaining suites are much lighter
    let total = start.elapsed();
    let ok = total < Duration::from_secs(600);
    println!("{} 10. wall clock: acceptance run {:.1}s (limit 600s for the whole suite)", if ok { "PASS" } else { "FAIL" }, secs(total));
    failures += usize::from(!ok);
    if failures > 0 {
        std::process::exit(1);
    }
}
