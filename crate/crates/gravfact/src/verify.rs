//! Residual checks: field equation, zero curvature, Lax system.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{grid_gradient, to_csv, Grid2};
use crate::monodromy::CMat;
use crate::recon::{connection_at, CosetField, MatrixGrid, RMat};
use crate::weyl::{phi_roots, Sign, WeylPoint};

#[derive(Debug, Clone)]
pub struct ConnectionGrids {
    pub grid: Grid2,
    pub lambda: Sign,
    pub a_rho: Vec<RMat>,
    pub a_v: Vec<RMat>,
}

impl ConnectionGrids {
    /// Max `|Tr A|` over both components.
    pub fn trace_residual(&self) -> f64 {
        self.a_rho.iter().chain(&self.a_v).map(|a| a.trace().abs()).fold(0.0, f64::max)
    }
}

fn inverse(m: &RMat) -> Result<RMat> {
    m.clone().try_inverse().ok_or_else(|| Error::Numerical("singular M on grid".into()))
}

/// `A = M^{-1} dM` with centered grid differences.
pub fn connection_a(mg: &MatrixGrid) -> Result<ConnectionGrids> {
    let (d_rho, d_v) = grid_gradient(&mg.grid, &mg.values);
    let mut a_rho = Vec::with_capacity(mg.values.len());
    let mut a_v = Vec::with_capacity(mg.values.len());
    for (k, m) in mg.values.iter().enumerate() {
        let inv = inverse(m)?;
        a_rho.push(&inv * &d_rho[k]);
        a_v.push(&inv * &d_v[k]);
    }
    Ok(ConnectionGrids { grid: mg.grid.clone(), lambda: mg.lambda, a_rho, a_v })
}

/// `A` from the evaluator's own derivatives.
pub fn connection_from_field(field: &dyn CosetField, grid: &Grid2) -> Result<ConnectionGrids> {
    let pairs: Vec<(RMat, RMat)> =
        grid.points().par_iter().map(|&(r, v)| connection_at(field, r, v)).collect::<Result<_>>()?;
    let (a_rho, a_v) = pairs.into_iter().unzip();
    Ok(ConnectionGrids { grid: grid.clone(), lambda: field.lambda(), a_rho, a_v })
}

/// Residual values on a grid; boundary entries are zero and excluded from the statistics.
#[derive(Debug, Clone)]
pub struct ResidualGrid {
    pub grid: Grid2,
    pub values: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

impl ResidualGrid {
    fn from_interior(grid: &Grid2, vals: Vec<(usize, f64)>) -> ResidualGrid {
        let mut values = vec![0.0; grid.len()];
        let (mut max, mut sum) = (0.0_f64, 0.0);
        for &(k, r) in &vals {
            values[k] = r;
            max = max.max(r);
            sum += r;
        }
        let mean = if vals.is_empty() { 0.0 } else { sum / vals.len() as f64 };
        ResidualGrid { grid: grid.clone(), values, max, mean }
    }

    pub fn to_csv(&self) -> String {
        to_csv(&self.grid, &["residual"], &[&self.values])
    }
}

fn max_entry(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Coefficient of `drho ^ dv` in `d(rho *A)`, expanded in `M` and its first and second
/// partials: `-lambda d_rho(rho A_rho) - rho d_v A_v`.
fn field_eq_from_derivs(lambda: f64, rho: f64, m: &RMat, mr: &RMat, mv: &RMat, mrr: &RMat, mvv: &RMat) -> Result<RMat> {
    let inv = inverse(m)?;
    let ar = &inv * mr;
    let av = &inv * mv;
    let d_ar = &inv * mrr - &ar * &ar;
    let d_av = &inv * mvv - &av * &av;
    Ok((&ar + &d_ar * rho) * (-lambda) - d_av * rho)
}

/// Field-equation residual at interior grid points (second differences of `M`).
pub fn field_equation_residual(mg: &MatrixGrid) -> Result<ResidualGrid> {
    let g = &mg.grid;
    let (hr, hv) = (g.h_rho(), g.h_v());
    let lam = mg.lambda.value();
    let vals: Vec<(usize, f64)> = g
        .interior()
        .par_iter()
        .map(|&k| {
            let (ir, iv) = g.coords(k);
            let m = &mg.values[k];
            let (e, w) = (&mg.values[g.idx(ir + 1, iv)], &mg.values[g.idx(ir - 1, iv)]);
            let (n, s) = (&mg.values[g.idx(ir, iv + 1)], &mg.values[g.idx(ir, iv - 1)]);
            let mr = (e - w) / (2.0 * hr);
            let mv = (n - s) / (2.0 * hv);
            let mrr = (e - m * 2.0 + w) / (hr * hr);
            let mvv = (n - m * 2.0 + s) / (hv * hv);
            let r = field_eq_from_derivs(lam, g.rho[ir], m, &mr, &mv, &mrr, &mvv)?;
            Ok((k, max_entry(&r)))
        })
        .collect::<Result<_>>()?;
    Ok(ResidualGrid::from_interior(g, vals))
}

/// Field-equation residual at one point: `A` from the evaluator's derivatives at the four
/// neighbours `(rho +- h, v)`, `(rho, v +- h)` and half that distance, central differences
/// Richardson-extrapolated once.
pub fn field_equation_residual_at(field: &dyn CosetField, rho: f64, v: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(rho - h > 0.0) {
        return Err(Error::Argument(format!("stencil step {h} invalid at rho = {rho}")));
    }
    let lam = field.lambda().value();
    let diff = |s: f64| -> Result<(RMat, RMat)> {
        let (e, _) = connection_at(field, rho + s, v)?;
        let (w, _) = connection_at(field, rho - s, v)?;
        let (_, n) = connection_at(field, rho, v + s)?;
        let (_, so) = connection_at(field, rho, v - s)?;
        Ok(((e * (rho + s) - w * (rho - s)) / (2.0 * s), (n - so) / (2.0 * s)))
    };
    let (r1, v1) = diff(h)?;
    let (r2, v2) = diff(h / 2.0)?;
    let d_rho = (r2 * 4.0 - r1) / 3.0;
    let d_v = (v2 * 4.0 - v1) / 3.0;
    Ok(max_entry(&(d_rho * (-lam) - d_v * rho)))
}

/// Zero-curvature residual at one point, with `A` from the evaluator at `(rho +- s, v)`,
/// `(rho, v +- s)` for `s = h, h/2` and one Richardson step.
pub fn zero_curvature_residual_at(field: &dyn CosetField, rho: f64, v: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(rho - h > 0.0) {
        return Err(Error::Argument(format!("stencil step {h} invalid at rho = {rho}")));
    }
    let diff = |s: f64| -> Result<(RMat, RMat)> {
        let (_, e) = connection_at(field, rho + s, v)?;
        let (_, w) = connection_at(field, rho - s, v)?;
        let (n, _) = connection_at(field, rho, v + s)?;
        let (so, _) = connection_at(field, rho, v - s)?;
        Ok(((e - w) / (2.0 * s), (n - so) / (2.0 * s)))
    };
    let (r1, v1) = diff(h)?;
    let (r2, v2) = diff(h / 2.0)?;
    let dr_av = (r2 * 4.0 - r1) / 3.0;
    let dv_ar = (v2 * 4.0 - v1) / 3.0;
    let (ar, av) = connection_at(field, rho, v)?;
    Ok(max_entry(&(dr_av - dv_ar + &ar * &av - &av * &ar)))
}

/// `d_rho A_v - d_v A_rho + [A_rho, A_v]` at interior points.
pub fn zero_curvature_residual(a: &ConnectionGrids) -> ResidualGrid {
    let g = &a.grid;
    let (_, dv_ar) = grid_gradient(g, &a.a_rho);
    let (dr_av, _) = grid_gradient(g, &a.a_v);
    let vals = g
        .interior()
        .into_iter()
        .map(|k| {
            let comm = &a.a_rho[k] * &a.a_v[k] - &a.a_v[k] * &a.a_rho[k];
            (k, max_entry(&(&dr_av[k] - &dv_ar[k] + comm)))
        })
        .collect();
    ResidualGrid::from_interior(g, vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// The root `phi^branch_omega(rho, v)` of the spectral curve.
pub fn phi_branch(omega: f64, rho: f64, v: f64, lambda: Sign, branch: Branch) -> Result<C64> {
    let p = WeylPoint::new(rho, v, lambda)?;
    let (a, b) = phi_roots(C64::new(omega, 0.0), &p);
    Ok(match branch {
        Branch::Plus => a,
        Branch::Minus => b,
    })
}

/// Lax evaluator `X(tau, rho, v)`.
pub type XEval<'a> = dyn Fn(C64, f64, f64) -> Result<CMat> + Sync + 'a;

/// Residual of `tau (dX + A X) = *dX` along `tau = phi_omega(rho, v)`.
///
/// Components: `drho: tau (D_rho X + A_rho X) - D_v X`, `dv: tau (D_v X + A_v X) + lambda D_rho X`,
/// with total derivatives by Richardson-extrapolated central differences (`h = 1e-5`).
pub fn lax_residual(x: &XEval, a_rho: &RMat, a_v: &RMat, omega: f64, branch: Branch, p: &WeylPoint) -> Result<f64> {
    if (omega - p.v).abs() < 1e-12 {
        return Err(Error::Domain("omega = v is degenerate".into()));
    }
    let lam = p.lambda;
    let comp = |r: f64, v: f64| -> Result<CMat> { x(phi_branch(omega, r, v, lam, branch)?, r, v) };
    let h = 1e-5;
    let cd = |dr: f64, dv: f64| -> Result<CMat> {
        Ok((comp(p.rho + dr, p.v + dv)? - comp(p.rho - dr, p.v - dv)?) / C64::new(2.0 * (dr + dv), 0.0))
    };
    let rich = |dr: f64, dv: f64| -> Result<CMat> {
        Ok((cd(dr / 2.0, dv / 2.0)? * C64::new(4.0, 0.0) - cd(dr, dv)?) / C64::new(3.0, 0.0))
    };
    let hr = h * p.rho.max(1.0);
    let hv = h * p.v.abs().max(1.0);
    let d_r = rich(hr, 0.0)?;
    let d_v = rich(0.0, hv)?;
    let tau = phi_branch(omega, p.rho, p.v, lam, branch)?;
    let xv = comp(p.rho, p.v)?;
    let ar = a_rho.map(|t| C64::new(t, 0.0));
    let av = a_v.map(|t| C64::new(t, 0.0));
    let r1 = (&d_r + &ar * &xv) * tau - &d_v;
    let r2 = (&d_v + &av * &xv) * tau + &d_r * C64::new(lam.value(), 0.0);
    let m = |c: &CMat| c.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    Ok(m(&r1).max(m(&r2)))
}
