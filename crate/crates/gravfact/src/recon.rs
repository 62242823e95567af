//! From a coset field `M(rho, v)` to the 4D metric data `(Delta, Btilde, B, psi)`,
//! closed-form reference solutions, Bessel functions, Ward matrix.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{grid_gradient, to_csv, Grid2};
use crate::verify::ConnectionGrids;
use crate::weyl::{Sign, WeylPoint};

pub type RMat = DMatrix<f64>;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// A symmetric-space valued field over the Weyl half-plane.
pub trait CosetField: Sync {
    fn lambda(&self) -> Sign;
    fn m(&self, rho: f64, v: f64) -> Result<RMat>;
    /// `(dM/drho, dM/dv)`; central differences with one Richardson step unless overridden.
    fn dm(&self, rho: f64, v: f64) -> Result<(RMat, RMat)> {
        fd_gradient(&|r, w| self.m(r, w), rho, v, DEFAULT_FD_STEP)
    }
}

/// Richardson-extrapolated central differences of a matrix function.
pub fn fd_gradient(f: &dyn Fn(f64, f64) -> Result<RMat>, rho: f64, v: f64, h: f64) -> Result<(RMat, RMat)> {
    let hr = (h * rho.abs().max(1.0)).min(rho / 4.0);
    let hv = h * v.abs().max(1.0);
    let cd = |dr: f64, dv: f64| -> Result<RMat> {
        let (a, b) = (f(rho + dr, v + dv)?, f(rho - dr, v - dv)?);
        Ok((a - b) / (2.0 * (dr + dv)))
    };
    let rich = |dr: f64, dv: f64| -> Result<RMat> { Ok((cd(dr / 2.0, dv / 2.0)? * 4.0 - cd(dr, dv)?) / 3.0) };
    Ok((rich(hr, 0.0)?, rich(0.0, hv)?))
}

/// Wraps a closure as a [`CosetField`].
pub struct FnField<F> {
    pub lambda: Sign,
    pub f: F,
}

impl<F> CosetField for FnField<F>
where
    F: Fn(f64, f64) -> Result<RMat> + Sync,
{
    fn lambda(&self) -> Sign {
        self.lambda
    }
    fn m(&self, rho: f64, v: f64) -> Result<RMat> {
        (self.f)(rho, v)
    }
}

/// `M` sampled on a grid.
#[derive(Debug, Clone)]
pub struct MatrixGrid {
    pub grid: Grid2,
    pub lambda: Sign,
    pub values: Vec<RMat>,
}

impl MatrixGrid {
    pub fn sample(field: &dyn CosetField, grid: &Grid2) -> Result<MatrixGrid> {
        let values = grid.points().par_iter().map(|&(r, v)| field.m(r, v)).collect::<Result<Vec<_>>>()?;
        Ok(MatrixGrid { grid: grid.clone(), lambda: field.lambda(), values })
    }
}

// ---------------------------------------------------------------------------
// pointwise dictionary

/// `(Delta, Btilde)` from a 2x2 coset matrix.
pub fn fields_from_m(m: &RMat) -> Result<(f64, f64)> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::Argument(format!("expected a 2x2 matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let m22 = m[(1, 1)];
    if !(m22 > 0.0) {
        return Err(Error::Signature(format!("M22 = {m22:e} is not positive")));
    }
    Ok((1.0 / m22, m[(0, 1)] / m22))
}

pub fn m_from_fields(delta: f64, btilde: f64) -> RMat {
    RMat::from_row_slice(2, 2, &[delta + btilde * btilde / delta, btilde / delta, btilde / delta, 1.0 / delta])
}

/// `(dB/drho, dB/dv)`.
///
/// From `rho *dBt = Delta^2 dB` with `*drho = -lambda dv`, `*dv = drho`:
/// `rho (Bt_rho (-lambda dv) + Bt_v drho) = Delta^2 (B_rho drho + B_v dv)`.
pub fn b_gradient(lambda: Sign, rho: f64, delta: f64, bt_rho: f64, bt_v: f64) -> (f64, f64) {
    let s = rho / (delta * delta);
    (s * bt_v, -lambda.value() * s * bt_rho)
}

/// `(dpsi/drho, dpsi/dv)` from the connection components.
pub fn psi_gradient(lambda: Sign, rho: f64, a_rho: &RMat, a_v: &RMat) -> (f64, f64) {
    let tr = |a: &RMat, b: &RMat| (a * b).trace();
    (0.25 * rho * (tr(a_rho, a_rho) - lambda.value() * tr(a_v, a_v)), 0.5 * rho * tr(a_rho, a_v))
}

/// `A = M^{-1} dM` at a point.
pub fn connection_at(field: &dyn CosetField, rho: f64, v: f64) -> Result<(RMat, RMat)> {
    let m = field.m(rho, v)?;
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Numerical(format!("M singular at ({rho}, {v})")))?;
    let (dr, dv) = field.dm(rho, v)?;
    Ok((&inv * dr, &inv * dv))
}

/// `[Delta, Btilde, B_rho, B_v, psi_rho, psi_v]` at a point; `B` entries are zero for non-2x2 fields.
fn local_data(field: &dyn CosetField, rho: f64, v: f64) -> Result<[f64; 6]> {
    let m = field.m(rho, v)?;
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Numerical(format!("M singular at ({rho}, {v})")))?;
    let (dr, dv) = field.dm(rho, v)?;
    let (pr, pv) = psi_gradient(field.lambda(), rho, &(&inv * &dr), &(&inv * &dv));
    if m.nrows() != 2 {
        return Ok([f64::NAN, f64::NAN, 0.0, 0.0, pr, pv]);
    }
    let (delta, bt) = fields_from_m(&m)?;
    let m22 = m[(1, 1)];
    // Bt = M12 / M22
    let bt_r = (dr[(0, 1)] * m22 - m[(0, 1)] * dr[(1, 1)]) / (m22 * m22);
    let bt_v = (dv[(0, 1)] * m22 - m[(0, 1)] * dv[(1, 1)]) / (m22 * m22);
    let (br, bv) = b_gradient(field.lambda(), rho, delta, bt_r, bt_v);
    Ok([delta, bt, br, bv, pr, pv])
}

/// Relative mixed-partial mismatch of the B and psi gradients, central differences of step 1e-3.
fn local_curl(field: &dyn CosetField, rho: f64, v: f64) -> Result<[f64; 2]> {
    let h = 1e-3 * rho.min(1.0);
    let (n, s) = (local_data(field, rho, v + h)?, local_data(field, rho, v - h)?);
    let (e, w) = (local_data(field, rho + h, v)?, local_data(field, rho - h, v)?);
    let c = |i: usize, j: usize| {
        let (a, b) = ((n[i] - s[i]) / (2.0 * h), (e[j] - w[j]) / (2.0 * h));
        (a - b).abs() / (1.0 + a.abs() + b.abs())
    };
    Ok([c(2, 3), c(4, 5)])
}

// ---------------------------------------------------------------------------
// quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn integrate_segment<F>(f: &F, a: f64, b: f64, gl: &(Vec<f64>, Vec<f64>)) -> Result<[f64; 2]>
where
    F: Fn(f64) -> Result<[f64; 2]>,
{
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let mut acc = [0.0; 2];
    for (x, w) in gl.0.iter().zip(&gl.1) {
        let y = f(mid + half * x)?;
        acc[0] += w * half * y[0];
        acc[1] += w * half * y[1];
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// fields

#[derive(Debug, Clone)]
pub struct ReconOptions {
    /// Abort when the relative mixed-partial mismatch of dB or dpsi exceeds this
    /// (pointwise evaluators).
    pub closure_tol: f64,
    /// Same for grid-only reconstruction, where it is limited by the finite differences.
    pub grid_closure_tol: f64,
    pub quad_nodes: usize,
    /// Grid index `(i_rho, i_v)` where B and psi vanish; defaults to `(n_rho - 1, 0)`.
    pub base: Option<(usize, usize)>,
    pub sigma: Sign,
    pub epsilon: Sign,
}

impl ReconOptions {
    pub fn for_lambda(lambda: Sign) -> ReconOptions {
        let (sigma, epsilon) = match lambda {
            Sign::Plus => (Sign::Plus, Sign::Plus),
            Sign::Minus => (Sign::Plus, Sign::Minus),
        };
        ReconOptions { closure_tol: 1e-3, grid_closure_tol: 2e-2, quad_nodes: 16, base: None, sigma, epsilon }
    }
}

#[derive(Debug, Clone)]
pub struct SpacetimeFields {
    pub grid: Grid2,
    pub lambda: Sign,
    pub sigma: Sign,
    pub epsilon: Sign,
    pub delta: Vec<f64>,
    pub btilde: Vec<f64>,
    pub b: Vec<f64>,
    pub psi: Vec<f64>,
    pub b_closure: f64,
    pub psi_closure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricSample {
    pub g_tt: f64,
    pub g_tphi: f64,
    pub g_phiphi: f64,
    pub g_rhorho: f64,
    pub g_vv: f64,
}

impl MetricSample {
    pub fn block_det(&self) -> f64 {
        self.g_tt * self.g_phiphi - self.g_tphi * self.g_tphi
    }
}

pub fn metric_components(delta: f64, b: f64, psi: f64, p: &WeylPoint) -> MetricSample {
    let lam = p.lam();
    let ep = psi.exp();
    MetricSample {
        g_tt: -lam * delta,
        g_tphi: -lam * delta * b,
        g_phiphi: -lam * delta * b * b + p.rho * p.rho / delta,
        g_rhorho: p.sigma.value() * ep / delta,
        g_vv: p.epsilon.value() * ep / delta,
    }
}

impl SpacetimeFields {
    pub fn metric_at(&self, k: usize) -> Result<MetricSample> {
        let (rho, v) = self.grid.point(k);
        let p = WeylPoint::with_signs(rho, v, self.sigma, self.epsilon)?;
        Ok(metric_components(self.delta[k], self.b[k], self.psi[k], &p))
    }

    pub fn to_csv(&self) -> String {
        to_csv(
            &self.grid,
            &["Delta", "Btilde", "B", "psi"],
            &[&self.delta, &self.btilde, &self.b, &self.psi],
        )
    }

    /// Rebuild the 2x2 coset matrices.
    pub fn m_grid(&self) -> MatrixGrid {
        MatrixGrid {
            grid: self.grid.clone(),
            lambda: self.lambda,
            values: self.delta.iter().zip(&self.btilde).map(|(&d, &b)| m_from_fields(d, b)).collect(),
        }
    }
}

/// Max of `|d_v g_rho - d_rho g_v| / (1 + |d_v g_rho| + |d_rho g_v|)` by centered grid
/// differences, skipping a two-point boundary ring when the grid is large enough.
pub fn discrete_curl(grid: &Grid2, g_rho: &[f64], g_v: &[f64]) -> f64 {
    let (_, gr_v) = grid_gradient(grid, g_rho);
    let (gv_r, _) = grid_gradient(grid, g_v);
    let ring = |n: usize| if n > 8 { 2 } else { 0 };
    let (rr, rv) = (ring(grid.n_rho()), ring(grid.n_v()));
    let mut worst: f64 = 0.0;
    for iv in rv..grid.n_v() - rv {
        for ir in rr..grid.n_rho() - rr {
            let k = grid.idx(ir, iv);
            worst = worst.max((gr_v[k] - gv_r[k]).abs() / (1.0 + gr_v[k].abs() + gv_r[k].abs()));
        }
    }
    worst
}

/// Trapezoid line integration of a gradient field: spine along v at the base rho, then rows
/// along rho. Result vanishes at the base.
pub fn integrate_gradient(grid: &Grid2, g_rho: &[f64], g_v: &[f64], base: (usize, usize)) -> Vec<f64> {
    let (nr, nv) = (grid.n_rho(), grid.n_v());
    let (br, bv) = base;
    let (hr, hv) = (grid.h_rho(), grid.h_v());
    let mut out = vec![0.0; grid.len()];
    let mut spine = vec![0.0; nv];
    for iv in bv + 1..nv {
        spine[iv] = spine[iv - 1] + 0.5 * hv * (g_v[grid.idx(br, iv - 1)] + g_v[grid.idx(br, iv)]);
    }
    for iv in (0..bv).rev() {
        spine[iv] = spine[iv + 1] - 0.5 * hv * (g_v[grid.idx(br, iv + 1)] + g_v[grid.idx(br, iv)]);
    }
    for iv in 0..nv {
        out[grid.idx(br, iv)] = spine[iv];
        for ir in br + 1..nr {
            out[grid.idx(ir, iv)] =
                out[grid.idx(ir - 1, iv)] + 0.5 * hr * (g_rho[grid.idx(ir - 1, iv)] + g_rho[grid.idx(ir, iv)]);
        }
        for ir in (0..br).rev() {
            out[grid.idx(ir, iv)] =
                out[grid.idx(ir + 1, iv)] - 0.5 * hr * (g_rho[grid.idx(ir + 1, iv)] + g_rho[grid.idx(ir, iv)]);
        }
    }
    out
}

/// Max over cells of the trapezoid loop integral divided by the cell area.
pub fn loop_closure(grid: &Grid2, g_rho: &[f64], g_v: &[f64]) -> f64 {
    let (hr, hv) = (grid.h_rho(), grid.h_v());
    let mut worst: f64 = 0.0;
    // cells touching the boundary see the one-sided stencils and are skipped when possible
    let (lo_v, hi_v) = if grid.n_v() > 4 { (1, grid.n_v() - 2) } else { (0, grid.n_v() - 1) };
    let (lo_r, hi_r) = if grid.n_rho() > 4 { (1, grid.n_rho() - 2) } else { (0, grid.n_rho() - 1) };
    for iv in lo_v..hi_v {
        for ir in lo_r..hi_r {
            let (a, b, c, d) = (grid.idx(ir, iv), grid.idx(ir + 1, iv), grid.idx(ir + 1, iv + 1), grid.idx(ir, iv + 1));
            let lp = 0.5 * hr * (g_rho[a] + g_rho[b]) + 0.5 * hv * (g_v[b] + g_v[c])
                - 0.5 * hr * (g_rho[d] + g_rho[c])
                - 0.5 * hv * (g_v[a] + g_v[d]);
            worst = worst.max(lp.abs() / (hr * hv));
        }
    }
    worst
}

/// `B` from gridded `Delta`, `Btilde` by trapezoid integration of centered-difference
/// gradients. Returns `(B, closure)`.
pub fn integrate_b(
    grid: &Grid2,
    lambda: Sign,
    delta: &[f64],
    btilde: &[f64],
    base: Option<(usize, usize)>,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let (bt_r, bt_v) = grid_gradient(grid, btilde);
    let mut gr = vec![0.0; grid.len()];
    let mut gv = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (rho, _) = grid.point(k);
        (gr[k], gv[k]) = b_gradient(lambda, rho, delta[k], bt_r[k], bt_v[k]);
    }
    let closure = loop_closure(grid, &gr, &gv);
    if !(closure <= tol) {
        return Err(Error::Inconsistency(format!("B closure residual {closure:e} above {tol:e}")));
    }
    Ok((integrate_gradient(grid, &gr, &gv, base.unwrap_or(grid.default_base())), closure))
}

/// `psi` from gridded connection components. Returns `(psi, mixed-partial residual)`.
pub fn integrate_psi(a: &ConnectionGrids, base: Option<(usize, usize)>, tol: f64) -> Result<(Vec<f64>, f64)> {
    let grid = &a.grid;
    let mut gr = vec![0.0; grid.len()];
    let mut gv = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (rho, _) = grid.point(k);
        (gr[k], gv[k]) = psi_gradient(a.lambda, rho, &a.a_rho[k], &a.a_v[k]);
    }
    let mixed = discrete_curl(grid, &gr, &gv);
    if !(mixed <= tol) {
        return Err(Error::Inconsistency(format!("psi mixed-partial residual {mixed:e} above {tol:e}")));
    }
    Ok((integrate_gradient(grid, &gr, &gv, base.unwrap_or(grid.default_base())), mixed))
}

/// Fields from a grid of 2x2 matrices only (finite differences throughout).
pub fn fields_from_grid(mg: &MatrixGrid, opts: &ReconOptions) -> Result<SpacetimeFields> {
    let mut delta = Vec::with_capacity(mg.values.len());
    let mut btilde = Vec::with_capacity(mg.values.len());
    for m in &mg.values {
        let (d, b) = fields_from_m(m)?;
        delta.push(d);
        btilde.push(b);
    }
    let (b, b_closure) = integrate_b(&mg.grid, mg.lambda, &delta, &btilde, opts.base, opts.grid_closure_tol)?;
    let conn = crate::verify::connection_a(mg)?;
    let (psi, psi_closure) = integrate_psi(&conn, opts.base, opts.grid_closure_tol)?;
    Ok(SpacetimeFields {
        grid: mg.grid.clone(),
        lambda: mg.lambda,
        sigma: opts.sigma,
        epsilon: opts.epsilon,
        delta,
        btilde,
        b,
        psi,
        b_closure,
        psi_closure,
    })
}

/// Fields from an evaluator: pointwise `Delta`, `Btilde`; `B` and `psi` by Gauss-Legendre
/// integration along an L-shaped path (v at the base rho, then rho). Closure residuals are the
/// discrete curls of the sampled gradients.
pub fn reconstruct(field: &dyn CosetField, grid: &Grid2, opts: &ReconOptions) -> Result<SpacetimeFields> {
    let local: Vec<[f64; 6]> =
        grid.points().par_iter().map(|&(r, v)| local_data(field, r, v)).collect::<Result<Vec<_>>>()?;
    let col = |j: usize| local.iter().map(|d| d[j]).collect::<Vec<f64>>();
    let (delta, btilde) = (col(0), col(1));
    let curls: Vec<[f64; 2]> =
        grid.points().par_iter().map(|&(r, v)| local_curl(field, r, v)).collect::<Result<Vec<_>>>()?;
    let b_closure = curls.iter().map(|c| c[0]).fold(0.0, f64::max);
    let psi_closure = curls.iter().map(|c| c[1]).fold(0.0, f64::max);
    if !(b_closure <= opts.closure_tol) {
        return Err(Error::Inconsistency(format!("B closure residual {b_closure:e} above {:e}", opts.closure_tol)));
    }
    if !(psi_closure <= opts.closure_tol) {
        return Err(Error::Inconsistency(format!("psi mixed-partial residual {psi_closure:e} above {:e}", opts.closure_tol)));
    }

    let gl = gauss_legendre(opts.quad_nodes);
    let (ib_r, ib_v) = opts.base.unwrap_or(grid.default_base());
    let rho_b = grid.rho[ib_r];
    let grad = |r: f64, v: f64| -> Result<[f64; 4]> {
        let d = local_data(field, r, v)?;
        Ok([d[2], d[3], d[4], d[5]])
    };
    let seg_v = |a: f64, b: f64| integrate_segment(&|v| grad(rho_b, v).map(|g| [g[1], g[3]]), a, b, &gl);
    // spine at rho_b
    let nv = grid.n_v();
    let steps_v: Vec<[f64; 2]> = (0..nv)
        .into_par_iter()
        .map(|iv| {
            if iv == ib_v {
                Ok([0.0; 2])
            } else if iv > ib_v {
                seg_v(grid.v[iv - 1], grid.v[iv])
            } else {
                seg_v(grid.v[iv + 1], grid.v[iv])
            }
        })
        .collect::<Result<_>>()?;
    let mut spine = vec![[0.0; 2]; nv];
    for iv in ib_v + 1..nv {
        spine[iv] = [spine[iv - 1][0] + steps_v[iv][0], spine[iv - 1][1] + steps_v[iv][1]];
    }
    for iv in (0..ib_v).rev() {
        spine[iv] = [spine[iv + 1][0] + steps_v[iv][0], spine[iv + 1][1] + steps_v[iv][1]];
    }
    let nr = grid.n_rho();
    let rows: Vec<Vec<[f64; 2]>> = (0..nv)
        .into_par_iter()
        .map(|iv| {
            let v = grid.v[iv];
            let seg = |a: f64, b: f64| integrate_segment(&|r| grad(r, v).map(|g| [g[0], g[2]]), a, b, &gl);
            let mut row = vec![[0.0; 2]; nr];
            row[ib_r] = spine[iv];
            for ir in ib_r + 1..nr {
                let s = seg(grid.rho[ir - 1], grid.rho[ir])?;
                row[ir] = [row[ir - 1][0] + s[0], row[ir - 1][1] + s[1]];
            }
            for ir in (0..ib_r).rev() {
                let s = seg(grid.rho[ir + 1], grid.rho[ir])?;
                row[ir] = [row[ir + 1][0] + s[0], row[ir + 1][1] + s[1]];
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut b = vec![0.0; grid.len()];
    let mut psi = vec![0.0; grid.len()];
    for (iv, row) in rows.iter().enumerate() {
        for (ir, val) in row.iter().enumerate() {
            b[grid.idx(ir, iv)] = val[0];
            psi[grid.idx(ir, iv)] = val[1];
        }
    }
    Ok(SpacetimeFields {
        grid: grid.clone(),
        lambda: field.lambda(),
        sigma: opts.sigma,
        epsilon: opts.epsilon,
        delta,
        btilde,
        b,
        psi,
        b_closure,
        psi_closure,
    })
}

/// Line integral of `(B, psi)` gradients from `from` to `to` along the L-path through
/// `(from.rho, to.v)`.
pub fn path_integral(field: &dyn CosetField, from: (f64, f64), to: (f64, f64), nodes: usize) -> Result<(f64, f64)> {
    let gl = gauss_legendre(nodes);
    let pieces = |a: f64, b: f64| ((b - a).abs() / 0.25).ceil().max(1.0) as usize;
    let mut acc = [0.0; 2];
    let nv = pieces(from.1, to.1);
    for k in 0..nv {
        let a = from.1 + (to.1 - from.1) * k as f64 / nv as f64;
        let b = from.1 + (to.1 - from.1) * (k + 1) as f64 / nv as f64;
        let s = integrate_segment(&|v| local_data(field, from.0, v).map(|d| [d[3], d[5]]), a, b, &gl)?;
        acc[0] += s[0];
        acc[1] += s[1];
    }
    let nr = pieces(from.0, to.0);
    for k in 0..nr {
        let a = from.0 + (to.0 - from.0) * k as f64 / nr as f64;
        let b = from.0 + (to.0 - from.0) * (k + 1) as f64 / nr as f64;
        let s = integrate_segment(&|r| local_data(field, r, to.1).map(|d| [d[2], d[4]]), a, b, &gl)?;
        acc[0] += s[0];
        acc[1] += s[1];
    }
    Ok((acc[0], acc[1]))
}

// ---------------------------------------------------------------------------
// special functions

/// `J_n(x)` from the unit-circle contour integral `(1/2pi) int cos(x sin t - n t) dt`.
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = 2 * ((x.abs() + order.unsigned_abs() as f64).ceil() as usize) + 64;
    let s: f64 = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            (x * t.sin() - order as f64 * t).cos()
        })
        .sum();
    s / n as f64
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// `diag(-Delta/rho, rho/Delta)`.
pub fn ward_g_matrix(delta: f64, rho: f64) -> Result<Matrix2<f64>> {
    if !(delta > 0.0) || !(rho > 0.0) {
        return Err(Error::Domain(format!("need Delta > 0 and rho > 0, got {delta}, {rho}")));
    }
    Ok(Matrix2::new(-delta / rho, 0.0, 0.0, rho / delta))
}

// ---------------------------------------------------------------------------
// reference solutions

pub const REFERENCE_NAMES: [&str; 8] = [
    "identity",
    "schwarzschild_exterior",
    "schwarzschild_aii",
    "schwarzschild_negative",
    "kasner",
    "einstein_rosen",
    "deformed_kasner",
    "deformed_schwarzschild",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    Identity,
    SchwarzschildExterior { m: f64 },
    SchwarzschildAii { m: f64 },
    SchwarzschildNegative { m: f64 },
    Kasner,
    EinsteinRosen { a: f64, b: f64, k: f64 },
    DeformedKasner { a: f64, b: f64 },
    /// First order in `xi`.
    DeformedSchwarzschild { m: f64, xi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub name: String,
    pub lambda: Sign,
    pub kind: ReferenceKind,
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        Some(x) if x.is_finite() => Ok(x),
        Some(x) => Err(Error::Parameter(format!("{key} = {x} is not finite"))),
        None => Err(Error::Parameter(format!("missing parameter '{key}'"))),
    }
}

pub fn reference_solution(name: &str, params: &BTreeMap<String, f64>) -> Result<ReferenceSolution> {
    let mass = || -> Result<f64> {
        let m = param(params, "m", Some(1.0))?;
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::Parameter(format!("m must be positive, got {m}")))
        }
    };
    let (lambda, kind) = match name {
        "identity" => (Sign::from_value(param(params, "lambda", Some(1.0))?)?, ReferenceKind::Identity),
        "schwarzschild_exterior" => (Sign::Plus, ReferenceKind::SchwarzschildExterior { m: mass()? }),
        "schwarzschild_aii" => (Sign::Plus, ReferenceKind::SchwarzschildAii { m: mass()? }),
        "schwarzschild_negative" => (Sign::Plus, ReferenceKind::SchwarzschildNegative { m: mass()? }),
        "kasner" => (Sign::Minus, ReferenceKind::Kasner),
        "einstein_rosen" => (
            Sign::Minus,
            ReferenceKind::EinsteinRosen {
                a: param(params, "a", Some(1.0))?,
                b: param(params, "b", Some(0.5))?,
                k: param(params, "k", Some(1.0))?,
            },
        ),
        "deformed_kasner" => (
            Sign::Minus,
            ReferenceKind::DeformedKasner { a: param(params, "a", Some(1.0))?, b: param(params, "b", Some(0.5))? },
        ),
        "deformed_schwarzschild" => (
            Sign::Plus,
            ReferenceKind::DeformedSchwarzschild { m: mass()?, xi: param(params, "xi", Some(1e-3))? },
        ),
        _ => return Err(Error::Unknown { name: name.to_string(), known: REFERENCE_NAMES.join(", ") }),
    };
    Ok(ReferenceSolution { name: name.to_string(), lambda, kind })
}

/// Minus-sign roots `(v - w - sqrt((v - w)^2 + rho^2)) / rho` of the lambda = 1 curve.
fn tau_minus(w: f64, rho: f64, v: f64) -> f64 {
    let d = v - w;
    (d - (d * d + rho * rho).sqrt()) / rho
}

fn tau_plus(w: f64, rho: f64, v: f64) -> f64 {
    let d = v - w;
    (d + (d * d + rho * rho).sqrt()) / rho
}

/// `ln e^psi` of the static Schwarzschild seed with rods of half-length `m` (even in `m`).
fn schwarzschild_psi(m: f64, rho: f64, v: f64) -> f64 {
    let rp = (rho * rho + (v + m) * (v + m)).sqrt();
    let rm = (rho * rho + (v - m) * (v - m)).sqrt();
    (((rp + rm).powi(2) - 4.0 * m * m) / (4.0 * rp * rm)).ln()
}

/// Einstein-Rosen `psi` with the scale `c = 4 b e^{-a k}` of `ln Delta = c cos(k v) J0(k rho)`.
fn er_psi(c: f64, k: f64, rho: f64, v: f64) -> f64 {
    let x = k * rho;
    let (j0, j1) = (bessel_j0(x), bessel_j1(x));
    let cv = (k * v).cos();
    0.25 * c * c * (x * x * (j0 * j0 + j1 * j1) - 2.0 * k * cv * cv * rho * j0 * j1)
}

impl ReferenceSolution {
    pub fn delta(&self, rho: f64, v: f64) -> f64 {
        match self.kind {
            ReferenceKind::Identity => 1.0,
            ReferenceKind::SchwarzschildExterior { m } => tau_minus(-m, rho, v) / tau_minus(m, rho, v),
            ReferenceKind::SchwarzschildAii { m } => tau_minus(m, rho, v) * tau_minus(-m, rho, v),
            ReferenceKind::SchwarzschildNegative { m } => tau_minus(m, rho, v) / tau_minus(-m, rho, v),
            ReferenceKind::Kasner => (rho / 2.0).powi(4),
            ReferenceKind::EinsteinRosen { a, b, k } => (4.0 * b * (-a * k).exp() * (k * v).cos() * bessel_j0(k * rho)).exp(),
            ReferenceKind::DeformedKasner { a, b } => {
                let bt = 2.0 * b * (-a).exp();
                (rho / 2.0).powi(4) * (2.0 * bt * v.cos() * bessel_j0(rho)).exp()
            }
            ReferenceKind::DeformedSchwarzschild { m, .. } => tau_plus(-m, rho, v) / tau_plus(m, rho, v),
        }
    }

    pub fn btilde(&self, rho: f64, v: f64) -> f64 {
        match self.kind {
            ReferenceKind::DeformedSchwarzschild { m, xi } => {
                let t0p = tau_plus(0.0, rho, v);
                let t0m = tau_minus(0.0, rho, v);
                let t1 = tau_plus(m, rho, v);
                let t2 = tau_plus(-m, rho, v);
                let pre = 2.0 * xi * t2 / (rho * (t0p - t0m) * t1 * (1.0 + t1 * t2) * (t1 - t0m) * (t2 - t0m));
                let body = t2 * t0m - t0m * t0m + t1 * (t2 + t0m) * (1.0 + t2 * t0m)
                    - t2 * t2 * (1.0 + t0m * t0m)
                    - t1 * t1 * (1.0 + t2 * t2 - t2 * t0m + t0m * t0m);
                pre * body
            }
            _ => 0.0,
        }
    }

    /// Closed-form `psi` up to an additive constant, where available.
    pub fn psi_closed(&self, rho: f64, v: f64) -> Option<f64> {
        match self.kind {
            ReferenceKind::Identity => Some(0.0),
            ReferenceKind::SchwarzschildExterior { m }
            | ReferenceKind::SchwarzschildNegative { m }
            | ReferenceKind::DeformedSchwarzschild { m, .. } => Some(schwarzschild_psi(m, rho, v)),
            ReferenceKind::Kasner => Some(8.0 * rho.ln()),
            ReferenceKind::EinsteinRosen { a, b, k } => Some(er_psi(4.0 * b * (-a * k).exp(), k, rho, v)),
            ReferenceKind::DeformedKasner { a, b } => {
                // ln Delta = 4 ln(rho/2) + F; the cross term integrates to 4 F
                let c = 4.0 * b * (-a).exp();
                let f = c * v.cos() * bessel_j0(rho);
                Some(er_psi(c, 1.0, rho, v) + 4.0 * f + 8.0 * rho.ln())
            }
            ReferenceKind::SchwarzschildAii { .. } => None,
        }
    }

    /// Fields on a grid: closed forms where known, otherwise path integration of `M`.
    pub fn fields(&self, grid: &Grid2, opts: &ReconOptions) -> Result<SpacetimeFields> {
        let mut f = reconstruct(self, grid, opts)?;
        let base = opts.base.unwrap_or(grid.default_base());
        if let Some(p0) = self.psi_closed(grid.rho[base.0], grid.v[base.1]) {
            for k in 0..grid.len() {
                let (r, v) = grid.point(k);
                f.psi[k] = self.psi_closed(r, v).unwrap() - p0;
            }
        }
        Ok(f)
    }
}

impl CosetField for ReferenceSolution {
    fn lambda(&self) -> Sign {
        self.lambda
    }

    fn m(&self, rho: f64, v: f64) -> Result<RMat> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        let d = self.delta(rho, v);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Signature(format!("{}: Delta = {d} at ({rho}, {v})", self.name)));
        }
        Ok(m_from_fields(d, self.btilde(rho, v)))
    }

    fn dm(&self, rho: f64, v: f64) -> Result<(RMat, RMat)> {
        match self.kind {
            ReferenceKind::Identity => Ok((RMat::zeros(2, 2), RMat::zeros(2, 2))),
            ReferenceKind::Kasner => {
                let d = (rho / 2.0).powi(4);
                Ok((RMat::from_diagonal(&nalgebra::dvector![4.0 * d / rho, -4.0 / (d * rho)]), RMat::zeros(2, 2)))
            }
            _ => fd_gradient(&|r, w| self.m(r, w), rho, v, DEFAULT_FD_STEP),
        }
    }
}
