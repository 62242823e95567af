//! Canonical Wiener-Hopf factorisation of matrix symbols on admissible contours.
//!
//! The general solver looks for `Phi = I + C gamma`, analytic off the contour with
//! `Phi(inf) = I`, such that `Phi- = M Phi+` on the contour. Then
//! `M- = Phi- Mc`, `M+ = Mc^{-1} Phi+^{-1}` with `Mc = (I + C gamma(0))^{-1}`, which gives
//! `M+(0) = I` and `M-(inf) = Mc`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{
    cauchy_at_zero, cauchy_integral_channels, scalar_factorize, singular_matrix, singular_s, trig_resample,
    BoundarySamples,
};
use crate::contour::{design, AdmissibleContour, PointSide};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, sigma_min_lu, sigma_min_svd, spectral_norm_estimate};
use crate::monodromy::{degree_criterion, generalized_transpose, CMat, DegreeVerdict, FamilyKind, MonodromyFamily};
use crate::weyl::{phi_roots_real, Sign, WeylPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Diagonal,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Largest accepted relative residual of `M - M- M+` at interpolated nodes.
    pub jump_tol: f64,
    /// Smallest singular value treated as numerically nonzero.
    pub sigma_threshold: f64,
    pub compute_sigma: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { jump_tol: 1e-7, sigma_threshold: 1e-6, compute_sigma: true }
    }
}

/// Output of a factorisation at one Weyl point.
#[derive(Debug, Clone)]
pub struct FactorizationResult {
    pub method: Method,
    pub point: WeylPoint,
    pub contour: AdmissibleContour,
    pub dim: usize,
    /// Collocation unknown `gamma` at the nodes.
    pub density: Vec<CMat>,
    /// `(I + C gamma(0))^{-1}` before any symmetrisation.
    pub m_complex: CMat,
    /// Reported coset matrix: real part of `(M + M^nat)/2`.
    pub m: DMatrix<f64>,
    pub asymmetry: f64,
    pub imag_part: f64,
    pub jump_residual: f64,
    pub sigma_min: Option<f64>,
    pub cond: Option<f64>,
}

impl FactorizationResult {
    pub fn det(&self) -> f64 {
        self.m.determinant()
    }
}

fn ident(n: usize) -> CMat {
    CMat::identity(n, n)
}

fn report_matrix(m: &CMat, f: &MonodromyFamily) -> (DMatrix<f64>, f64, f64) {
    let mt = generalized_transpose(m, &f.involution);
    let sym = (m + &mt) * C64::new(0.5, 0.0);
    let asym = max_abs(&(m - &mt)) / max_abs(m).max(1e-300);
    let imag = sym.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / max_abs(m).max(1e-300);
    (sym.map(|z| z.re), asym, imag)
}

/// Density data `S gamma` for each node, entrywise.
fn apply_s_matrix(g: &AdmissibleContour, density: &[CMat]) -> Vec<CMat> {
    let n = density[0].nrows();
    let mut out = vec![CMat::zeros(n, n); density.len()];
    for a in 0..n {
        for b in 0..n {
            let ch: Vec<C64> = density.iter().map(|m| m[(a, b)]).collect();
            let s = singular_s(&BoundarySamples { contour: g, values: ch });
            for (o, v) in out.iter_mut().zip(s.values) {
                o[(a, b)] = v;
            }
        }
    }
    out
}

fn cauchy_at_zero_matrix(g: &AdmissibleContour, density: &[CMat]) -> CMat {
    let n = density[0].nrows();
    CMat::from_fn(n, n, |a, b| {
        let ch: Vec<C64> = density.iter().map(|m| m[(a, b)]).collect();
        cauchy_at_zero(g, &ch)
    })
}

/// Collocation matrix `(M + I) + (M - I) S` acting on stacked columns of `gamma`.
pub fn collocation_matrix(symbol: &[CMat], g: &AdmissibleContour) -> CMat {
    let n = symbol[0].nrows();
    let nn = g.n();
    let s = singular_matrix(g);
    let mut a = CMat::zeros(n * nn, n * nn);
    for j in 0..nn {
        let mm = &symbol[j] - ident(n);
        for k in 0..nn {
            let sjk = s[(j, k)];
            for r in 0..n {
                for c in 0..n {
                    a[(j * n + r, k * n + c)] = mm[(r, c)] * sjk;
                }
            }
        }
        for r in 0..n {
            for c in 0..n {
                a[(j * n + r, j * n + c)] += symbol[j][(r, c)] + if r == c { 1.0 } else { 0.0 };
            }
        }
    }
    a
}

fn sigma_of(a: &CMat, lu: Option<&nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>) -> f64 {
    if a.nrows() <= 256 {
        sigma_min_svd(a)
    } else {
        match lu {
            Some(lu) => sigma_min_lu(lu, a.nrows()),
            None => sigma_min_lu(&a.clone().lu(), a.nrows()),
        }
    }
}

/// Smallest singular value of the collocation operator for `f` at `p` on `g`.
pub fn collocation_sigma_min(f: &MonodromyFamily, p: &WeylPoint, g: &AdmissibleContour) -> Result<f64> {
    let symbol = f.eval_on_contour(p, g)?;
    Ok(sigma_of(&collocation_matrix(&symbol, g), None))
}

/// Diagonal fast path: scalar factorisation of each diagonal entry.
pub fn factorize_diagonal(f: &MonodromyFamily, p: &WeylPoint, g: &AdmissibleContour) -> Result<FactorizationResult> {
    let symbol = f.eval_on_contour(p, g)?;
    let n = f.dim();
    let offdiag = symbol
        .iter()
        .map(|m| (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    if offdiag > 1e-14 * symbol.iter().map(max_abs).fold(0.0, f64::max) {
        return Err(Error::Argument(format!("{} is not diagonal on the contour", f.name)));
    }
    let mut plus = Vec::with_capacity(n);
    let mut facs = Vec::with_capacity(n);
    let mut jump = 0.0f64;
    let fine = g.with_nodes(2 * g.n())?;
    let fine_symbol = f.eval_on_contour(p, &fine)?;
    for i in 0..n {
        let samples = BoundarySamples { contour: g, values: symbol.iter().map(|m| m[(i, i)]).collect() };
        let fac = match scalar_factorize(&samples) {
            Ok(x) => x,
            Err(Error::NonCanonicalScalar(w)) => {
                return Err(Error::NoCanonical(format!("diagonal entry {i} has winding number {w}")));
            }
            Err(e) => return Err(e),
        };
        let lfine = trig_resample(&fac.logdensity, fine.n());
        let scale = fine_symbol.iter().map(|m| m[(i, i)].norm()).fold(0.0, f64::max);
        for (k, l) in lfine.iter().enumerate() {
            jump = jump.max((fine_symbol[k][(i, i)] - l.exp()).norm() / scale);
        }
        plus.push(fac.plus_at_zero);
        facs.push(fac);
    }
    // enforce det M = 1 (the continuous logs may differ from a zero-sum branch)
    let prod: C64 = plus.iter().product();
    let root = prod.powf(1.0 / n as f64);
    let m_complex = CMat::from_diagonal(&DVector::from_iterator(n, plus.iter().map(|x| x / root)));
    // prod is exp(C[log det](0)) = 1 up to rounding, so the rescaling only cleans noise.
    // gamma = Phi+ - Phi- with Phi+ = (Mc M+)^{-1} = 1/g+ and Phi- = M- Mc^{-1} = g-.
    let mut density = vec![CMat::zeros(n, n); g.n()];
    for (i, fac) in facs.iter().enumerate() {
        let (gm, gp) = fac.boundary_factors();
        for k in 0..g.n() {
            density[k][(i, i)] = 1.0 / gp[k] - gm[k];
        }
    }
    let (m, asymmetry, imag_part) = report_matrix(&m_complex, f);
    Ok(FactorizationResult {
        method: Method::Diagonal,
        point: *p,
        contour: g.clone(),
        dim: n,
        density,
        m_complex,
        m,
        asymmetry,
        imag_part,
        jump_residual: jump,
        sigma_min: None,
        cond: None,
    })
}

/// General collocation solver.
pub fn factorize_general(
    f: &MonodromyFamily,
    p: &WeylPoint,
    g: &AdmissibleContour,
    opts: &SolverOptions,
) -> Result<FactorizationResult> {
    let symbol = f.eval_on_contour(p, g)?;
    let n = f.dim();
    let nn = g.n();
    let a = collocation_matrix(&symbol, g);
    let lu = a.clone().lu();
    let mut rhs = CMat::zeros(n * nn, n);
    for j in 0..nn {
        let r = (ident(n) - &symbol[j]) * C64::new(2.0, 0.0);
        for i in 0..n {
            for c in 0..n {
                rhs[(j * n + i, c)] = r[(i, c)];
            }
        }
    }
    let (sigma, cond) = if opts.compute_sigma {
        let s = sigma_of(&a, Some(&lu));
        let smax = spectral_norm_estimate(&a);
        (Some(s), Some(smax / s))
    } else {
        (None, None)
    };
    if let Some(s) = sigma {
        if s < opts.sigma_threshold {
            let report = injectivity_diagnostic(f, p, g, nn)?;
            if report.verdict == Verdict::NoCanonical {
                return Err(Error::NoCanonical(format!(
                    "collocation operator singular: sigma_min {:.3e} at N={}, {:.3e} at N={}",
                    report.sigma_min,
                    nn,
                    report.sigma_min_refined,
                    2 * nn
                )));
            }
        }
    }
    let sol = lu.solve(&rhs).ok_or_else(|| Error::NoCanonical("collocation matrix is exactly singular".into()))?;
    if sol.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("non-finite density".into()));
    }
    let density: Vec<CMat> = (0..nn).map(|j| CMat::from_fn(n, n, |i, c| sol[(j * n + i, c)])).collect();
    let phi0 = ident(n) + cauchy_at_zero_matrix(g, &density);
    let m_complex = phi0.try_inverse().ok_or_else(|| Error::Numerical("I + C gamma(0) is singular".into()))?;
    let (m, asymmetry, imag_part) = report_matrix(&m_complex, f);
    let mut r = FactorizationResult {
        method: Method::General,
        point: *p,
        contour: g.clone(),
        dim: n,
        density,
        m_complex,
        m,
        asymmetry,
        imag_part,
        jump_residual: f64::NAN,
        sigma_min: sigma,
        cond,
    };
    r.jump_residual = verify_factorization(&r, f)?;
    if !(r.jump_residual < opts.jump_tol) {
        return Err(Error::Numerical(format!(
            "factorisation residual {:.3e} exceeds {:.1e} at N={nn}",
            r.jump_residual, opts.jump_tol
        )));
    }
    Ok(r)
}

/// `(I + C gamma(0))^{-1}` from raw symbol samples at the nodes; no checks or diagnostics.
pub fn coset_from_samples(symbol: &[CMat], g: &AdmissibleContour) -> Result<CMat> {
    let n = symbol[0].nrows();
    let nn = g.n();
    let a = collocation_matrix(symbol, g);
    let mut rhs = CMat::zeros(n * nn, n);
    for j in 0..nn {
        let r = (ident(n) - &symbol[j]) * C64::new(2.0, 0.0);
        for i in 0..n {
            for c in 0..n {
                rhs[(j * n + i, c)] = r[(i, c)];
            }
        }
    }
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::NoCanonical("collocation matrix is exactly singular".into()))?;
    let density: Vec<CMat> = (0..nn).map(|j| CMat::from_fn(n, n, |i, c| sol[(j * n + i, c)])).collect();
    (ident(n) + cauchy_at_zero_matrix(g, &density)).try_inverse().ok_or_else(|| Error::Numerical("I + C gamma(0) is singular".into()))
}

/// Diagonal path when the symbol is diagonal, general solver otherwise.
pub fn factorize(f: &MonodromyFamily, p: &WeylPoint, g: &AdmissibleContour, opts: &SolverOptions) -> Result<FactorizationResult> {
    if f.is_diagonal() {
        factorize_diagonal(f, p, g)
    } else {
        factorize_general(f, p, g, opts)
    }
}

/// General solver with node doubling from `g.n()` until the residual tolerance is met.
pub fn factorize_adaptive(
    f: &MonodromyFamily,
    p: &WeylPoint,
    g: &AdmissibleContour,
    opts: &SolverOptions,
    cap: usize,
) -> Result<FactorizationResult> {
    let mut n = g.n();
    loop {
        let gg = g.with_nodes(n)?;
        match factorize_general(f, p, &gg, opts) {
            Err(Error::Numerical(msg)) if 2 * n <= cap => {
                let _ = msg;
                n *= 2;
            }
            other => return other,
        }
    }
}

/// Boundary values of `Phi+ = I + C+ gamma` and `Phi- = I + C- gamma` at the nodes.
pub fn boundary_phis(g: &AdmissibleContour, density: &[CMat]) -> (Vec<CMat>, Vec<CMat>) {
    let n = density[0].nrows();
    let s = apply_s_matrix(g, density);
    let half = C64::new(0.5, 0.0);
    let plus = density.iter().zip(&s).map(|(d, sd)| ident(n) + (d + sd) * half).collect();
    let minus = density.iter().zip(&s).map(|(d, sd)| ident(n) + (sd - d) * half).collect();
    (plus, minus)
}

/// Relative residual `max |M - M- M+| / max |M|` at 2N interpolated nodes, using the reported
/// (symmetrised) matrix in `M-` and `M+`. Also folds in `|M+(0) - I|`.
pub fn verify_factorization(r: &FactorizationResult, f: &MonodromyFamily) -> Result<f64> {
    let n = r.dim;
    let fine = r.contour.with_nodes(2 * r.contour.n())?;
    let dens: Vec<CMat> = {
        let mut out = vec![CMat::zeros(n, n); fine.n()];
        for a in 0..n {
            for b in 0..n {
                let ch: Vec<C64> = r.density.iter().map(|m| m[(a, b)]).collect();
                for (o, v) in out.iter_mut().zip(trig_resample(&ch, fine.n())) {
                    o[(a, b)] = v;
                }
            }
        }
        out
    };
    let symbol = f.eval_on_contour(&r.point, &fine)?;
    let (plus, minus) = boundary_phis(&fine, &dens);
    let mc = r.m.map(|x| C64::new(x, 0.0));
    let mc_inv = mc.clone().try_inverse().ok_or_else(|| Error::Numerical("reported M is singular".into()))?;
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for j in 0..fine.n() {
        let pinv = plus[j].clone().try_inverse().ok_or_else(|| Error::Numerical("Phi+ singular on the contour".into()))?;
        let mminus = &minus[j] * &mc;
        let mplus = &mc_inv * pinv;
        worst = worst.max(max_abs(&(&symbol[j] - mminus * mplus)));
        scale = scale.max(max_abs(&symbol[j]));
    }
    let phi0 = ident(n) + cauchy_at_zero_matrix(&r.contour, &r.density);
    let plus0 = &mc_inv * phi0.try_inverse().unwrap_or_else(|| ident(n) * C64::new(f64::NAN, 0.0));
    let norm0 = max_abs(&(plus0 - ident(n)));
    Ok((worst / scale).max(norm0))
}

/// Evaluator for the normalised plus factor `X(tau) = M+(tau)` of a solved factorisation.
#[derive(Debug, Clone)]
pub struct PlusFactor {
    pub family: MonodromyFamily,
    pub point: WeylPoint,
    pub contour: AdmissibleContour,
    pub density: Vec<CMat>,
    pub m_inv: CMat,
    boundary_plus: Vec<CMat>,
}

impl PlusFactor {
    pub fn new(r: &FactorizationResult, f: &MonodromyFamily) -> Result<PlusFactor> {
        let m_inv = r.m_complex.clone().try_inverse().ok_or_else(|| Error::Numerical("M singular".into()))?;
        let (plus, _) = boundary_phis(&r.contour, &r.density);
        let mut boundary_plus = Vec::with_capacity(plus.len());
        for ph in plus {
            boundary_plus.push(&m_inv * ph.try_inverse().ok_or_else(|| Error::Numerical("Phi+ singular".into()))?);
        }
        Ok(PlusFactor { family: f.clone(), point: r.point, contour: r.contour.clone(), density: r.density.clone(), m_inv, boundary_plus })
    }

    /// `M+` at the nodes (inside limit).
    pub fn boundary(&self) -> &[CMat] {
        &self.boundary_plus
    }

    fn cauchy(&self, tau: C64) -> Result<CMat> {
        let n = self.m_inv.nrows();
        let chans: Vec<Vec<C64>> =
            (0..n * n).map(|q| self.density.iter().map(|m| m[(q / n, q % n)]).collect()).collect();
        let v = cauchy_integral_channels(&self.contour, &chans, tau)?;
        Ok(CMat::from_fn(n, n, |a, b| v[a * n + b]))
    }

    /// `M+(tau)` off the contour; outside it is continued through `M+ = M-^{-1} M`.
    pub fn at(&self, tau: C64) -> Result<CMat> {
        let n = self.m_inv.nrows();
        let phi = ident(n) + self.cauchy(tau)?;
        let phinv = phi.try_inverse().ok_or_else(|| Error::Numerical(format!("Phi singular at {tau}")))?;
        match self.contour.contains(tau) {
            PointSide::Inside => Ok(&self.m_inv * phinv),
            PointSide::Outside => Ok(&self.m_inv * phinv * self.family.eval_tau(tau, &self.point)?),
            PointSide::OnCurve(_) => Err(Error::Domain(format!("{tau} lies on the contour"))),
        }
    }
}

/// Node index of the involution image of each node.
pub fn involution_index(g: &AdmissibleContour) -> Vec<usize> {
    let n = g.n();
    (0..n)
        .map(|j| match g.lambda {
            Sign::Plus => (n / 2 + n - j) % n,
            Sign::Minus => (n - j) % n,
        })
        .collect()
}

/// `max |M(tau) - X^nat(-lambda/tau) M X(tau)|` over the nodes, relative to `max |M|`.
pub fn symmetric_form_check(r: &FactorizationResult, f: &MonodromyFamily) -> Result<f64> {
    let pf = PlusFactor::new(r, f)?;
    let symbol = f.eval_on_contour(&r.point, &r.contour)?;
    let mc = r.m.map(|x| C64::new(x, 0.0));
    let idx = involution_index(&r.contour);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for j in 0..r.contour.n() {
        let xi = generalized_transpose(&pf.boundary()[idx[j]], &f.involution);
        let rec = xi * &mc * &pf.boundary()[j];
        worst = worst.max(max_abs(&(&symbol[j] - rec)));
        scale = scale.max(max_abs(&symbol[j]));
    }
    Ok(worst / scale)
}

/// `(-M, true)` when a 2x2 coset matrix has `M22 < 0`, else `(M, false)`. The overall sign
/// is not fixed by the factorisation; it is a convention of the metric dictionary.
pub fn positive_representative(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if m.nrows() == 2 && m[(1, 1)] < 0.0 {
        (-m, true)
    } else {
        (m.clone(), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Canonical,
    Borderline,
    NoCanonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub verdict: Verdict,
    pub sigma_min: f64,
    pub sigma_min_refined: f64,
    pub n: usize,
    pub criterion: Option<DegreeVerdict>,
}

/// Absolute floor below which sigma_min is rounding noise (relative to the operator norm).
pub const SIGMA_FLOOR_REL: f64 = 1e-13;

/// Singular-value test of the collocation operator at `n` and `2n` nodes.
pub fn injectivity_diagnostic(f: &MonodromyFamily, p: &WeylPoint, g: &AdmissibleContour, n: usize) -> Result<ExistenceReport> {
    let g1 = g.with_nodes(n)?;
    let g2 = g.with_nodes(2 * n)?;
    let a1 = collocation_matrix(&f.eval_on_contour(p, &g1)?, &g1);
    let a2 = collocation_matrix(&f.eval_on_contour(p, &g2)?, &g2);
    let s1 = sigma_of(&a1, None);
    let s2 = sigma_of(&a2, None);
    let floor = SIGMA_FLOOR_REL * spectral_norm_estimate(&a2);
    let thr = SolverOptions::default().sigma_threshold;
    let verdict = if s1 < thr && s2 < (s1 / 2.0).max(floor) {
        Verdict::NoCanonical
    } else if s1 < thr || s2 < thr {
        Verdict::Borderline
    } else {
        Verdict::Canonical
    };
    Ok(ExistenceReport {
        verdict,
        sigma_min: s1,
        sigma_min_refined: s2,
        n,
        criterion: f.degree_data().map(|d| degree_criterion(&d)),
    })
}

/// Stable root `(d - sqrt(d^2 + rho^2)) / rho`.
fn minus_root(d: f64, rho: f64) -> f64 {
    let r = (d * d + rho * rho).sqrt();
    if d > 0.0 {
        -rho / (d + r)
    } else {
        (d - r) / rho
    }
}

/// Kerr poles `(tau1, tau2)` at `p`.
pub fn kerr_roots(p: &WeylPoint, m: f64, a: f64) -> (f64, f64) {
    let c = (m * m - a * a).sqrt();
    (minus_root(p.v - c, p.rho), minus_root(p.v + c, p.rho))
}

/// Left-hand side of the determinant condition whose zero set is the Kerr ergosurface.
pub fn kerr_ergosurface_residual(p: &WeylPoint, m: f64, a: f64) -> Result<f64> {
    if !(m > a && a > 0.0) {
        return Err(Error::Parameter(format!("need m > a > 0, got m={m}, a={a}")));
    }
    let (t1, t2) = kerr_roots(p, m, a);
    let (rho, mv) = (p.rho, m - p.v);
    let q = t1 * t2;
    Ok(-16.0 * mv * mv * q * q
        + rho * rho * (1.0 + 4.0 * t1.powi(3) * t2 + 6.0 * q * q + 4.0 * t1 * t2.powi(3) + q.powi(4))
        - 8.0 * rho * mv * q * (-t1 - t2 + t1 * t1 * t2 + t1 * t2 * t2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgoSample {
    pub y: f64,
    pub u: f64,
    pub rho: f64,
    pub v: f64,
}

fn residual_on_ray(u: f64, y: f64, m: f64, a: f64) -> Result<f64> {
    let c = (m * m - a * a).sqrt();
    let rho = ((u * u - c * c) * (1.0 - y * y)).sqrt();
    kerr_ergosurface_residual(&WeylPoint::new(rho, u * y, Sign::Plus)?, m, a)
}

/// Root of the ergosurface residual along the ray of fixed prolate `y`.
pub fn ergosurface_root(y: f64, m: f64, a: f64) -> Result<f64> {
    let c = (m * m - a * a).sqrt();
    let span = 10.0 * m;
    let k = 2000;
    let at = |i: usize| c + span * (i as f64 / k as f64).powi(2);
    let mut prev = (at(1), residual_on_ray(at(1), y, m, a)?);
    for i in 2..=k {
        let u = at(i);
        let r = residual_on_ray(u, y, m, a)?;
        if prev.1 == 0.0 {
            return Ok(prev.0);
        }
        if prev.1.signum() != r.signum() {
            let (mut lo, mut hi, mut flo) = (prev.0, u, prev.1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = residual_on_ray(mid, y, m, a)?;
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * hi {
                    break;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = (u, r);
    }
    Err(Error::Numerical(format!("no sign change of the ergosurface residual along y={y} for u in ({c}, {})", c + span)))
}

/// Trace the ergosurface at `samples` equispaced `y` in [-1, 1]. At `|y| = 1` the ray lies
/// on the axis, so the endpoint value is extrapolated from nearby rays.
pub fn ergosurface_trace(m: f64, a: f64, samples: usize) -> Result<Vec<ErgoSample>> {
    if !(m > a && a > 0.0) {
        return Err(Error::Parameter(format!("need m > a > 0, got m={m}, a={a}")));
    }
    if samples < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    let c = (m * m - a * a).sqrt();
    let ys: Vec<f64> = (0..samples).map(|k| -1.0 + 2.0 * k as f64 / (samples - 1) as f64).collect();
    ys.par_iter()
        .map(|&y| {
            let u = if y.abs() >= 1.0 {
                // cubic extrapolation in the distance to the axis
                let ds = [1e-3, 2e-3, 3e-3, 4e-3];
                let us: Vec<f64> =
                    ds.iter().map(|d| ergosurface_root(y.signum() * (1.0 - d), m, a)).collect::<Result<_>>()?;
                4.0 * us[0] - 6.0 * us[1] + 4.0 * us[2] - us[3]
            } else {
                ergosurface_root(y, m, a)?
            };
            let rho = ((u * u - c * c).max(0.0) * (1.0 - y * y)).sqrt();
            Ok(ErgoSample { y, u, rho, v: u * y })
        })
        .collect()
}

/// A default contour for a family at a point: the distinguished poles inside, except for
/// Kasner where `tau0` lies outside; unit circle for pole-free symbols.
pub fn default_contour(f: &MonodromyFamily, p: &WeylPoint, n: usize) -> Result<AdmissibleContour> {
    match f.kind {
        FamilyKind::Identity { .. } | FamilyKind::EinsteinRosen { .. } | FamilyKind::SchwarzschildDeformed { .. } => {
            crate::contour::unit_circle(p.lambda, n)
        }
        FamilyKind::KasnerPower { .. } => design::separating_contour(p.lambda, &[], &f.primary_poles(p), n),
        _ => design::separating_contour(p.lambda, &f.primary_poles(p), &[], n),
    }
}

/// Contour for Schwarzschild case 1..4 at `p`.
pub fn schwarzschild_contour(m: f64, p: &WeylPoint, case: u8, n: usize) -> Result<AdmissibleContour> {
    let t1 = phi_roots_real(m, p).1.re;
    let t2 = phi_roots_real(-m, p).1.re;
    design::schwarzschild_case_contour(case, t1, t2, n)
}

/// Factorise at many points in parallel; `contour` supplies the contour for each point.
pub fn factorize_many<F>(f: &MonodromyFamily, points: &[WeylPoint], contour: F, opts: &SolverOptions) -> Vec<Result<FactorizationResult>>
where
    F: Fn(&WeylPoint) -> Result<AdmissibleContour> + Sync,
{
    points.par_iter().map(|p| factorize(f, p, &contour(p)?, opts)).collect()
}
