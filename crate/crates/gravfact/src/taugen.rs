//! Lax pairs `(M, X)`, the tau-invariance 1-form, generator pairs and products.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::cauchy::spectral_derivative;
use crate::contour::AdmissibleContour;
use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::monodromy::{CMat, MonodromyFamily};
use crate::recon::{CosetField, RMat};
use crate::solver::{factorize, PlusFactor, SolverOptions};
use crate::verify::{phi_branch, Branch};
use crate::weyl::{Sign, WeylPoint};

fn cm(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn invert(x: &CMat, what: &str) -> Result<CMat> {
    x.clone().try_inverse().ok_or_else(|| Error::Numerical(format!("{what} is singular")))
}

/// A coset field `M` together with a Lax solution `X(tau, rho, v)`.
pub trait LaxPair: CosetField + Send {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// Both `M` and `X` are diagonal for every argument.
    fn is_diagonal(&self) -> bool;
    fn x(&self, tau: C64, rho: f64, v: f64) -> Result<CMat>;

    /// `(dX/dtau, dX/drho, dX/dv)`; Richardson central differences by default.
    fn dx(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let ht = 1e-5 * tau.norm().max(1e-3);
        let hr = (1e-5 * rho.max(1.0)).min(rho / 4.0);
        let hv = 1e-5 * v.abs().max(1.0);
        let rich = |f: &dyn Fn(f64) -> Result<CMat>, h: f64| -> Result<CMat> {
            let cd = |s: f64| -> Result<CMat> { Ok((f(s)? - f(-s)?) / c(2.0 * s)) };
            Ok((cd(h / 2.0)? * c(4.0) - cd(h)?) / c(3.0))
        };
        Ok([
            rich(&|s| self.x(tau + s, rho, v), ht)?,
            rich(&|s| self.x(tau, rho + s, v), hr)?,
            rich(&|s| self.x(tau, rho, v + s), hv)?,
        ])
    }

    /// Right logarithmic derivatives `dX X^{-1}` in `(tau, rho, v)`.
    fn log_derivs(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let inv = invert(&self.x(tau, rho, v)?, "X")?;
        let [a, b, d] = self.dx(tau, rho, v)?;
        Ok([a * &inv, b * &inv, d * &inv])
    }
}

/// The two coefficient matrices `(G_rho, G_v)` of the tau-invariance 1-form.
pub fn g_expression(pair: &dyn LaxPair, tau: C64, p: &WeylPoint) -> Result<(CMat, CMat)> {
    if tau.norm() == 0.0 {
        return Err(Error::Domain("G is undefined at tau = 0".into()));
    }
    let (rho, v) = (p.rho, p.v);
    let lam = pair.lambda().value();
    let m = cm(&pair.m(rho, v)?);
    let (m_r, m_v) = pair.dm(rho, v)?;
    let [l_t, l_r, l_v] = pair.log_derivs(tau, rho, v)?;
    let k = (tau * tau + lam) / tau;
    let g_rho = cm(&m_r) * tau + &m * &l_t * ((lam - tau * tau) / rho) + &m * &l_r * k;
    let g_v = cm(&m_v) * tau + &m * &l_t * (tau * (2.0 * lam / rho)) + &m * &l_v * k;
    Ok((g_rho, g_v))
}

/// Number of contour samples in [`tau_invariance_residual`].
pub const INVARIANCE_SAMPLES: usize = 32;

/// Max over contour samples of `|d G / d tau|` for both components; the tau derivative is a
/// central difference with step `1e-5 |tau|` extrapolated once.
pub fn tau_invariance_residual(pair: &dyn LaxPair, g: &AdmissibleContour, p: &WeylPoint) -> Result<f64> {
    let vals: Vec<f64> = (0..INVARIANCE_SAMPLES)
        .into_par_iter()
        .map(|j| {
            let tau = g.point(2.0 * std::f64::consts::PI * (j as f64 + 0.5) / INVARIANCE_SAMPLES as f64);
            let h = 1e-5 * tau.norm();
            let cd = |s: f64| -> Result<(CMat, CMat)> {
                let (a1, b1) = g_expression(pair, tau + s, p)?;
                let (a0, b0) = g_expression(pair, tau - s, p)?;
                Ok(((a1 - a0) / c(2.0 * s), (b1 - b0) / c(2.0 * s)))
            };
            let (r1, v1) = cd(h)?;
            let (r2, v2) = cd(h / 2.0)?;
            let dr = (r2 * c(4.0) - r1) / c(3.0);
            let dv = (v2 * c(4.0) - v1) / c(3.0);
            Ok(max_abs(&dr).max(max_abs(&dv)))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Partials `(d tau/d rho, d tau/d v)` of a real root of
/// `omega = v + (lambda/2) rho (lambda - tau^2)/tau` at fixed `omega`.
pub fn root_partials(tau: f64, rho: f64, lambda: Sign) -> (f64, f64) {
    let lam = lambda.value();
    let f_tau = -rho / (2.0 * tau * tau) - lam * rho / 2.0;
    let f_rho = 1.0 / (2.0 * tau) - lam * tau / 2.0;
    (-f_rho / f_tau, -1.0 / f_tau)
}

fn real_root(omega: f64, rho: f64, v: f64, lambda: Sign, branch: Branch) -> Result<f64> {
    let t = phi_branch(omega, rho, v, lambda, branch)?;
    if t.im.abs() > 1e-12 * t.norm().max(1.0) {
        return Err(Error::Domain(format!("root for omega = {omega} is complex at (rho, v) = ({rho}, {v})")));
    }
    if t.re == 0.0 {
        return Err(Error::Domain(format!("root for omega = {omega} vanishes")));
    }
    Ok(t.re)
}

/// Diagonal entry of `M`: value and partials.
#[derive(Debug, Clone, Copy)]
pub struct MEntry {
    pub value: f64,
    pub d_rho: f64,
    pub d_v: f64,
}

/// Diagonal entry of `X`: value and logarithmic partials in `(tau, rho, v)`.
#[derive(Debug, Clone, Copy)]
pub struct XEntry {
    pub value: C64,
    pub log_d: [C64; 3],
}

type MEntries = dyn Fn(f64, f64) -> Result<Vec<MEntry>> + Send + Sync;
type XEntries = dyn Fn(C64, f64, f64) -> Result<Vec<XEntry>> + Send + Sync;

/// Pair of diagonal matrices given entrywise with exact derivatives.
#[derive(Clone)]
pub struct DiagonalPair {
    pub label: String,
    pub lambda: Sign,
    pub size: usize,
    m_entries: Arc<MEntries>,
    x_entries: Arc<XEntries>,
}

impl DiagonalPair {
    pub fn new(
        label: &str,
        lambda: Sign,
        size: usize,
        m_entries: impl Fn(f64, f64) -> Result<Vec<MEntry>> + Send + Sync + 'static,
        x_entries: impl Fn(C64, f64, f64) -> Result<Vec<XEntry>> + Send + Sync + 'static,
    ) -> DiagonalPair {
        DiagonalPair { label: label.into(), lambda, size, m_entries: Arc::new(m_entries), x_entries: Arc::new(x_entries) }
    }
}

impl CosetField for DiagonalPair {
    fn lambda(&self) -> Sign {
        self.lambda
    }
    fn m(&self, rho: f64, v: f64) -> Result<RMat> {
        let e = (self.m_entries)(rho, v)?;
        Ok(RMat::from_diagonal(&nalgebra::DVector::from_iterator(e.len(), e.iter().map(|x| x.value))))
    }
    fn dm(&self, rho: f64, v: f64) -> Result<(RMat, RMat)> {
        let e = (self.m_entries)(rho, v)?;
        let n = e.len();
        Ok((
            RMat::from_diagonal(&nalgebra::DVector::from_iterator(n, e.iter().map(|x| x.d_rho))),
            RMat::from_diagonal(&nalgebra::DVector::from_iterator(n, e.iter().map(|x| x.d_v))),
        ))
    }
}

fn cdiag(vals: impl Iterator<Item = C64>, n: usize) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, vals))
}

impl LaxPair for DiagonalPair {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim(&self) -> usize {
        self.size
    }
    fn is_diagonal(&self) -> bool {
        true
    }
    fn x(&self, tau: C64, rho: f64, v: f64) -> Result<CMat> {
        let e = (self.x_entries)(tau, rho, v)?;
        Ok(cdiag(e.iter().map(|x| x.value), e.len()))
    }
    fn dx(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let e = (self.x_entries)(tau, rho, v)?;
        let n = e.len();
        Ok([0, 1, 2].map(|q| cdiag(e.iter().map(|x| x.value * x.log_d[q]), n)))
    }
    fn log_derivs(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let e = (self.x_entries)(tau, rho, v)?;
        let n = e.len();
        Ok([0, 1, 2].map(|q| cdiag(e.iter().map(|x| x.log_d[q]), n)))
    }
}

/// `(I, I)` in dimension `n`.
pub fn identity_pair(n: usize, lambda: Sign) -> DiagonalPair {
    DiagonalPair::new(
        "identity",
        lambda,
        n,
        move |_, _| Ok(vec![MEntry { value: 1.0, d_rho: 0.0, d_v: 0.0 }; n]),
        move |_, _, _| Ok(vec![XEntry { value: c(1.0), log_d: [c(0.0); 3] }; n]),
    )
}

/// `diag((rho/2)^4, (rho/2)^-4)` with `X = diag(p^2, p^-2)`, `p = tau^2 + 2 (v/rho) tau + 1`.
pub fn kasner_pair() -> DiagonalPair {
    DiagonalPair::new(
        "kasner",
        Sign::Minus,
        2,
        |rho, _| {
            let s = (rho / 2.0).powi(4);
            Ok(vec![
                MEntry { value: s, d_rho: 4.0 * s / rho, d_v: 0.0 },
                MEntry { value: 1.0 / s, d_rho: -4.0 / (s * rho), d_v: 0.0 },
            ])
        },
        |tau, rho, v| {
            let p = tau * tau + tau * (2.0 * v / rho) + 1.0;
            if p.norm() == 0.0 {
                return Err(Error::Domain(format!("X is singular at tau = {tau}")));
            }
            let d = [(tau * 2.0 + 2.0 * v / rho) / p, tau * (-2.0 * v / (rho * rho)) / p, tau * (2.0 / rho) / p];
            Ok(vec![
                XEntry { value: p * p, log_d: d.map(|x| x * 2.0) },
                XEntry { value: (p * p).inv(), log_d: d.map(|x| x * -2.0) },
            ])
        },
    )
}

/// Canonical factors of `diag(omega^4, omega^-4)`; needs `|v| > rho`.
pub fn kasner_canonical_pair() -> DiagonalPair {
    let tau0 = |rho: f64, v: f64| -> Result<(f64, f64, f64)> {
        if v.abs() <= rho {
            return Err(Error::Domain(format!("kasner_canonical needs |v| > rho, got rho = {rho}, v = {v}")));
        }
        let t = real_root(0.0, rho, v, Sign::Minus, Branch::Minus)?;
        let (tr, tv) = root_partials(t, rho, Sign::Minus);
        Ok((t, tr, tv))
    };
    DiagonalPair::new(
        "kasner_canonical",
        Sign::Minus,
        2,
        move |rho, v| {
            let (t, tr, tv) = tau0(rho, v)?;
            let s = rho * t / 2.0;
            let (sr, sv) = (t / 2.0 + rho * tr / 2.0, rho * tv / 2.0);
            let f = s.powi(4);
            Ok(vec![
                MEntry { value: f, d_rho: 4.0 * f * sr / s, d_v: 4.0 * f * sv / s },
                MEntry { value: 1.0 / f, d_rho: -4.0 * sr / (s * f), d_v: -4.0 * sv / (s * f) },
            ])
        },
        move |tau, rho, v| {
            let (t, tr, tv) = tau0(rho, v)?;
            let q = tau / t - 1.0;
            if q.norm() == 0.0 {
                return Err(Error::Domain(format!("X is singular at tau = {tau}")));
            }
            // d q = -tau dt / t^2
            let d = [c(1.0 / t) / q, -tau * (tr / (t * t)) / q, -tau * (tv / (t * t)) / q];
            let q4 = q.powi(4);
            Ok(vec![XEntry { value: q4, log_d: d.map(|x| x * 4.0) }, XEntry { value: q4.inv(), log_d: d.map(|x| x * -4.0) }])
        },
    )
}

/// Interior Schwarzschild pair `M = diag(-t2/t1, -t1/t2)`, `X = diag(x, 1/x)`,
/// `x = (1 - tau t1)/(1 - tau t2)`, with `t1, t2` the plus roots for `omega = m, -m`.
pub fn interior_schwarzschild_pair(m: f64) -> Result<DiagonalPair> {
    if !(m > 0.0) {
        return Err(Error::Parameter(format!("mass must be positive, got {m}")));
    }
    let roots = move |rho: f64, v: f64| -> Result<[(f64, f64, f64); 2]> {
        if !(rho < m - v.abs()) {
            return Err(Error::Domain(format!("({rho}, {v}) is outside the interior region rho < m - |v|")));
        }
        let one = |om: f64| -> Result<(f64, f64, f64)> {
            let t = real_root(om, rho, v, Sign::Minus, Branch::Plus)?;
            let (tr, tv) = root_partials(t, rho, Sign::Minus);
            Ok((t, tr, tv))
        };
        Ok([one(m)?, one(-m)?])
    };
    Ok(DiagonalPair::new(
        "interior_schwarzschild",
        Sign::Minus,
        2,
        move |rho, v| {
            let [(t1, t1r, t1v), (t2, t2r, t2v)] = roots(rho, v)?;
            let a = -t2 / t1;
            let (lr, lv) = (t2r / t2 - t1r / t1, t2v / t2 - t1v / t1);
            Ok(vec![
                MEntry { value: a, d_rho: a * lr, d_v: a * lv },
                MEntry { value: 1.0 / a, d_rho: -lr / a, d_v: -lv / a },
            ])
        },
        move |tau, rho, v| {
            let [(t1, t1r, t1v), (t2, t2r, t2v)] = roots(rho, v)?;
            let (u1, u2) = (1.0 - tau * t1, 1.0 - tau * t2);
            if u1.norm() == 0.0 || u2.norm() == 0.0 {
                return Err(Error::Domain(format!("X is singular at tau = {tau}")));
            }
            let d = [-t1 / u1 + t2 / u2, -tau * t1r / u1 + tau * t2r / u2, -tau * t1v / u1 + tau * t2v / u2];
            let x = u1 / u2;
            Ok(vec![XEntry { value: x, log_d: d }, XEntry { value: x.inv(), log_d: d.map(|z| -z) }])
        },
    ))
}

/// `J_0 .. J_n(x)` by backward recurrence, normalised with `J_0 + 2 sum J_2k = 1`.
fn bessel_sequence(n: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        return out;
    }
    let top = n.max(x.abs().ceil() as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2 + 1);
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for w in vals.iter_mut().skip(k - 1) {
                *w *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(n + 1);
    vals.iter().map(|w| w / norm).collect()
}

/// Einstein-Rosen pair: `M = diag(e^F, e^-F)`, `F = c cos(kv) J0(k rho)`, `c = 4 b e^{-ak}`,
/// and `X = diag(e^S, e^-S)` with `S = c sum_{n>=1} J_n(k rho) cos(kv + n pi/2) tau^n`.
pub fn einstein_rosen_pair(a: f64, b: f64, k: f64) -> Result<DiagonalPair> {
    if !(k > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Parameter(format!("need k > 0 and finite a, b; got a={a}, b={b}, k={k}")));
    }
    let amp = 4.0 * b * (-a * k).exp();
    Ok(DiagonalPair::new(
        "einstein_rosen",
        Sign::Minus,
        2,
        move |rho, v| {
            let j = bessel_sequence(1, k * rho);
            let f = amp * (k * v).cos() * j[0];
            let fr = -amp * k * (k * v).cos() * j[1];
            let fv = -amp * k * (k * v).sin() * j[0];
            let e = f.exp();
            Ok(vec![
                MEntry { value: e, d_rho: e * fr, d_v: e * fv },
                MEntry { value: 1.0 / e, d_rho: -fr / e, d_v: -fv / e },
            ])
        },
        move |tau, rho, v| {
            let x = k * rho;
            let nmax = (1.4 * x * tau.norm()).ceil() as usize + 40;
            let j = bessel_sequence(nmax + 1, x);
            let (mut s, mut st, mut sr, mut sv) = (c(0.0), c(0.0), c(0.0), c(0.0));
            let mut pw = c(1.0);
            for n in 1..=nmax {
                let ph = k * v + n as f64 * FRAC_PI_2;
                let prev = pw;
                pw *= tau;
                st += prev * (n as f64 * j[n] * ph.cos());
                s += pw * (j[n] * ph.cos());
                sr += pw * (k * (j[n - 1] - j[n + 1]) / 2.0 * ph.cos());
                sv += pw * (-k * j[n] * ph.sin());
            }
            let d = [st * amp, sr * amp, sv * amp];
            let e = (s * amp).exp();
            Ok(vec![XEntry { value: e, log_d: d }, XEntry { value: e.inv(), log_d: d.map(|z| -z) }])
        },
    ))
}

/// `R_i(tau) = (tau_i / tilde_i) (tau - tilde_i)/(tau - tau_i)` with `tilde_i = -lambda / tau_i`.
pub fn generator_factor(tau: C64, tau_i: f64, lambda: Sign) -> C64 {
    let lam = lambda.value();
    let tilde = -lam / tau_i;
    (tau - tilde) / (tau - tau_i) * (tau_i / tilde)
}

/// Diagonal generator pair `(N, R)`: entry `j` is `(N_j^a_j, R_j^a_j)` built on the root of
/// `omega_j` on the chosen branch, `N_j = -lambda / tau_j^2`.
#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub lambda: Sign,
    pub omegas: Vec<f64>,
    pub exponents: Vec<f64>,
    pub branch: Branch,
}

struct GenRoot {
    t: f64,
    tr: f64,
    tv: f64,
}

impl GeneratorPair {
    pub fn new(lambda: Sign, omegas: &[f64], exponents: &[f64], branch: Branch) -> Result<GeneratorPair> {
        if omegas.is_empty() || omegas.len() != exponents.len() {
            return Err(Error::Argument(format!(
                "need one exponent per omega, got {} omegas and {} exponents",
                omegas.len(),
                exponents.len()
            )));
        }
        if omegas.iter().chain(exponents).any(|x| !x.is_finite()) {
            return Err(Error::Argument("omegas and exponents must be finite".into()));
        }
        Ok(GeneratorPair { lambda, omegas: omegas.to_vec(), exponents: exponents.to_vec(), branch })
    }

    fn roots(&self, rho: f64, v: f64) -> Result<Vec<GenRoot>> {
        self.omegas
            .iter()
            .map(|&om| {
                if (om - v).abs() < 1e-12 * v.abs().max(1.0) {
                    return Err(Error::Domain(format!("degenerate generator: omega = v = {v}")));
                }
                let t = real_root(om, rho, v, self.lambda, self.branch)?;
                let (tr, tv) = root_partials(t, rho, self.lambda);
                Ok(GenRoot { t, tr, tv })
            })
            .collect()
    }

    fn power(base: f64, alpha: f64) -> Result<f64> {
        if alpha.fract() == 0.0 && alpha.abs() < 1e9 {
            Ok(base.powi(alpha as i32))
        } else if base > 0.0 {
            Ok(base.powf(alpha))
        } else {
            Err(Error::Domain(format!("non-integer power {alpha} of negative {base}")))
        }
    }

    /// `N` at `(rho, v)`.
    pub fn n_matrix(&self, rho: f64, v: f64) -> Result<RMat> {
        self.m(rho, v)
    }
}

impl CosetField for GeneratorPair {
    fn lambda(&self) -> Sign {
        self.lambda
    }
    fn m(&self, rho: f64, v: f64) -> Result<RMat> {
        let lam = self.lambda.value();
        let rs = self.roots(rho, v)?;
        let d: Vec<f64> = rs
            .iter()
            .zip(&self.exponents)
            .map(|(r, &al)| Self::power(-lam / (r.t * r.t), al))
            .collect::<Result<_>>()?;
        Ok(RMat::from_diagonal(&nalgebra::DVector::from_vec(d)))
    }
    fn dm(&self, rho: f64, v: f64) -> Result<(RMat, RMat)> {
        let m = self.m(rho, v)?;
        let rs = self.roots(rho, v)?;
        let n = rs.len();
        let (mut a, mut b) = (RMat::zeros(n, n), RMat::zeros(n, n));
        for (j, (r, &al)) in rs.iter().zip(&self.exponents).enumerate() {
            a[(j, j)] = -2.0 * al * m[(j, j)] * r.tr / r.t;
            b[(j, j)] = -2.0 * al * m[(j, j)] * r.tv / r.t;
        }
        Ok((a, b))
    }
}

impl GeneratorPair {
    fn entries(&self, tau: C64, rho: f64, v: f64) -> Result<Vec<XEntry>> {
        let lam = self.lambda.value();
        self.roots(rho, v)?
            .iter()
            .zip(&self.exponents)
            .map(|(r, &al)| {
                let tilde = -lam / r.t;
                let (a, b) = (tau - tilde, tau - r.t);
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    return Err(Error::Domain(format!("R is singular at tau = {tau}")));
                }
                let base = generator_factor(tau, r.t, self.lambda);
                let value = if al.fract() == 0.0 && al.abs() < 1e9 { base.powi(al as i32) } else { base.powf(al) };
                let log_d_space = |dt: f64| {
                    let dtilde = lam * dt / (r.t * r.t);
                    c(2.0 * dt / r.t) - dtilde / a + dt / b
                };
                Ok(XEntry { value, log_d: [(a.inv() - b.inv()) * al, log_d_space(r.tr) * al, log_d_space(r.tv) * al] })
            })
            .collect()
    }
}

impl LaxPair for GeneratorPair {
    fn name(&self) -> String {
        "generator".into()
    }
    fn dim(&self) -> usize {
        self.omegas.len()
    }
    fn is_diagonal(&self) -> bool {
        true
    }
    fn x(&self, tau: C64, rho: f64, v: f64) -> Result<CMat> {
        let e = self.entries(tau, rho, v)?;
        Ok(cdiag(e.iter().map(|x| x.value), e.len()))
    }
    fn dx(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let e = self.entries(tau, rho, v)?;
        let n = e.len();
        Ok([0, 1, 2].map(|q| cdiag(e.iter().map(|x| x.value * x.log_d[q]), n)))
    }
    fn log_derivs(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let e = self.entries(tau, rho, v)?;
        let n = e.len();
        Ok([0, 1, 2].map(|q| cdiag(e.iter().map(|x| x.log_d[q]), n)))
    }
}

/// Generator with a common exponent on the minus branch; returns the pair and `N` at `p`.
pub fn generator_rn(omegas: &[f64], alpha: f64, p: &WeylPoint) -> Result<(GeneratorPair, RMat)> {
    let g = GeneratorPair::new(p.lambda, omegas, &vec![alpha; omegas.len()], Branch::Minus)?;
    let n = g.n_matrix(p.rho, p.v)?;
    Ok((g, n))
}

/// `(M N, R X)` from `(M, X)` and `(N, R)`.
#[derive(Clone)]
pub struct ProductPair {
    pub first: Arc<dyn LaxPair>,
    pub second: Arc<dyn LaxPair>,
}

impl CosetField for ProductPair {
    fn lambda(&self) -> Sign {
        self.first.lambda()
    }
    fn m(&self, rho: f64, v: f64) -> Result<RMat> {
        Ok(self.first.m(rho, v)? * self.second.m(rho, v)?)
    }
    fn dm(&self, rho: f64, v: f64) -> Result<(RMat, RMat)> {
        let (m1, m2) = (self.first.m(rho, v)?, self.second.m(rho, v)?);
        let (a1, b1) = self.first.dm(rho, v)?;
        let (a2, b2) = self.second.dm(rho, v)?;
        Ok((&a1 * &m2 + &m1 * &a2, &b1 * &m2 + &m1 * &b2))
    }
}

impl LaxPair for ProductPair {
    fn name(&self) -> String {
        format!("{}*{}", self.first.name(), self.second.name())
    }
    fn dim(&self) -> usize {
        self.first.dim()
    }
    fn is_diagonal(&self) -> bool {
        self.first.is_diagonal() && self.second.is_diagonal()
    }
    fn x(&self, tau: C64, rho: f64, v: f64) -> Result<CMat> {
        Ok(self.second.x(tau, rho, v)? * self.first.x(tau, rho, v)?)
    }
    fn dx(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let (x, r) = (self.first.x(tau, rho, v)?, self.second.x(tau, rho, v)?);
        let dx = self.first.dx(tau, rho, v)?;
        let dr = self.second.dx(tau, rho, v)?;
        Ok([0, 1, 2].map(|q| &dr[q] * &x + &r * &dx[q]))
    }
    fn log_derivs(&self, tau: C64, rho: f64, v: f64) -> Result<[CMat; 3]> {
        let r = self.second.x(tau, rho, v)?;
        let rinv = invert(&r, "R")?;
        let lx = self.first.log_derivs(tau, rho, v)?;
        let lr = self.second.log_derivs(tau, rho, v)?;
        Ok([0, 1, 2].map(|q| &lr[q] + &r * &lx[q] * &rinv))
    }
}

fn check_dims(a: &dyn LaxPair, b: &dyn LaxPair) -> Result<()> {
    if a.dim() != b.dim() || a.lambda() != b.lambda() {
        return Err(Error::Argument(format!(
            "pairs differ in dimension or lambda: {} ({}) vs {} ({})",
            a.name(),
            a.dim(),
            b.name(),
            b.dim()
        )));
    }
    Ok(())
}

/// Product of two diagonal pairs.
pub fn product_solution(a: Arc<dyn LaxPair>, b: Arc<dyn LaxPair>) -> Result<ProductPair> {
    check_dims(a.as_ref(), b.as_ref())?;
    if !(a.is_diagonal() && b.is_diagonal()) {
        return Err(Error::Precondition(format!(
            "product of {} and {} needs diagonal pairs; use product_solution_checked",
            a.name(),
            b.name()
        )));
    }
    Ok(ProductPair { first: a, second: b })
}

/// Commutator threshold for [`product_solution_checked`].
pub const COMMUTATOR_TOL: f64 = 1e-9;

fn comm(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a * b - b * a))
}

/// Product of arbitrary pairs after sampling the commutation hypotheses: `R` with `X` and its
/// partials, `M` with `R` and its partials, `N` with `X` and its partials, at 8 contour points
/// and the given grid points.
pub fn product_solution_checked(
    a: Arc<dyn LaxPair>,
    b: Arc<dyn LaxPair>,
    g: &AdmissibleContour,
    points: &[(f64, f64)],
) -> Result<ProductPair> {
    check_dims(a.as_ref(), b.as_ref())?;
    let mut worst = 0.0f64;
    for &(rho, v) in points {
        let m = cm(&a.m(rho, v)?);
        let n = cm(&b.m(rho, v)?);
        for j in 0..8 {
            let tau = g.point(2.0 * std::f64::consts::PI * (j as f64 + 0.25) / 8.0);
            let x = a.x(tau, rho, v)?;
            let r = b.x(tau, rho, v)?;
            let dx = a.dx(tau, rho, v)?;
            let dr = b.dx(tau, rho, v)?;
            worst = worst.max(comm(&r, &x)).max(comm(&m, &r)).max(comm(&n, &x));
            for q in 0..3 {
                worst = worst.max(comm(&r, &dx[q])).max(comm(&m, &dr[q])).max(comm(&n, &dx[q]));
            }
        }
    }
    if worst > COMMUTATOR_TOL {
        return Err(Error::Precondition(format!("commutation hypotheses fail: max commutator {worst:.3e}")));
    }
    Ok(ProductPair { first: a, second: b })
}

/// General Lax solution for the Kasner connection,
/// `[[tau^2/rho^2 c1, tau^2/rho^2 c2], [rho^2/tau^2 c3, rho^2/tau^2 c4]]`.
pub fn kasner_general_x(consts: [f64; 4], tau: C64, p: &WeylPoint) -> Result<CMat> {
    let [c1, c2, c3, c4] = consts;
    if c1 * c4 - c2 * c3 == 0.0 {
        return Err(Error::Parameter("constants give a singular X (c1 c4 - c2 c3 = 0)".into()));
    }
    if tau.norm() == 0.0 {
        return Err(Error::Domain("X is singular at tau = 0 and cannot be normalised there".into()));
    }
    let up = tau * tau / (p.rho * p.rho);
    let dn = up.inv();
    Ok(CMat::from_row_slice(2, 2, &[up * c1, up * c2, dn * c3, dn * c4]))
}

pub const CATALOG_NAMES: [&str; 5] = ["identity", "kasner", "kasner_canonical", "interior_schwarzschild", "einstein_rosen"];

/// Catalog pair by name. Parameters: `m` (interior Schwarzschild), `a`, `b`, `k` (Einstein-Rosen).
pub fn catalog_pair(name: &str, params: &BTreeMap<String, f64>) -> Result<Arc<dyn LaxPair>> {
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    Ok(match name {
        "identity" => Arc::new(identity_pair(2, Sign::Minus)),
        "kasner" => Arc::new(kasner_pair()),
        "kasner_canonical" => Arc::new(kasner_canonical_pair()),
        "interior_schwarzschild" => Arc::new(interior_schwarzschild_pair(get("m", 1.0))?),
        "einstein_rosen" => Arc::new(einstein_rosen_pair(get("a", 1.0), get("b", 0.5), get("k", 1.0))?),
        _ => {
            return Err(Error::Unknown {
                name: name.into(),
                known: CATALOG_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    })
}

/// Pair formed by a solved factorisation: `X` is the normalised plus factor on the contour,
/// `M` the reported coset matrix. The tau partial is spectral along the contour, the
/// `(rho, v)` partials come from re-solving at shifted points on the same contour
/// (central differences extrapolated once). Returns `max |dG/dtau|` over the nodes.
pub fn factorization_invariance_residual(
    f: &MonodromyFamily,
    p: &WeylPoint,
    g: &AdmissibleContour,
    opts: &SolverOptions,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) || !(p.rho - h > 0.0) {
        return Err(Error::Argument(format!("step {h} invalid at rho = {}", p.rho)));
    }
    let solve = |dr: f64, dv: f64| -> Result<(RMat, Vec<CMat>)> {
        let q = p.moved(p.rho + dr, p.v + dv)?;
        let r = factorize(f, &q, g, opts)?;
        let pf = PlusFactor::new(&r, f)?;
        Ok((r.m.clone(), pf.boundary().to_vec()))
    };
    let (m0, x0) = solve(0.0, 0.0)?;
    let shifted: Vec<(RMat, Vec<CMat>)> = [(h, 0.0), (-h, 0.0), (h / 2.0, 0.0), (-h / 2.0, 0.0), (0.0, h), (0.0, -h), (0.0, h / 2.0), (0.0, -h / 2.0)]
        .par_iter()
        .map(|&(a, b)| solve(a, b))
        .collect::<Result<_>>()?;
    let rich_m = |k: usize| -> RMat {
        let d1 = (&shifted[k].0 - &shifted[k + 1].0) / (2.0 * h);
        let d2 = (&shifted[k + 2].0 - &shifted[k + 3].0) / h;
        (d2 * 4.0 - d1) / 3.0
    };
    let rich_x = |k: usize, j: usize| -> CMat {
        let d1 = (&shifted[k].1[j] - &shifted[k + 1].1[j]) / c(2.0 * h);
        let d2 = (&shifted[k + 2].1[j] - &shifted[k + 3].1[j]) / c(h);
        (d2 * c(4.0) - d1) / c(3.0)
    };
    let (m_r, m_v) = (cm(&rich_m(0)), cm(&rich_m(4)));
    let m = cm(&m0);
    let n = g.n();
    let dim = m0.nrows();
    // X_tau at nodes: spectral d/d theta divided by d tau / d theta.
    let mut x_t = vec![CMat::zeros(dim, dim); n];
    for a in 0..dim {
        for b in 0..dim {
            let ch: Vec<C64> = x0.iter().map(|x| x[(a, b)]).collect();
            for (j, d) in spectral_derivative(&ch).into_iter().enumerate() {
                x_t[j][(a, b)] = d / g.derivs[j];
            }
        }
    }
    let lam = p.lam();
    let mut g_rho = Vec::with_capacity(n);
    let mut g_v = Vec::with_capacity(n);
    for j in 0..n {
        let tau = g.nodes[j];
        let inv = invert(&x0[j], "plus factor")?;
        let l_t = &x_t[j] * &inv;
        let l_r = rich_x(0, j) * &inv;
        let l_v = rich_x(4, j) * &inv;
        let k = (tau * tau + lam) / tau;
        g_rho.push(&m_r * tau + &m * &l_t * ((lam - tau * tau) / p.rho) + &m * &l_r * k);
        g_v.push(&m_v * tau + &m * &l_t * (tau * (2.0 * lam / p.rho)) + &m * &l_v * k);
    }
    let mut worst = 0.0f64;
    for comp in [&g_rho, &g_v] {
        for a in 0..dim {
            for b in 0..dim {
                let ch: Vec<C64> = comp.iter().map(|x| x[(a, b)]).collect();
                for (j, d) in spectral_derivative(&ch).into_iter().enumerate() {
                    worst = worst.max((d / g.derivs[j]).norm());
                }
            }
        }
    }
    Ok(worst)
}
