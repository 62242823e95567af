//! Monodromy families, their composition with the spectral curve, pole bookkeeping and the
//! degree-based existence criterion.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cauchy::continuous_log;
use crate::contour::{AdmissibleContour, PointSide};
use crate::error::{Error, Result};
use crate::weyl::{phi_roots_real, spectral_omega, Sign, WeylPoint};

pub type CMat = DMatrix<C64>;

pub const BUILTIN_NAMES: [&str; 7] =
    ["identity", "schwarzschild", "kerr", "kasner_power", "einstein_rosen", "schwarzschild_deformed", "attractor"];

/// Generalised transposition rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Involution {
    Transpose,
    /// `M -> eta M^T eta` with `eta = diag(signs)`.
    EtaTranspose(Vec<f64>),
}

pub fn generalized_transpose(mat: &CMat, rule: &Involution) -> CMat {
    match rule {
        Involution::Transpose => mat.transpose(),
        Involution::EtaTranspose(eta) => {
            let t = mat.transpose();
            CMat::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * eta[i] * eta[j])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    Identity { n: usize },
    Schwarzschild { m: f64 },
    Kerr { m: f64, a: f64 },
    KasnerPower { exponent: i32 },
    EinsteinRosen { a: f64, b: f64, k: f64 },
    SchwarzschildDeformed { m: f64, xi: f64 },
    Attractor { q: f64, p: f64, h1: f64, h2: f64 },
}

/// A named monodromy matrix `omega -> M(omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyFamily {
    pub name: String,
    pub lambda: Sign,
    pub params: BTreeMap<String, f64>,
    pub kind: FamilyKind,
    pub involution: Involution,
}

/// JSON form `{name, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn take(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(&x) if x.is_finite() => Ok(x),
        Some(&x) => Err(Error::Parameter(format!("{key} must be finite, got {x}"))),
        None => default.ok_or_else(|| Error::Parameter(format!("missing parameter '{key}'"))),
    }
}

fn check_keys(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Parameter(format!("unknown parameter '{k}'; expected one of {}", allowed.join(", "))));
        }
    }
    Ok(())
}

fn sign_param(params: &BTreeMap<String, f64>, default: f64) -> Result<Sign> {
    Sign::from_value(take(params, "lambda", Some(default))?)
        .map_err(|_| Error::Parameter("lambda must be +1 or -1".into()))
}

/// Instantiate a builtin family by name.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<MonodromyFamily> {
    let (kind, lambda, involution) = match name {
        "identity" => {
            check_keys(params, &["n", "lambda"])?;
            let n = take(params, "n", Some(2.0))?;
            if n != 2.0 && n != 3.0 {
                return Err(Error::Parameter(format!("identity dimension must be 2 or 3, got {n}")));
            }
            (FamilyKind::Identity { n: n as usize }, sign_param(params, 1.0)?, Involution::Transpose)
        }
        "schwarzschild" => {
            check_keys(params, &["m", "lambda"])?;
            let m = take(params, "m", None)?;
            if !(m > 0.0) {
                return Err(Error::Parameter(format!("schwarzschild needs m > 0, got {m}")));
            }
            (FamilyKind::Schwarzschild { m }, sign_param(params, 1.0)?, Involution::Transpose)
        }
        "kerr" => {
            check_keys(params, &["m", "a"])?;
            let m = take(params, "m", None)?;
            let a = take(params, "a", None)?;
            if !(m > a && a > 0.0) {
                return Err(Error::Parameter(format!("kerr needs m > a > 0 so that c = sqrt(m^2 - a^2) > 0, got m={m}, a={a}")));
            }
            (FamilyKind::Kerr { m, a }, Sign::Plus, Involution::Transpose)
        }
        "kasner_power" => {
            check_keys(params, &["exponent"])?;
            let e = take(params, "exponent", Some(4.0))?;
            if e.fract() != 0.0 || e == 0.0 || e.abs() > 64.0 {
                return Err(Error::Parameter(format!("kasner exponent must be a nonzero integer, got {e}")));
            }
            (FamilyKind::KasnerPower { exponent: e as i32 }, Sign::Minus, Involution::Transpose)
        }
        "einstein_rosen" => {
            check_keys(params, &["a", "b", "k"])?;
            let a = take(params, "a", None)?;
            let b = take(params, "b", None)?;
            let k = take(params, "k", Some(1.0))?;
            if !(a > 0.0) || !(k >= 0.0) {
                return Err(Error::Parameter(format!("einstein_rosen needs a > 0 and k >= 0, got a={a}, k={k}")));
            }
            (FamilyKind::EinsteinRosen { a, b, k }, Sign::Minus, Involution::Transpose)
        }
        "schwarzschild_deformed" => {
            check_keys(params, &["m", "xi"])?;
            let m = take(params, "m", None)?;
            let xi = take(params, "xi", None)?;
            if !(m > 0.0) {
                return Err(Error::Parameter(format!("schwarzschild_deformed needs m > 0, got {m}")));
            }
            (FamilyKind::SchwarzschildDeformed { m, xi }, Sign::Plus, Involution::Transpose)
        }
        "attractor" => {
            check_keys(params, &["q", "p", "h1", "h2"])?;
            let q = take(params, "q", None)?;
            let p = take(params, "p", None)?;
            let h1 = take(params, "h1", None)?;
            let h2 = take(params, "h2", None)?;
            if !(q > 0.0 && p > 0.0 && h1 > 0.0 && h2 > 0.0) {
                return Err(Error::Parameter("attractor needs q, p, h1, h2 > 0".into()));
            }
            (FamilyKind::Attractor { q, p, h1, h2 }, Sign::Plus, Involution::EtaTranspose(vec![1.0, -1.0, 1.0]))
        }
        _ => {
            return Err(Error::Unknown { name: name.to_string(), known: BUILTIN_NAMES.join(", ") });
        }
    };
    Ok(MonodromyFamily { name: name.to_string(), lambda, params: params.clone(), kind, involution })
}

/// Convenience wrapper over [`builtin`] taking `(key, value)` pairs.
pub fn family(name: &str, params: &[(&str, f64)]) -> Result<MonodromyFamily> {
    builtin(name, &params.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

pub fn from_spec(spec: &FamilySpec) -> Result<MonodromyFamily> {
    builtin(&spec.name, &spec.params)
}

pub fn from_json(text: &str) -> Result<MonodromyFamily> {
    let spec: FamilySpec = serde_json::from_str(text).map_err(|e| Error::Argument(format!("bad family JSON: {e}")))?;
    from_spec(&spec)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diag2(a: C64, b: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, c(0.0), c(0.0), b])
}

impl MonodromyFamily {
    pub fn spec(&self) -> FamilySpec {
        FamilySpec { name: self.name.clone(), params: self.params.clone() }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::Identity { n } => n,
            FamilyKind::Attractor { .. } => 3,
            _ => 2,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self.kind {
            FamilyKind::Identity { .. }
            | FamilyKind::Schwarzschild { .. }
            | FamilyKind::KasnerPower { .. }
            | FamilyKind::EinsteinRosen { .. } => true,
            FamilyKind::SchwarzschildDeformed { xi, .. } => xi == 0.0,
            _ => false,
        }
    }

    /// Finite real `omega` where the family is singular (poles, zeros of entries or
    /// essential singularities), in the order used by [`Self::primary_poles`].
    pub fn singular_omegas(&self) -> Vec<f64> {
        match self.kind {
            FamilyKind::Identity { .. } | FamilyKind::EinsteinRosen { .. } => vec![],
            FamilyKind::Schwarzschild { m } => vec![m, -m],
            FamilyKind::Kerr { m, a } => {
                let cc = (m * m - a * a).sqrt();
                vec![cc, -cc]
            }
            FamilyKind::KasnerPower { .. } => vec![0.0],
            FamilyKind::SchwarzschildDeformed { m, xi } => {
                if xi == 0.0 {
                    vec![m, -m]
                } else {
                    vec![m, -m, 0.0]
                }
            }
            FamilyKind::Attractor { q, p, h1, h2 } => vec![0.0, -q / h1, -p / h2],
        }
    }

    /// Scalar factor of the ER family, `f(omega) = 4 b e^{-a k} cos(k omega)`.
    pub fn er_exponent(&self, omega: C64) -> Option<C64> {
        match self.kind {
            FamilyKind::EinsteinRosen { a, b, k } => Some(4.0 * b * (-a * k).exp() * (k * omega).cos()),
            _ => None,
        }
    }

    /// `M(omega)`.
    pub fn eval(&self, omega: C64) -> Result<CMat> {
        for s in self.singular_omegas() {
            if (omega - s).norm() < 1e-300_f64.max(1e-14 * (1.0 + s.abs())) {
                return Err(Error::Domain(format!("{} is singular at omega = {s}", self.name)));
            }
        }
        let lam = self.lambda.value();
        Ok(match self.kind {
            FamilyKind::Identity { n } => CMat::identity(n, n),
            FamilyKind::Schwarzschild { m } => {
                let r = (omega - m) / (omega + m);
                diag2(lam * r, lam / r)
            }
            FamilyKind::Kerr { m, a } => {
                let d = omega * omega - (m * m - a * a);
                CMat::from_row_slice(
                    2,
                    2,
                    &[((omega - m).powi(2) + a * a) / d, c(2.0 * a * m) / d, c(2.0 * a * m) / d, ((omega + m).powi(2) + a * a) / d],
                )
            }
            FamilyKind::KasnerPower { exponent } => diag2(omega.powi(exponent), omega.powi(-exponent)),
            FamilyKind::EinsteinRosen { .. } => {
                let f = self.er_exponent(omega).unwrap();
                diag2(f.exp(), (-f).exp())
            }
            FamilyKind::SchwarzschildDeformed { m, xi } => {
                let r = (omega - m) / (omega + m);
                let (ch, sh) = ((xi / omega).cosh(), (xi / omega).sinh());
                CMat::from_row_slice(2, 2, &[r * ch, sh, sh, ch / r])
            }
            FamilyKind::Attractor { q, p, h1, h2 } => {
                let (hh1, hh2) = (h1 + q / omega, h2 + p / omega);
                attractor_core(hh1, hh2) * (hh2 / hh1).powf(1.0 / 3.0)
            }
        })
    }

    /// All tau-plane singular points at `p`: both roots of every singular omega.
    pub fn poles(&self, p: &WeylPoint) -> Vec<C64> {
        self.singular_omegas()
            .into_iter()
            .flat_map(|w| {
                let (a, b) = phi_roots_real(w, p);
                [b, a]
            })
            .collect()
    }

    /// The distinguished pole of each singular omega (the `phi-` root), e.g. `(tau1, tau2)`
    /// for Schwarzschild and Kerr, `tau0` for Kasner, the three attractor poles.
    pub fn primary_poles(&self, p: &WeylPoint) -> Vec<C64> {
        self.singular_omegas().into_iter().map(|w| phi_roots_real(w, p).1).collect()
    }

    /// Check that no singular point lies on the contour.
    pub fn check_contour(&self, p: &WeylPoint, g: &AdmissibleContour) -> Result<()> {
        if p.lambda != g.lambda {
            return Err(Error::Argument(format!("point has lambda {} but contour has {}", p.lam(), g.lambda.value())));
        }
        if p.lambda != self.lambda && !matches!(self.kind, FamilyKind::Identity { .. }) {
            return Err(Error::Argument(format!("{} is defined for lambda = {}", self.name, self.lambda.value())));
        }
        for t in self.poles(p) {
            if let PointSide::OnCurve(tol) = g.contains(t) {
                return Err(Error::ContourThroughSingularity(format!("tau = {t} lies on the contour (tolerance {tol:e})")));
            }
        }
        Ok(())
    }

    /// `M_{rho,v}(tau_j)` at the contour nodes.
    pub fn eval_on_contour(&self, p: &WeylPoint, g: &AdmissibleContour) -> Result<Vec<CMat>> {
        self.check_contour(p, g)?;
        let mut out = Vec::with_capacity(g.n());
        for &t in &g.nodes {
            out.push(self.eval(spectral_omega(t, p)?)?);
        }
        if let FamilyKind::Attractor { q, p: pp, h1, h2 } = self.kind {
            // the pointwise principal cube root may jump; continue it along the nodes
            let ratios: Vec<C64> = g
                .nodes
                .iter()
                .map(|&t| {
                    let w = spectral_omega(t, p).unwrap();
                    (h2 + pp / w) / (h1 + q / w)
                })
                .collect();
            let logs = continuous_log(&ratios)?;
            let shift = (logs[0].im / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
            for (j, t) in g.nodes.iter().enumerate() {
                let w = spectral_omega(*t, p)?;
                let root = ((logs[j] - C64::new(0.0, shift)) / 3.0).exp();
                out[j] = attractor_core(h1 + q / w, h2 + pp / w) * root;
            }
        }
        Ok(out)
    }

    /// `M_{rho,v}(tau)` at a single point (principal branches).
    pub fn eval_tau(&self, tau: C64, p: &WeylPoint) -> Result<CMat> {
        self.eval(spectral_omega(tau, p)?)
    }

    pub fn degree_data(&self) -> Option<DegreeData> {
        match self.kind {
            FamilyKind::Kerr { .. } => Some(DegreeData::new(2, 2, 0, 2)),
            _ => None,
        }
    }
}

fn attractor_core(h1: C64, h2: C64) -> CMat {
    let s2 = 2f64.sqrt();
    CMat::from_row_slice(3, 3, &[h1 * h2, s2 * h1, c(-1.0), -s2 * h1, -h1 / h2, c(0.0), c(-1.0), c(0.0), c(0.0)])
}

/// Degrees of the polynomial entries `p_ij` of `q^{-1} P` in the degree criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeData {
    pub n: u32,
    pub k11: u32,
    pub k12: u32,
    pub k22: u32,
}

impl DegreeData {
    pub fn new(n: u32, k11: u32, k12: u32, k22: u32) -> Self {
        DegreeData { n, k11, k12, k22 }
    }

    pub fn n1(&self) -> u32 {
        self.k11.max(self.k12)
    }

    pub fn n2(&self) -> u32 {
        self.k12.max(self.k22)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeVerdict {
    CanonicalAlways,
    CurveExceptional,
    Reducible,
}

pub fn degree_criterion(d: &DegreeData) -> DegreeVerdict {
    let s = d.n1() + d.n2();
    match s.cmp(&(2 * d.n)) {
        std::cmp::Ordering::Less => DegreeVerdict::CanonicalAlways,
        std::cmp::Ordering::Equal => DegreeVerdict::CurveExceptional,
        std::cmp::Ordering::Greater => DegreeVerdict::Reducible,
    }
}

/// `(Sigma, D, J)` with `M_{rho,v}(tau) = Sigma D Sigma^{-1} J` for the deformed
/// Schwarzschild family.
pub fn daniele_khrapkov_split(f: &MonodromyFamily, tau: C64, p: &WeylPoint) -> Result<(CMat, CMat, CMat)> {
    let (m, xi) = match f.kind {
        FamilyKind::SchwarzschildDeformed { m, xi } => (m, xi),
        _ => return Err(Error::Argument(format!("{} is not a Daniele-Khrapkov family", f.name))),
    };
    let w = spectral_omega(tau, p)?;
    if (w - m).norm() < 1e-14 * (1.0 + m) || (w + m).norm() < 1e-14 * (1.0 + m) || w.norm() < 1e-300 {
        return Err(Error::Domain(format!("tau = {tau} is a pole of R")));
    }
    let r = (w + m) / (w - m);
    let sigma = CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), r, -r]);
    let d = diag2((xi / w).exp(), -(-xi / w).exp());
    let j = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    Ok((sigma, d, j))
}
