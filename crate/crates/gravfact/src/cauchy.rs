//! Cauchy integrals, the singular operator `S`, the projections `P±`, winding numbers and
//! scalar canonical factorisation on an admissible contour.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::contour::{AdmissibleContour, PointSide};
use crate::error::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Values of a function at the nodes of a contour.
#[derive(Debug, Clone)]
pub struct BoundarySamples<'a> {
    pub contour: &'a AdmissibleContour,
    pub values: Vec<C64>,
}

impl<'a> BoundarySamples<'a> {
    pub fn new(contour: &'a AdmissibleContour, values: Vec<C64>) -> Result<Self> {
        if values.len() != contour.n() {
            return Err(Error::Argument(format!("{} samples for a contour with {} nodes", values.len(), contour.n())));
        }
        Ok(BoundarySamples { contour, values })
    }

    pub fn from_fn<F: Fn(C64) -> C64>(contour: &'a AdmissibleContour, f: F) -> Self {
        BoundarySamples { contour, values: contour.nodes.iter().map(|&t| f(t)).collect() }
    }

    fn with(&self, values: Vec<C64>) -> BoundarySamples<'a> {
        BoundarySamples { contour: self.contour, values }
    }
}

/// Periodic spectral differentiation matrix in theta (even `n`).
pub fn spectral_diff_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as f64 - k as f64;
            let sgn = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * sgn / (0.5 * d * h).tan()
        }
    })
}

fn cot_entry(n: usize, j: usize, k: usize) -> f64 {
    if j == k {
        return 0.0;
    }
    let h = 2.0 * PI / n as f64;
    let d = j as f64 - k as f64;
    let sgn = if (j + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    0.5 * sgn / (0.5 * d * h).tan()
}

/// Row `j` of the uncorrected operator applied to `f`.
fn s0_row(g: &AdmissibleContour, f: &[C64], j: usize) -> C64 {
    let n = g.n();
    let w = g.weight();
    let tj = g.nodes[j];
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        if k == j {
            continue;
        }
        acc += (f[k] - f[j]) * g.derivs[k] * w / (g.nodes[k] - tj);
        acc += f[k] * (w * cot_entry(n, j, k));
    }
    f[j] + acc / (PI * I)
}

fn nyquist(n: usize) -> Vec<f64> {
    (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Weight of the rank-one Nyquist correction. The regularised trapezoid rule cannot tell
/// the alternating mode apart from its mirror, leaving `S` with a near-null direction;
/// the correction fixes `nu^T S nu / N = 1`, which restores `S^2 = I`.
fn nyquist_weight(g: &AdmissibleContour) -> C64 {
    let n = g.n();
    let nu: Vec<C64> = nyquist(n).into_iter().map(|x| C64::new(x, 0.0)).collect();
    let q: C64 = (0..n).map(|j| nu[j] * s0_row(g, &nu, j)).sum();
    1.0 - q / n as f64
}

/// Dense matrix of the discrete singular operator on `g`.
pub fn singular_matrix(g: &AdmissibleContour) -> DMatrix<C64> {
    let n = g.n();
    let w = g.weight();
    let mut s = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let tj = g.nodes[j];
        let mut diag = C64::new(0.0, 0.0);
        for k in 0..n {
            if k == j {
                continue;
            }
            let kjk = g.derivs[k] * w / (g.nodes[k] - tj);
            diag -= kjk;
            s[(j, k)] = (kjk + w * cot_entry(n, j, k)) / (PI * I);
        }
        s[(j, j)] = 1.0 + diag / (PI * I);
    }
    let nu = nyquist(n);
    let mut q = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            q += nu[j] * s[(j, k)] * nu[k];
        }
    }
    let c = (1.0 - q / n as f64) / n as f64;
    for j in 0..n {
        for k in 0..n {
            s[(j, k)] += c * nu[j] * nu[k];
        }
    }
    s
}

/// `S f` without forming the matrix.
pub fn singular_s<'a>(f: &BoundarySamples<'a>) -> BoundarySamples<'a> {
    let g = f.contour;
    let n = g.n();
    let nu = nyquist(n);
    let c = nyquist_weight(g) / n as f64;
    let proj: C64 = f.values.iter().zip(&nu).map(|(x, s)| x * s).sum();
    let out = (0..n).map(|j| s0_row(g, &f.values, j) + c * nu[j] * proj).collect();
    f.with(out)
}

/// `(P+ f, P- f)` with `P± = (I ± S)/2`.
pub fn projections<'a>(f: &BoundarySamples<'a>) -> (BoundarySamples<'a>, BoundarySamples<'a>) {
    let s = singular_s(f);
    let plus = f.values.iter().zip(&s.values).map(|(a, b)| 0.5 * (a + b)).collect();
    let minus = f.values.iter().zip(&s.values).map(|(a, b)| 0.5 * (a - b)).collect();
    (f.with(plus), f.with(minus))
}

/// Fourier coefficients in FFT order, normalised by `1/n`.
pub fn fourier_coefficients(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Trigonometric interpolant resampled on `m` equispaced nodes (`m >= n`, both even).
pub fn trig_resample(values: &[C64], m: usize) -> Vec<C64> {
    let n = values.len();
    if m == n {
        return values.to_vec();
    }
    let coef = fourier_coefficients(values);
    let mut spec = vec![C64::new(0.0, 0.0); m];
    for k in 0..n {
        let f = signed_freq(k, n);
        if k == n / 2 {
            // split the Nyquist coefficient symmetrically
            spec[n / 2] += 0.5 * coef[k];
            spec[m - n / 2] += 0.5 * coef[k];
        } else if f >= 0.0 {
            spec[k] += coef[k];
        } else {
            spec[m - (n - k)] += coef[k];
        }
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut spec);
    spec
}

/// Evaluate the trigonometric interpolant of nodal values at a real parameter.
pub fn trig_eval(values: &[C64], theta: f64) -> C64 {
    let n = values.len();
    let coef = fourier_coefficients(values);
    let mut acc = C64::new(0.0, 0.0);
    for (k, c) in coef.iter().enumerate() {
        if k == n / 2 {
            acc += c * (0.5 * (I * (n as f64 / 2.0) * theta).exp() + 0.5 * (-I * (n as f64 / 2.0) * theta).exp());
        } else {
            acc += c * (I * signed_freq(k, n) * theta).exp();
        }
    }
    acc
}

/// Spectral derivative `d/d theta` of nodal values.
pub fn spectral_derivative(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut coef = fourier_coefficients(values);
    for (k, c) in coef.iter_mut().enumerate() {
        *c *= if k == n / 2 { C64::new(0.0, 0.0) } else { I * signed_freq(k, n) };
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut coef);
    coef
}

/// Relative size of the top eighth of the spectrum; a resolution indicator.
pub fn spectral_tail(values: &[C64]) -> f64 {
    let n = values.len();
    let coef = fourier_coefficients(values);
    let total = coef.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if total == 0.0 {
        return 0.0;
    }
    let cut = 3 * n / 8;
    coef.iter()
        .enumerate()
        .filter(|(k, _)| signed_freq(*k, n).abs() >= cut as f64)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
        / total
}

const MAX_UPSAMPLED: usize = 1 << 18;

/// Node count needed for trapezoidal accuracy near `z`, or an error if `z` is too close.
fn required_nodes(g: &AdmissibleContour, z: C64) -> Result<usize> {
    let d = g.parametric_distance(z);
    let n = g.n();
    if !d.is_finite() || d * n as f64 >= 40.0 {
        return Ok(n);
    }
    let mut m = n;
    while (m as f64) * d < 40.0 {
        m *= 2;
        if m > MAX_UPSAMPLED {
            return Err(Error::Domain(format!("point {z} is too close to the contour for accurate evaluation")));
        }
    }
    Ok(m)
}

/// Cauchy integrals `(1/2 pi i) ∮ f_c(u)/(u - z) du` of several channels sampled on `g`.
pub fn cauchy_integral_channels(g: &AdmissibleContour, channels: &[Vec<C64>], z: C64) -> Result<Vec<C64>> {
    if let PointSide::OnCurve(tol) = g.contains(z) {
        return Err(Error::Domain(format!("point {z} lies on the contour (tolerance {tol:e})")));
    }
    let m = required_nodes(g, z)?;
    let fine;
    let (gg, data): (&AdmissibleContour, Vec<Vec<C64>>) = if m == g.n() {
        (g, channels.to_vec())
    } else {
        fine = g.with_nodes(m)?;
        (&fine, channels.iter().map(|c| trig_resample(c, m)).collect())
    };
    let w = gg.weight();
    let kernel: Vec<C64> = gg.nodes.iter().zip(&gg.derivs).map(|(t, d)| d * w / (t - z)).collect();
    Ok(data
        .iter()
        .map(|c| c.iter().zip(&kernel).map(|(a, k)| a * k).sum::<C64>() / (2.0 * PI * I))
        .collect())
}

pub fn cauchy_integral(f: &BoundarySamples, z: C64) -> Result<C64> {
    Ok(cauchy_integral_channels(f.contour, std::slice::from_ref(&f.values), z)?[0])
}

/// `(1/2 pi i) ∮ f(u)/u du` by the trapezoid rule.
pub fn cauchy_at_zero(g: &AdmissibleContour, f: &[C64]) -> C64 {
    let w = g.weight();
    f.iter().zip(g.nodes.iter().zip(&g.derivs)).map(|(x, (t, d))| x * d * w / t).sum::<C64>() / (2.0 * PI * I)
}

/// Continuous logarithm along the nodes. Fails when consecutive phases jump by more than
/// 0.9 pi, a sign of under-resolution.
pub fn continuous_log(values: &[C64]) -> Result<Vec<C64>> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if values.iter().any(|v| !(v.norm() > 1e-14 * scale) || !v.is_finite()) {
        return Err(Error::NonVanishing("sample vanishes (or is not finite) on the contour".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    let mut arg = values[0].arg();
    out.push(C64::new(values[0].norm().ln(), arg));
    for j in 1..values.len() {
        let jump = (values[j] / values[j - 1]).arg();
        if jump.abs() > 0.9 * PI {
            return Err(Error::Numerical(format!("phase jump {jump:.3} between nodes {} and {j}", j - 1)));
        }
        arg += jump;
        out.push(C64::new(values[j].norm().ln(), arg));
    }
    Ok(out)
}

/// Winding number of the sampled function around the origin.
pub fn winding_number(f: &BoundarySamples) -> Result<i64> {
    let l = continuous_log(&f.values)?;
    let n = l.len();
    let closing = (f.values[0] / f.values[n - 1]).arg();
    let total = l[n - 1].im - l[0].im + closing;
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Canonical factorisation `g = g- g+` of a scalar symbol with `g-(∞) = 1`.
#[derive(Debug, Clone)]
pub struct ScalarFactorization {
    pub contour: AdmissibleContour,
    /// Continuous `log g` at the nodes.
    pub logdensity: Vec<C64>,
    pub plus_at_zero: C64,
    pub winding: i64,
    pub tail: f64,
}

pub fn scalar_factorize(g: &BoundarySamples) -> Result<ScalarFactorization> {
    let w = winding_number(g)?;
    if w != 0 {
        return Err(Error::NonCanonicalScalar(w));
    }
    let logg = continuous_log(&g.values)?;
    let plus_at_zero = cauchy_at_zero(g.contour, &logg).exp();
    let tail = spectral_tail(&logg);
    Ok(ScalarFactorization { contour: g.contour.clone(), logdensity: logg, plus_at_zero, winding: 0, tail })
}

impl ScalarFactorization {
    /// `g+(z)` for `z` inside the contour.
    pub fn plus_at(&self, z: C64) -> Result<C64> {
        match self.contour.contains(z) {
            PointSide::Inside => Ok(cauchy_integral_channels(&self.contour, std::slice::from_ref(&self.logdensity), z)?[0].exp()),
            _ => Err(Error::Domain(format!("{z} is not inside the contour"))),
        }
    }

    /// `g-(z)` for `z` outside the contour.
    pub fn minus_at(&self, z: C64) -> Result<C64> {
        match self.contour.contains(z) {
            PointSide::Outside => Ok((-cauchy_integral_channels(&self.contour, std::slice::from_ref(&self.logdensity), z)?[0]).exp()),
            _ => Err(Error::Domain(format!("{z} is not outside the contour"))),
        }
    }

    /// Boundary values `(g-, g+)` at the nodes.
    pub fn boundary_factors(&self) -> (Vec<C64>, Vec<C64>) {
        let samples = BoundarySamples { contour: &self.contour, values: self.logdensity.clone() };
        let (p, m) = projections(&samples);
        (m.values.iter().map(|x| x.exp()).collect(), p.values.iter().map(|x| x.exp()).collect())
    }

    /// `max |g - g- g+|` at the nodes.
    pub fn node_residual(&self, g: &[C64]) -> f64 {
        let (gm, gp) = self.boundary_factors();
        g.iter().zip(gm.iter().zip(&gp)).map(|(x, (a, b))| (x - a * b).norm()).fold(0.0, f64::max)
    }
}

/// Scalar factorisation of a function with node doubling: starts at `n0`, doubles until the
/// interpolated symbol matches the function at midpoints to 1e-8 (relative) and `g+(0)` is
/// stable to 1e-10, up to `cap` nodes.
pub fn scalar_factorize_adaptive<F: Fn(C64) -> C64>(
    base: &AdmissibleContour,
    f: F,
    n0: usize,
    cap: usize,
) -> Result<ScalarFactorization> {
    let mut n = n0;
    let mut prev: Option<C64> = None;
    loop {
        let g = base.with_nodes(n)?;
        let samples = BoundarySamples::from_fn(&g, &f);
        let fac = scalar_factorize(&samples)?;
        let fine = g.with_nodes(2 * n)?;
        let logfine = trig_resample(&fac.logdensity, 2 * n);
        let mid_err = fine
            .nodes
            .iter()
            .zip(&logfine)
            .skip(1)
            .step_by(2)
            .map(|(&t, l)| {
                let exact = f(t);
                (exact - l.exp()).norm() / exact.norm().max(1e-300)
            })
            .fold(0.0, f64::max);
        let stable = prev.is_some_and(|p| (p - fac.plus_at_zero).norm() <= 1e-10 * fac.plus_at_zero.norm());
        if (mid_err < 1e-8 && stable) || 2 * n > cap {
            return Ok(fac);
        }
        prev = Some(fac.plus_at_zero);
        n *= 2;
    }
}
