//! Weyl half-plane points, the spectral curve and coordinate maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A sign ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl TryFrom<i8> for Sign {
    type Error = Error;
    fn try_from(x: i8) -> Result<Sign> {
        Sign::from_value(x as f64)
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value() as i8
    }
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(x: f64) -> Result<Sign> {
        if x == 1.0 {
            Ok(Sign::Plus)
        } else if x == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(Error::Argument(format!("sign must be +1 or -1, got {x}")))
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// A point of the Weyl half-plane with the signature data of the 2D line element
/// `sigma drho^2 + epsilon dv^2`, and `lambda = sigma * epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub rho: f64,
    pub v: f64,
    pub lambda: Sign,
    pub sigma: Sign,
    pub epsilon: Sign,
}

impl WeylPoint {
    /// Default signs: `(+,+)` for lambda = 1, `(+,-)` for lambda = -1.
    pub fn new(rho: f64, v: f64, lambda: Sign) -> Result<WeylPoint> {
        let (sigma, epsilon) = match lambda {
            Sign::Plus => (Sign::Plus, Sign::Plus),
            Sign::Minus => (Sign::Plus, Sign::Minus),
        };
        Self::with_signs(rho, v, sigma, epsilon)
    }

    pub fn with_signs(rho: f64, v: f64, sigma: Sign, epsilon: Sign) -> Result<WeylPoint> {
        if !(rho > 0.0) || !rho.is_finite() || !v.is_finite() {
            return Err(Error::Domain(format!("Weyl point needs rho > 0, got ({rho}, {v})")));
        }
        Ok(WeylPoint { rho, v, lambda: sigma * epsilon, sigma, epsilon })
    }

    /// Same signs, shifted coordinates.
    pub fn moved(&self, rho: f64, v: f64) -> Result<WeylPoint> {
        Self::with_signs(rho, v, self.sigma, self.epsilon)
    }

    pub fn lam(&self) -> f64 {
        self.lambda.value()
    }
}

/// A spectral parameter together with its image on the spectral plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub tau: C64,
    pub omega: C64,
}

impl SpectralValue {
    pub fn new(tau: C64, p: &WeylPoint) -> Result<SpectralValue> {
        let omega = spectral_omega(tau, p)?;
        Ok(SpectralValue { tau, omega })
    }

    /// Build from both values, checking consistency to 1e-12 (relative).
    pub fn checked(tau: C64, omega: C64, p: &WeylPoint) -> Result<SpectralValue> {
        let w = spectral_omega(tau, p)?;
        if (w - omega).norm() > 1e-12 * (1.0 + omega.norm()) {
            return Err(Error::Domain(format!("omega {omega} does not match tau {tau} (expected {w})")));
        }
        Ok(SpectralValue { tau, omega })
    }
}

/// `omega = v + (lambda/2) rho (lambda - tau^2) / tau`.
pub fn spectral_omega(tau: C64, p: &WeylPoint) -> Result<C64> {
    if tau == C64::new(0.0, 0.0) {
        return Err(Error::Domain("tau = 0 is a pole of the spectral curve".into()));
    }
    let lam = p.lam();
    Ok(p.v + 0.5 * lam * p.rho * (lam - tau * tau) / tau)
}

/// `d omega / d tau` along the spectral curve at fixed (rho, v).
pub fn spectral_omega_dtau(tau: C64, p: &WeylPoint) -> C64 {
    let lam = p.lam();
    -0.5 * lam * p.rho * (1.0 + lam / (tau * tau))
}

/// The involution `tau -> -lambda / tau`.
pub fn involution(tau: C64, lambda: Sign) -> Result<C64> {
    if tau == C64::new(0.0, 0.0) {
        return Err(Error::Domain("involution undefined at tau = 0".into()));
    }
    Ok(-lambda.value() / tau)
}

/// The two preimages of `omega` on the spectral curve, `(phi+, phi-)`, principal square root.
pub fn phi_roots(omega: C64, p: &WeylPoint) -> (C64, C64) {
    let lam = p.lam();
    let d = omega - p.v;
    let root = (d * d + lam * p.rho * p.rho).sqrt();
    ((-lam * d + root) / p.rho, (-lam * d - root) / p.rho)
}

/// Real-omega variant of [`phi_roots`] used by pole rules.
pub fn phi_roots_real(omega: f64, p: &WeylPoint) -> (C64, C64) {
    phi_roots(C64::new(omega, 0.0), p)
}

/// Prolate spheroidal coordinates `(u, y)` with `v = u y`, `rho^2 = (u^2 - c^2)(1 - y^2)`.
pub fn prolate_from_weyl(p: &WeylPoint, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::Argument(format!("focal distance must be positive, got {c}")));
    }
    let rp = (p.rho * p.rho + (p.v + c) * (p.v + c)).sqrt();
    let rm = (p.rho * p.rho + (p.v - c) * (p.v - c)).sqrt();
    let u = 0.5 * (rp + rm);
    let y = ((rp - rm) / (2.0 * c)).clamp(-1.0, 1.0);
    if !(u > c) || !(y.abs() < 1.0) {
        return Err(Error::Domain(format!("point ({}, {}) outside the prolate image region", p.rho, p.v)));
    }
    Ok((u, y))
}

/// Inverse of [`prolate_from_weyl`]; returns `(rho, v)`.
pub fn weyl_from_prolate(u: f64, y: f64, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !(u > c) || !(y.abs() < 1.0) {
        return Err(Error::Domain(format!("need u > c > 0 and |y| < 1, got u={u}, y={y}, c={c}")));
    }
    Ok((((u * u - c * c) * (1.0 - y * y)).sqrt(), u * y))
}

/// Coordinate patches used by the Schwarzschild reference solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchwarzschildBranch {
    /// `rho = sqrt(r^2 - 2 m r) sin(theta)`, `v = (r - m) cos(theta)`, `r > 2m`.
    Exterior,
    /// `rho = sqrt(2 m r - r^2) sinh(theta)`, `v = (r - m) cosh(theta)`, `0 < r < 2m`.
    #[serde(rename = "aii")]
    Aii,
    /// `rho = sqrt(r^2 + 2 m r) sin(theta)`, `v = (r + m) cos(theta)`, `r > 0`.
    Negative,
}

pub fn schwarzschild_coords(r: f64, theta: f64, m: f64, branch: SchwarzschildBranch) -> Result<WeylPoint> {
    if !(m > 0.0) {
        return Err(Error::Argument(format!("mass must be positive, got {m}")));
    }
    let (rho, v) = match branch {
        SchwarzschildBranch::Exterior => {
            if !(r > 2.0 * m) {
                return Err(Error::Domain(format!("exterior chart needs r > 2m, got r={r}")));
            }
            ((r * r - 2.0 * m * r).sqrt() * theta.sin(), (r - m) * theta.cos())
        }
        SchwarzschildBranch::Aii => {
            if !(r > 0.0 && r < 2.0 * m) || !(theta > 0.0) {
                return Err(Error::Domain(format!("AII chart needs 0 < r < 2m, theta > 0, got r={r}, theta={theta}")));
            }
            ((2.0 * m * r - r * r).sqrt() * theta.sinh(), (r - m) * theta.cosh())
        }
        SchwarzschildBranch::Negative => {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("negative-mass chart needs r > 0, got r={r}")));
            }
            ((r * r + 2.0 * m * r).sqrt() * theta.sin(), (r + m) * theta.cos())
        }
    };
    WeylPoint::new(rho, v, Sign::Plus)
}

/// Inverse of [`schwarzschild_coords`]; returns `(r, theta)`.
pub fn schwarzschild_coords_inverse(p: &WeylPoint, m: f64, branch: SchwarzschildBranch) -> Result<(f64, f64)> {
    match branch {
        SchwarzschildBranch::Exterior => {
            let (u, y) = prolate_from_weyl(p, m)?;
            Ok((u + m, y.acos()))
        }
        SchwarzschildBranch::Negative => {
            let (u, y) = prolate_from_weyl(p, m)?;
            Ok((u - m, y.acos()))
        }
        SchwarzschildBranch::Aii => {
            // with a = r - m: v^2/a^2 - rho^2/(m^2 - a^2) = 1, a quadratic in a^2
            let (rho2, v2, m2) = (p.rho * p.rho, p.v * p.v, m * m);
            let b = m2 + rho2 + v2;
            let disc = (b * b - 4.0 * m2 * v2).max(0.0);
            let a2 = (b - disc.sqrt()) / 2.0;
            if !(a2 < m2) {
                return Err(Error::Domain("point outside the AII chart".into()));
            }
            let a = a2.sqrt() * p.v.signum();
            let theta = if a == 0.0 {
                (p.rho / m).asinh()
            } else {
                (p.v / a).max(1.0).acosh()
            };
            Ok((a + m, theta))
        }
    }
}
