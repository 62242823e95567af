//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Power series of `J_n(x)`, used for moderate arguments.
pub fn bessel_series(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= -half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Miller backward recurrence normalised by `J0 + 2 sum J_2k = 1`.
pub fn bessel_miller(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = 2 * ((x.abs() as usize + n as usize + 40) / 2);
    let (mut jp1, mut j) = (0.0_f64, 1e-30_f64);
    let mut vals = vec![0.0; start + 2];
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals[n as usize] / norm
}

/// `J_n(x)` oracle: series for `|x| <= 8`, Miller recurrence beyond.
pub fn bessel_oracle(n: u32, x: f64) -> f64 {
    let s = if n % 2 == 1 && x < 0.0 { -1.0 } else { 1.0 };
    let ax = x.abs();
    s * if ax <= 8.0 { bessel_series(n, ax) } else { bessel_miller(n, ax) }
}

/// Schwarzschild roots `(v -+ m - sqrt((v -+ m)^2 + rho^2)) / rho`.
pub fn tau12(m: f64, rho: f64, v: f64) -> (f64, f64) {
    let t1 = ((v - m) - ((v - m).powi(2) + rho * rho).sqrt()) / rho;
    let t2 = ((v + m) - ((v + m).powi(2) + rho * rho).sqrt()) / rho;
    (t1, t2)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Interior Schwarzschild roots for `lambda = -1`:
/// `t1 = (m - v + sqrt((m - v)^2 - rho^2)) / rho`, `t2 = (-m - v + sqrt((m + v)^2 - rho^2)) / rho`.
pub fn tau12_plus(m: f64, rho: f64, v: f64) -> (f64, f64) {
    let t1 = (m - v + ((m - v).powi(2) - rho * rho).sqrt()) / rho;
    let t2 = (-m - v + ((m + v).powi(2) - rho * rho).sqrt()) / rho;
    (t1, t2)
}
