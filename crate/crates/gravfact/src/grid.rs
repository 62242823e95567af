//! Rectangular (rho, v) lattices, finite differences and CSV export.

use crate::error::{Error, Result};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_rho: usize,
    pub n_v: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid2> {
        Grid2::new(self.rho_min, self.rho_max, self.n_rho, self.v_min, self.v_max, self.n_v)
    }
}

/// Uniform lattice. Flat index `iv * n_rho + ir` (v-major, rho fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()
}

impl Grid2 {
    pub fn new(rho_min: f64, rho_max: f64, n_rho: usize, v_min: f64, v_max: f64, n_v: usize) -> Result<Grid2> {
        if !(rho_min > 0.0) || !(rho_max > rho_min) || !(v_max > v_min) {
            return Err(Error::Argument(format!(
                "grid needs 0 < rho_min < rho_max and v_min < v_max, got rho [{rho_min}, {rho_max}], v [{v_min}, {v_max}]"
            )));
        }
        if n_rho < 2 || n_v < 2 {
            return Err(Error::Argument(format!("grid counts must be >= 2, got {n_rho} x {n_v}")));
        }
        Ok(Grid2 { rho: linspace(rho_min, rho_max, n_rho), v: linspace(v_min, v_max, n_v) })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            rho_min: self.rho[0],
            rho_max: *self.rho.last().unwrap(),
            v_min: self.v[0],
            v_max: *self.v.last().unwrap(),
            n_rho: self.n_rho(),
            n_v: self.n_v(),
        }
    }

    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }

    pub fn n_v(&self) -> usize {
        self.v.len()
    }

    pub fn len(&self) -> usize {
        self.rho.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_rho(&self) -> f64 {
        (self.rho[self.n_rho() - 1] - self.rho[0]) / (self.n_rho() - 1) as f64
    }

    pub fn h_v(&self) -> f64 {
        (self.v[self.n_v() - 1] - self.v[0]) / (self.n_v() - 1) as f64
    }

    pub fn idx(&self, ir: usize, iv: usize) -> usize {
        iv * self.n_rho() + ir
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n_rho(), k / self.n_rho())
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let (ir, iv) = self.coords(k);
        (self.rho[ir], self.v[iv])
    }

    /// All points in storage order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Interior flat indices.
    pub fn interior(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for iv in 1..self.n_v() - 1 {
            for ir in 1..self.n_rho() - 1 {
                out.push(self.idx(ir, iv));
            }
        }
        out
    }

    /// Corner with the largest rho and smallest v.
    pub fn default_base(&self) -> (usize, usize) {
        (self.n_rho() - 1, 0)
    }
}

/// Second-order derivative of a 1D sequence with spacing `h`; one-sided at the ends.
pub fn diff1<T>(vals: &[T], h: f64) -> Vec<T>
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = vals.len();
    assert!(n >= 2);
    if n == 2 {
        let d = (vals[1].clone() - vals[0].clone()) * (1.0 / h);
        return vec![d.clone(), d];
    }
    let mut out = Vec::with_capacity(n);
    let c = 1.0 / (2.0 * h);
    out.push((vals[1].clone() * 4.0 - vals[0].clone() * 3.0 - vals[2].clone()) * c);
    for k in 1..n - 1 {
        out.push((vals[k + 1].clone() - vals[k - 1].clone()) * c);
    }
    out.push((vals[n - 1].clone() * 3.0 - vals[n - 2].clone() * 4.0 + vals[n - 3].clone()) * c);
    out
}

/// Partial derivatives of a grid function: `(d/drho, d/dv)`.
pub fn grid_gradient<T>(g: &Grid2, vals: &[T]) -> (Vec<T>, Vec<T>)
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    assert_eq!(vals.len(), g.len());
    let (nr, nv) = (g.n_rho(), g.n_v());
    let mut d_rho = vals.to_vec();
    let mut d_v = vals.to_vec();
    for iv in 0..nv {
        let row: Vec<T> = (0..nr).map(|ir| vals[g.idx(ir, iv)].clone()).collect();
        for (ir, d) in diff1(&row, g.h_rho()).into_iter().enumerate() {
            d_rho[g.idx(ir, iv)] = d;
        }
    }
    for ir in 0..nr {
        let col: Vec<T> = (0..nv).map(|iv| vals[g.idx(ir, iv)].clone()).collect();
        for (iv, d) in diff1(&col, g.h_v()).into_iter().enumerate() {
            d_v[g.idx(ir, iv)] = d;
        }
    }
    (d_rho, d_v)
}

/// 17 significant digits, exponent form, locale independent.
pub fn fmt17(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// CSV with header `rho,v,<names...>` in storage order.
pub fn to_csv(g: &Grid2, names: &[&str], columns: &[&[f64]]) -> String {
    assert_eq!(names.len(), columns.len());
    let mut s = String::from("rho,v");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for k in 0..g.len() {
        let (r, v) = g.point(k);
        let _ = write!(s, "{},{}", fmt17(r), fmt17(v));
        for c in columns {
            let _ = write!(s, ",{}", fmt17(c[k]));
        }
        s.push('\n');
    }
    s
}
