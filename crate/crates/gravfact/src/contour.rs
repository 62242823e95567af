//! Involution-invariant closed contours around the origin.
//!
//! A contour is `tau(theta) = exp(x(theta) + i y(theta))` on a uniform theta grid, where the
//! parity of `x` and `y - theta` makes `tau -> -lambda/tau` map the node set onto itself.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weyl::Sign;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative distance below which a point counts as lying on the curve.
pub const DEFAULT_ON_CURVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Circle,
    /// Star-shaped: `x = -c cos(theta)` (lambda = 1) or `x = c sin(theta)` (lambda = -1).
    Bump { c: f64 },
    /// Bump plus a second harmonic in both the radial and the angular part:
    /// `x = bump + e sin(2 theta)`, `y = theta - a sin(2 theta)`. Not star-shaped for large `a`.
    Fold { c: f64, e: f64, a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub lambda: Sign,
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(rename = "N")]
    pub n: usize,
}

impl ContourSpec {
    pub fn build(&self) -> Result<AdmissibleContour> {
        AdmissibleContour::new(self.lambda, self.shape, self.n)
    }

    /// Parse `circle`, `bump:<c>` or `fold:<c>,<e>,<a>`.
    pub fn parse_shape(s: &str) -> Result<Shape> {
        let bad = || Error::Argument(format!("cannot parse contour '{s}'"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if rest.is_empty() {
            vec![]
        } else {
            rest.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        match (kind, nums.as_slice()) {
            ("circle", []) => Ok(Shape::Circle),
            ("bump", [c]) => Ok(Shape::Bump { c: *c }),
            ("fold", [c, e, a]) => Ok(Shape::Fold { c: *c, e: *e, a: *a }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointSide {
    Inside,
    Outside,
    OnCurve(f64),
}

impl Shape {
    /// `(L, dL/dtheta)` with `tau = exp(L)`, valid for complex `theta`.
    pub fn log_param(&self, lambda: Sign, th: C64) -> (C64, C64) {
        let bump = |c: f64| match lambda {
            Sign::Plus => (-c * th.cos(), c * th.sin()),
            Sign::Minus => (c * th.sin(), c * th.cos()),
        };
        match *self {
            Shape::Circle => (I * th, I),
            Shape::Bump { c } => {
                let (x, dx) = bump(c);
                (x + I * th, dx + I)
            }
            Shape::Fold { c, e, a } => {
                let (bx, bdx) = bump(c);
                let s2 = (2.0 * th).sin();
                let c2 = (2.0 * th).cos();
                let x = bx + e * s2;
                let dx = bdx + 2.0 * e * c2;
                let y = th - a * s2;
                let dy = 1.0 - 2.0 * a * c2;
                (x + I * y, dx + I * dy)
            }
        }
    }
}

/// A discretised admissible contour with trapezoidal quadrature data.
#[derive(Debug, Clone)]
pub struct AdmissibleContour {
    pub lambda: Sign,
    pub shape: Shape,
    pub theta: Vec<f64>,
    pub nodes: Vec<C64>,
    /// `d tau / d theta` at the nodes.
    pub derivs: Vec<C64>,
    pub on_curve_tol: f64,
}

impl AdmissibleContour {
    pub fn new(lambda: Sign, shape: Shape, n: usize) -> Result<AdmissibleContour> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Argument(format!("node count must be even and >= 8, got {n}")));
        }
        match shape {
            Shape::Circle => {}
            Shape::Bump { c } => {
                if !(c.abs() < 3.0) {
                    return Err(Error::Argument(format!("bump height must satisfy |c| < 3, got {c}")));
                }
            }
            Shape::Fold { c, e, a } => {
                if !(c.abs() < 3.0 && e.abs() < 3.0 && a.abs() < 3.0) {
                    return Err(Error::Argument(format!("fold parameters out of range: {c}, {e}, {a}")));
                }
            }
        }
        let h = 2.0 * PI / n as f64;
        let theta: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let mut nodes = Vec::with_capacity(n);
        let mut derivs = Vec::with_capacity(n);
        for &t in &theta {
            let (l, dl) = shape.log_param(lambda, C64::new(t, 0.0));
            let tau = l.exp();
            nodes.push(tau);
            derivs.push(tau * dl);
        }
        let g = AdmissibleContour { lambda, shape, theta, nodes, derivs, on_curve_tol: DEFAULT_ON_CURVE_TOL };
        if let Shape::Fold { .. } = shape {
            if !g.is_simple() {
                return Err(Error::Contour("curve intersects itself".into()));
            }
        }
        Ok(g)
    }

    pub fn from_spec(spec: &ContourSpec) -> Result<AdmissibleContour> {
        spec.build()
    }

    pub fn spec(&self) -> ContourSpec {
        ContourSpec { lambda: self.lambda, shape: self.shape, n: self.n() }
    }

    /// Same curve with a different node count.
    pub fn with_nodes(&self, n: usize) -> Result<AdmissibleContour> {
        let mut g = AdmissibleContour::new(self.lambda, self.shape, n)?;
        g.on_curve_tol = self.on_curve_tol;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Trapezoidal weight in theta.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    /// `(tau, d tau/d theta)` at a possibly complex parameter.
    pub fn eval(&self, th: C64) -> (C64, C64) {
        let (l, dl) = self.shape.log_param(self.lambda, th);
        let tau = l.exp();
        (tau, tau * dl)
    }

    pub fn point(&self, th: f64) -> C64 {
        self.eval(C64::new(th, 0.0)).0
    }

    /// Dense polyline used for geometric queries.
    fn polyline(&self, m: usize) -> Vec<C64> {
        (0..m).map(|j| self.point(2.0 * PI * j as f64 / m as f64)).collect()
    }

    fn dense_count(&self) -> usize {
        (8 * self.n()).clamp(1024, 8192)
    }

    /// Largest distance from any node's involution image to the node set.
    pub fn invariance_residual(&self) -> f64 {
        let lam = self.lambda.value();
        self.nodes
            .iter()
            .map(|&t| {
                let img = -lam / t;
                self.nodes.iter().map(|&u| (u - img).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Distance from the involution's fixed points to the curve.
    pub fn fixed_point_distance(&self) -> f64 {
        let fixed = match self.lambda {
            Sign::Plus => [I, -I],
            Sign::Minus => [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
        };
        fixed.iter().map(|&z| self.distance_to(z)).fold(0.0, f64::max)
    }

    /// Euclidean distance from `z` to the curve (dense sampling, refined by local Newton).
    pub fn distance_to(&self, z: C64) -> f64 {
        let m = self.dense_count();
        let pts = self.polyline(m);
        let (jbest, _) = pts
            .iter()
            .enumerate()
            .map(|(j, &p)| (j, (p - z).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        // golden-section on the real parameter around the best sample
        let h = 2.0 * PI / m as f64;
        let (mut a, mut b) = ((jbest as f64 - 1.0) * h, (jbest as f64 + 1.0) * h);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        let f = |t: f64| (self.point(t) - z).norm();
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        for _ in 0..60 {
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        f(0.5 * (a + b)).min((pts[jbest] - z).norm())
    }

    /// Winding number of the curve about `z` from the dense polyline.
    pub fn winding_about(&self, z: C64) -> i64 {
        let pts = self.polyline(self.dense_count());
        let mut total = 0.0;
        for j in 0..pts.len() {
            let a = pts[j] - z;
            let b = pts[(j + 1) % pts.len()] - z;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i64
    }

    /// Classify `z` relative to the curve.
    pub fn contains(&self, z: C64) -> PointSide {
        let tol = self.on_curve_tol * z.norm().max(1.0);
        let dist = self.distance_to(z);
        if dist < tol {
            return PointSide::OnCurve(tol);
        }
        // near the curve the polyline may misclassify; use the side of the complex preimage
        let spacing = 2.0 * PI / self.dense_count() as f64 * self.max_speed();
        if dist < 4.0 * spacing * spacing {
            if let Some(th) = self.preimage_near(z) {
                return if th.im > 0.0 { PointSide::Inside } else { PointSide::Outside };
            }
        }
        if self.winding_about(z) != 0 {
            PointSide::Inside
        } else {
            PointSide::Outside
        }
    }

    fn max_speed(&self) -> f64 {
        self.derivs.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }

    /// Newton solve of `tau(theta) = z` started from the closest sample.
    fn preimage_near(&self, z: C64) -> Option<C64> {
        let m = self.dense_count();
        let pts = self.polyline(m);
        let j = (0..m).min_by(|&a, &b| (pts[a] - z).norm().partial_cmp(&(pts[b] - z).norm()).unwrap())?;
        self.newton_preimage(z, C64::new(2.0 * PI * j as f64 / m as f64, 0.0))
    }

    fn newton_preimage(&self, z: C64, start: C64) -> Option<C64> {
        let mut th = start;
        let logz = z.ln();
        for _ in 0..80 {
            let (l, dl) = self.shape.log_param(self.lambda, th);
            // solve L(theta) = log z modulo 2 pi i
            let mut r = l - logz;
            let k = (r.im / (2.0 * PI)).round();
            r -= I * (2.0 * PI * k);
            let step = r / dl;
            let step = if step.norm() > 0.5 { step * (0.5 / step.norm()) } else { step };
            th -= step;
            if step.norm() < 1e-14 {
                let (l, _) = self.shape.log_param(self.lambda, th);
                let tau = l.exp();
                return if (tau - z).norm() < 1e-10 * z.norm().max(1e-300) { Some(th) } else { None };
            }
        }
        None
    }

    /// Half-width `|Im theta*|` of the analyticity strip cut by a singularity at `z`.
    /// Trapezoidal errors for integrands singular at `z` scale like `exp(-N * d)`.
    pub fn parametric_distance(&self, z: C64) -> f64 {
        let m = 512usize;
        let pts = self.polyline(m);
        let d: Vec<f64> = pts.iter().map(|&p| (p - z).norm()).collect();
        let mut minima: Vec<usize> = (0..m).filter(|&j| d[j] <= d[(j + m - 1) % m] && d[j] <= d[(j + 1) % m]).collect();
        minima.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
        minima.truncate(4);
        let mut best = f64::INFINITY;
        for j in minima {
            let start = C64::new(2.0 * PI * j as f64 / m as f64, 0.0);
            if let Some(th) = self.newton_preimage(z, start) {
                best = best.min(th.im.abs());
            }
        }
        best
    }

    /// `(1/2 pi i) * trapezoid of d tau / tau`; equals 1 for a winding-one curve.
    pub fn quadrature_winding(&self) -> C64 {
        let w = self.weight();
        let s: C64 = self.nodes.iter().zip(&self.derivs).map(|(t, d)| d / t).sum();
        s * w / (2.0 * PI * I)
    }

    /// Arc-length spacing at node `j`.
    pub fn local_spacing(&self, j: usize) -> f64 {
        self.derivs[j].norm() * self.weight()
    }

    /// Polyline self-intersection test.
    pub fn is_simple(&self) -> bool {
        let m = (4 * self.n()).clamp(512, 4096);
        polyline_is_simple(&self.polyline(m))
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

fn polyline_is_simple(pts: &[C64]) -> bool {
    let m = pts.len();
    let seg: Vec<(C64, C64, [f64; 4])> = (0..m)
        .map(|j| {
            let (a, b) = (pts[j], pts[(j + 1) % m]);
            (a, b, [a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im)])
        })
        .collect();
    for i in 0..m {
        for j in (i + 2)..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (bi, bj) = (&seg[i].2, &seg[j].2);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                continue;
            }
            if segments_cross(seg[i].0, seg[i].1, seg[j].0, seg[j].1) {
                return false;
            }
        }
    }
    true
}

pub fn unit_circle(lambda: Sign, n: usize) -> Result<AdmissibleContour> {
    AdmissibleContour::new(lambda, Shape::Circle, n)
}

pub fn bump_contour(lambda: Sign, c: f64, n: usize) -> Result<AdmissibleContour> {
    AdmissibleContour::new(lambda, Shape::Bump { c }, n)
}

pub fn contains(g: &AdmissibleContour, z: C64) -> PointSide {
    g.contains(z)
}

/// Schwarzschild contour class from the positions of the two roots.
pub fn classify_schwarzschild_case(g: &AdmissibleContour, tau1: f64, tau2: f64) -> Result<u8> {
    let lam = g.lambda.value();
    let mut sides = [PointSide::Outside; 2];
    for (k, &t) in [tau1, tau2].iter().enumerate() {
        if t == 0.0 {
            return Err(Error::Contour("root at the origin".into()));
        }
        let z = C64::new(t, 0.0);
        let img = C64::new(-lam / t, 0.0);
        for q in [z, img] {
            if let PointSide::OnCurve(_) = g.contains(q) {
                return Err(Error::Contour(format!("point {q} lies on the contour")));
            }
        }
        sides[k] = g.contains(z);
    }
    use PointSide::*;
    Ok(match (sides[0], sides[1]) {
        (Inside, Inside) => 1,
        (Outside, Inside) => 2,
        (Outside, Outside) => 3,
        (Inside, Outside) => 4,
        _ => unreachable!(),
    })
}

/// Automatic contour construction from a prescribed inside/outside split.
pub mod design {
    use super::*;
    use crate::optim::{golden_section_min, nelder_mead};

    /// Complete a pole split with involution images: the image of an inside point is outside.
    pub fn with_images(lambda: Sign, inside: &[C64], outside: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let lam = lambda.value();
        let mut ins: Vec<C64> = inside.to_vec();
        let mut outs: Vec<C64> = outside.to_vec();
        ins.extend(outside.iter().map(|&z| -lam / z));
        outs.extend(inside.iter().map(|&z| -lam / z));
        (ins, outs)
    }

    pub fn min_parametric_distance(g: &AdmissibleContour, pts: &[C64]) -> f64 {
        pts.iter().map(|&z| g.parametric_distance(z)).fold(f64::INFINITY, f64::min)
    }

    fn split_ok(g: &AdmissibleContour, inside: &[C64], outside: &[C64]) -> bool {
        inside.iter().all(|&z| g.contains(z) == PointSide::Inside)
            && outside.iter().all(|&z| g.contains(z) == PointSide::Outside)
    }

    /// Feasible bump heights, as an open interval.
    fn bump_interval(lambda: Sign, inside: &[C64], outside: &[C64], cap: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (-cap, cap);
        let mut add = |z: C64, want_inside: bool| -> bool {
            let l = z.norm().ln();
            let q = match lambda {
                Sign::Plus => z.arg().cos(),
                Sign::Minus => -z.arg().sin(),
            };
            // inside iff l + c q < 0
            if q.abs() < 1e-14 {
                return (l < 0.0) == want_inside;
            }
            let crit = -l / q;
            let upper = (q > 0.0) == want_inside;
            if upper {
                hi = hi.min(crit);
            } else {
                lo = lo.max(crit);
            }
            true
        };
        for &z in inside {
            if !add(z, true) {
                return None;
            }
        }
        for &z in outside {
            if !add(z, false) {
                return None;
            }
        }
        (lo < hi).then_some((lo, hi))
    }

    /// Star-shaped contour with the given points inside/outside, maximising the smallest
    /// parametric distance to the listed points. Returns `None` when no bump separates them.
    pub fn bump_for(lambda: Sign, inside: &[C64], outside: &[C64], n: usize) -> Result<Option<AdmissibleContour>> {
        const CAP: f64 = 2.0;
        let Some((lo, hi)) = bump_interval(lambda, inside, outside, CAP) else {
            return Ok(None);
        };
        let pts: Vec<C64> = inside.iter().chain(outside).copied().collect();
        if pts.is_empty() {
            return Ok(Some(AdmissibleContour::new(lambda, Shape::Circle, n)?));
        }
        let width = hi - lo;
        let (a, b) = (lo + 1e-3 * width, hi - 1e-3 * width);
        let cost = |c: f64| match AdmissibleContour::new(lambda, Shape::Bump { c }, 8) {
            Ok(g) => -min_parametric_distance(&g, &pts),
            Err(_) => f64::INFINITY,
        };
        let c = golden_section_min(cost, a, b, 1e-6);
        let g = AdmissibleContour::new(lambda, Shape::Bump { c }, n)?;
        if !split_ok(&g, inside, outside) {
            return Ok(None);
        }
        Ok(Some(g))
    }

    struct FoldCost<'a> {
        lambda: Sign,
        inside: &'a [C64],
        outside: &'a [C64],
    }

    impl FoldCost<'_> {
        fn eval(&self, p: &[f64]) -> f64 {
            let shape = Shape::Fold { c: p[0], e: p[1], a: p[2] };
            if p.iter().any(|x| !(x.abs() < 2.5)) {
                return 10.0;
            }
            let g = AdmissibleContour {
                lambda: self.lambda,
                shape,
                theta: vec![],
                nodes: vec![],
                derivs: vec![],
                on_curve_tol: DEFAULT_ON_CURVE_TOL,
            };
            let poly: Vec<C64> = (0..256).map(|j| g.point(2.0 * PI * j as f64 / 256.0)).collect();
            if !polyline_is_simple(&poly) {
                return 5.0;
            }
            let side = |z: C64| {
                let mut total = 0.0;
                for j in 0..poly.len() {
                    total += ((poly[(j + 1) % poly.len()] - z) / (poly[j] - z)).arg();
                }
                (total / (2.0 * PI)).round() as i64 != 0
            };
            let wrong = self.inside.iter().filter(|&&z| !side(z)).count()
                + self.outside.iter().filter(|&&z| side(z)).count();
            if wrong > 0 {
                return 1.0 + wrong as f64;
            }
            let pts: Vec<C64> = self.inside.iter().chain(self.outside).copied().collect();
            -pts.iter().map(|&z| g.parametric_distance(z)).fold(f64::INFINITY, f64::min)
        }
    }

    /// Non-star-shaped contour for splits no bump can realise (e.g. a far point inside
    /// together with a near point outside on the same ray).
    pub fn fold_for(lambda: Sign, inside: &[C64], outside: &[C64], n: usize) -> Result<Option<AdmissibleContour>> {
        let cost = FoldCost { lambda, inside, outside };
        let mut best: Option<(f64, [f64; 3])> = None;
        for &a in &[0.5, 0.75, 1.0] {
            for ic in -8..=8 {
                for ie in -8..=8 {
                    let p = [ic as f64 * 0.25, ie as f64 * 0.25, a];
                    let f = cost.eval(&p);
                    if best.is_none_or(|(b, _)| f < b) {
                        best = Some((f, p));
                    }
                }
            }
        }
        let Some((f0, p0)) = best else { return Ok(None) };
        if f0 >= 0.0 {
            return Ok(None);
        }
        let p = nelder_mead(|p| cost.eval(p), &p0, &[0.1, 0.1, 0.05], 1e-7, 300);
        let g = match AdmissibleContour::new(lambda, Shape::Fold { c: p[0], e: p[1], a: p[2] }, n) {
            Ok(g) => g,
            Err(_) => return Ok(None),
        };
        Ok(split_ok(&g, inside, outside).then_some(g))
    }

    /// Contour separating `inside` from `outside`, involution images included automatically.
    pub fn separating_contour(lambda: Sign, inside: &[C64], outside: &[C64], n: usize) -> Result<AdmissibleContour> {
        let (ins, outs) = with_images(lambda, inside, outside);
        if let Some(g) = bump_for(lambda, &ins, &outs, n)? {
            return Ok(g);
        }
        if let Some(g) = fold_for(lambda, &ins, &outs, n)? {
            return Ok(g);
        }
        Err(Error::Contour("no admissible contour found for the requested split".into()))
    }

    /// Contour realising Schwarzschild case 1-4 for real roots `tau1`, `tau2` (lambda = 1).
    pub fn schwarzschild_case_contour(case: u8, tau1: f64, tau2: f64, n: usize) -> Result<AdmissibleContour> {
        let (t1, t2) = (C64::new(tau1, 0.0), C64::new(tau2, 0.0));
        let (ins, outs): (Vec<C64>, Vec<C64>) = match case {
            1 => (vec![t1, t2], vec![]),
            2 => (vec![t2], vec![t1]),
            3 => (vec![], vec![t1, t2]),
            4 => (vec![t1], vec![t2]),
            _ => return Err(Error::Argument(format!("case must be 1..=4, got {case}"))),
        };
        separating_contour(Sign::Plus, &ins, &outs, n)
    }
}
