use std::collections::BTreeMap;
use std::sync::Arc;

use gravfact::contour::{classify_schwarzschild_case, unit_circle, AdmissibleContour, Shape};
use gravfact::grid::{fmt17, Grid2, GridSpec};
use gravfact::monodromy::{builtin, FamilyKind, MonodromyFamily, BUILTIN_NAMES};
use gravfact::recon::{
    fields_from_grid, fields_from_m, reconstruct, reference_solution, CosetField, FnField, MatrixGrid, RMat,
    ReconOptions, ReferenceKind, ReferenceSolution, REFERENCE_NAMES,
};
use gravfact::solver::{
    default_contour, ergosurface_trace, factorize, factorize_many, positive_representative, symmetric_form_check,
    FactorizationResult, SolverOptions,
};
use gravfact::taugen::{
    catalog_pair, einstein_rosen_pair, factorization_invariance_residual, identity_pair, kasner_pair,
    product_solution, tau_invariance_residual, GeneratorPair, LaxPair, CATALOG_NAMES,
};
use gravfact::verify::{
    field_equation_residual, field_equation_residual_at, lax_residual, phi_branch, zero_curvature_residual_at, Branch,
};
use gravfact::weyl::{phi_roots_real, Sign, WeylPoint};
use gravfact::{Error, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{CommonArgs, ErgoArgs};
use crate::config::{JobConfig, Tolerances};
use crate::output::{to_json, CliResult, Failure, Outputs};

const DEFAULT_GRID: GridSpec = GridSpec { rho_min: 0.5, rho_max: 2.0, v_min: -0.6, v_max: 0.6, n_rho: 5, n_v: 5 };

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn stencil_step(rho_min: f64) -> f64 {
    (1e-3f64).min(rho_min / 4.0)
}

/// Points to evaluate: the single `--at` point or the grid.
enum Sites {
    Point([f64; 2]),
    Grid(Grid2),
}

impl Sites {
    fn from_config(cfg: &JobConfig, default: GridSpec) -> CliResult<Sites> {
        Ok(match (cfg.at, &cfg.grid) {
            (Some(p), _) => Sites::Point(p),
            (None, Some(g)) => Sites::Grid(g.build()?),
            (None, None) => Sites::Grid(default.build()?),
        })
    }

    fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Sites::Point(p) => vec![(p[0], p[1])],
            Sites::Grid(g) => g.points(),
        }
    }

    fn describe(&self) -> (Value, Value) {
        match self {
            Sites::Point(p) => (Value::Null, json!(p)),
            Sites::Grid(g) => (serde_json::to_value(g.spec()).unwrap(), Value::Null),
        }
    }

    fn rho_min(&self) -> f64 {
        match self {
            Sites::Point(p) => p[0],
            Sites::Grid(g) => g.rho[0],
        }
    }
}

fn family_from(cfg: &JobConfig) -> CliResult<MonodromyFamily> {
    let m = cfg.model.as_ref().ok_or_else(|| Error::Argument("--model is required".into()))?;
    Ok(builtin(&m.name, &m.params)?)
}

fn contour_for(
    shape: Option<Shape>,
    f: &MonodromyFamily,
    p: &WeylPoint,
    n: usize,
) -> gravfact::Result<AdmissibleContour> {
    match shape {
        Some(s) => AdmissibleContour::new(f.lambda, s, n),
        None => default_contour(f, p, n),
    }
}

fn contour_json(cfg: &JobConfig, n: usize) -> Value {
    let shape = cfg.contour.as_ref().and_then(|c| c.shape.clone()).unwrap_or_else(|| "designed".into());
    json!({ "shape": shape, "N": n })
}

fn solver_options(tol: &Tolerances) -> SolverOptions {
    SolverOptions { jump_tol: tol.jump_tol, ..SolverOptions::default() }
}

/// Schwarzschild case of each point on its contour.
fn schwarzschild_cases(f: &MonodromyFamily, results: &[FactorizationResult]) -> CliResult<Value> {
    let FamilyKind::Schwarzschild { m } = f.kind else {
        return Ok(Value::Null);
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in results {
        let t1 = phi_roots_real(m, &r.point).1.re;
        let t2 = phi_roots_real(-m, &r.point).1.re;
        let case = classify_schwarzschild_case(&r.contour, t1, t2)?;
        *counts.entry(case.to_string()).or_default() += 1;
    }
    Ok(json!(counts))
}

pub fn factorize_cmd(a: &CommonArgs) -> CliResult<Value> {
    let cfg = JobConfig::resolve(a)?;
    let tol = cfg.tol();
    let f = family_from(&cfg)?;
    let sites = Sites::from_config(&cfg, DEFAULT_GRID)?;
    let n = cfg.node_count(256);
    let shape = cfg.shape()?;
    let points: Vec<WeylPoint> =
        sites.points().iter().map(|&(r, v)| WeylPoint::new(r, v, f.lambda)).collect::<gravfact::Result<_>>()?;
    let opts = solver_options(&tol);
    let results: Vec<FactorizationResult> = factorize_many(&f, &points, |p| contour_for(shape, &f, p, n), &opts)
        .into_iter()
        .collect::<gravfact::Result<_>>()?;

    let mut flips = 0usize;
    let values: Vec<RMat> = results
        .iter()
        .map(|r| {
            let (m, flipped) = positive_representative(&r.m);
            flips += flipped as usize;
            m
        })
        .collect();
    let dim = f.dim();
    let mut report = json!({
        "schema": 1,
        "command": "factorize",
        "model": { "name": f.name, "params": f.params },
        "lambda": f.lambda.value(),
        "contour": contour_json(&cfg, n),
        "points": results.len(),
        "max_jump_residual": max_of(results.iter().map(|r| r.jump_residual)),
        "min_sigma_min": results.iter().filter_map(|r| r.sigma_min).reduce(f64::min),
        "max_asymmetry": max_of(results.iter().map(|r| r.asymmetry)),
        "max_imag_part": max_of(results.iter().map(|r| r.imag_part)),
        "max_det_error": max_of(values.iter().map(|m| (m.determinant().abs() - 1.0).abs())),
        "sign_flips": flips,
        "schwarzschild_cases": schwarzschild_cases(&f, &results)?,
    });
    let (grid_json, at_json) = sites.describe();
    report["grid"] = grid_json;
    report["at"] = at_json;

    let csv = if dim == 2 {
        match &sites {
            Sites::Grid(g) => {
                let mg = MatrixGrid { grid: g.clone(), lambda: f.lambda, values };
                let mut ro = ReconOptions::for_lambda(f.lambda);
                ro.grid_closure_tol = f64::INFINITY;
                let fields = fields_from_grid(&mg, &ro)?;
                report["b_closure"] = json!(fields.b_closure);
                report["psi_closure"] = json!(fields.psi_closure);
                fields.to_csv()
            }
            Sites::Point(p) => {
                let (d, bt) = fields_from_m(&values[0])?;
                format!("rho,v,Delta,Btilde\n{},{},{},{}\n", fmt17(p[0]), fmt17(p[1]), fmt17(d), fmt17(bt))
            }
        }
    } else {
        matrix_csv(&sites, &values)
    };
    let mut out = Outputs::new(&cfg.out_dir());
    out.add("fields.csv", csv);
    report["files"] = json!(["fields.csv", "report.json"]);
    out.add("report.json", to_json(&report));
    out.commit()?;
    Ok(report)
}

/// `rho,v,M00..,det` for matrices of any size.
fn matrix_csv(sites: &Sites, values: &[RMat]) -> String {
    let n = values[0].nrows();
    let names: Vec<String> = (0..n).flat_map(|i| (0..n).map(move |j| format!("M{i}{j}"))).chain(["det".into()]).collect();
    let mut s = format!("rho,v,{}\n", names.join(","));
    for ((r, v), m) in sites.points().into_iter().zip(values) {
        let mut row = vec![fmt17(r), fmt17(v)];
        row.extend((0..n).flat_map(|i| (0..n).map(move |j| fmt17(m[(i, j)]))));
        row.push(fmt17(m.determinant()));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Lax pair matching a reference solution, where one is known.
fn reference_pair(r: &ReferenceSolution) -> Option<Arc<dyn LaxPair>> {
    match r.kind {
        ReferenceKind::Identity => Some(Arc::new(identity_pair(2, r.lambda))),
        ReferenceKind::Kasner => Some(Arc::new(kasner_pair())),
        ReferenceKind::EinsteinRosen { a, b, k } => einstein_rosen_pair(a, b, k).ok().map(|p| Arc::new(p) as _),
        ReferenceKind::DeformedKasner { a, b } => {
            let er: Arc<dyn LaxPair> = Arc::new(einstein_rosen_pair(a, b, 1.0).ok()?);
            product_solution(er, Arc::new(kasner_pair())).ok().map(|p| Arc::new(p) as _)
        }
        _ => None,
    }
}

fn default_reference_grid(r: &ReferenceSolution) -> GridSpec {
    match r.kind {
        // Kasner's Lax factor separates its zeros from the unit circle only for |v| > rho
        ReferenceKind::Kasner | ReferenceKind::DeformedKasner { .. } => {
            GridSpec { rho_min: 0.5, rho_max: 1.0, v_min: 1.5, v_max: 2.5, n_rho: 5, n_v: 5 }
        }
        ReferenceKind::DeformedSchwarzschild { .. } => {
            GridSpec { rho_min: 0.5, rho_max: 2.0, v_min: -3.0, v_max: -1.5, n_rho: 5, n_v: 5 }
        }
        _ => GridSpec { rho_min: 0.5, rho_max: 2.0, v_min: -0.5, v_max: 0.5, n_rho: 5, n_v: 5 },
    }
}

struct Check {
    name: &'static str,
    value: Option<f64>,
    tol: f64,
}

fn judge(report: &mut Value, checks: &[Check]) -> Vec<String> {
    let mut failed = Vec::new();
    let mut obj = serde_json::Map::new();
    for c in checks {
        let pass = c.value.map(|v| v.is_finite() && v <= c.tol).unwrap_or(true);
        if !pass {
            failed.push(c.name.to_string());
        }
        obj.insert(c.name.into(), json!({ "value": c.value, "tol": c.tol, "pass": pass }));
    }
    report["checks"] = Value::Object(obj);
    report["pass"] = json!(failed.is_empty());
    failed
}

fn corrupted(field: &ReferenceSolution) -> impl CosetField + '_ {
    FnField {
        lambda: field.lambda,
        f: move |r: f64, v: f64| {
            let mut m = field.m(r, v)?;
            let e = 1e-2 * (r * v + 0.3).sin();
            m[(0, 1)] += e;
            m[(1, 0)] += e;
            Ok(m)
        },
    }
}

pub fn verify_cmd(a: &CommonArgs) -> CliResult<Value> {
    let cfg = JobConfig::resolve(a)?;
    match (&cfg.reference, &cfg.model) {
        (Some(name), _) => verify_reference(&cfg, name, a.inject_corruption),
        (None, Some(_)) => verify_model(&cfg),
        (None, None) => Err(Error::Argument("verify needs --reference or --model".into()).into()),
    }
}

fn verify_reference(cfg: &JobConfig, name: &str, corrupt: bool) -> CliResult<Value> {
    let tol = cfg.tol();
    let r = reference_solution(name, &cfg.params)?;
    let grid = cfg.grid.clone().unwrap_or_else(|| default_reference_grid(&r)).build()?;
    let bad;
    let field: &dyn CosetField = if corrupt {
        bad = corrupted(&r);
        &bad
    } else {
        &r
    };
    let h = stencil_step(grid.rho[0]);
    let pts = grid.points();
    let per_point: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|&(rho, v)| {
            let fe = field_equation_residual_at(field, rho, v, h)?;
            let zc = zero_curvature_residual_at(field, rho, v, h)?;
            let (ar, av) = gravfact::recon::connection_at(field, rho, v)?;
            Ok((fe, zc, ar.trace().abs().max(av.trace().abs())))
        })
        .collect::<gravfact::Result<_>>()?;
    let fe = max_of(per_point.iter().map(|x| x.0));
    let zc = max_of(per_point.iter().map(|x| x.1));
    let tr = max_of(per_point.iter().map(|x| x.2));

    // grid convergence order of the second-difference residual
    let order = if grid.n_rho() >= 3 && grid.n_v() >= 3 {
        let s = grid.spec();
        let fine = Grid2::new(s.rho_min, s.rho_max, 2 * s.n_rho - 1, s.v_min, s.v_max, 2 * s.n_v - 1)?;
        let c = field_equation_residual(&MatrixGrid::sample(field, &grid)?)?.max;
        let f = field_equation_residual(&MatrixGrid::sample(field, &fine)?)?.max;
        (c > 1e-10 && f > 0.0).then(|| (c / f).log2())
    } else {
        None
    };

    let (lax, tau) = match (reference_pair(&r), corrupt) {
        (Some(pair), false) => {
            let g = unit_circle(r.lambda, 64)?;
            let vals: Vec<(f64, f64)> = pts
                .par_iter()
                .map(|&(rho, v)| {
                    let p = WeylPoint::new(rho, v, r.lambda)?;
                    let (ar, av) = gravfact::recon::connection_at(pair.as_ref(), rho, v)?;
                    let xe = |t: C64, rr: f64, vv: f64| pair.x(t, rr, vv);
                    // residual relative to |X| on the curve; it is linear in X
                    let omega = v + 1.25 * rho;
                    let mut lx = 0.0f64;
                    for br in [Branch::Plus, Branch::Minus] {
                        let t = phi_branch(omega, rho, v, r.lambda, br)?;
                        let size = pair.x(t, rho, v)?.iter().fold(1.0f64, |s, z| s.max(z.norm()));
                        lx = lx.max(lax_residual(&xe, &ar, &av, omega, br, &p)? / size);
                    }
                    let scale = pair.m(rho, v)?.abs().max().max(1.0);
                    Ok((lx, tau_invariance_residual(pair.as_ref(), &g, &p)? / scale))
                })
                .collect::<gravfact::Result<_>>()?;
            (Some(max_of(vals.iter().map(|x| x.0))), Some(max_of(vals.iter().map(|x| x.1))))
        }
        _ => (None, None),
    };

    let ro = ReconOptions::for_lambda(r.lambda);
    let (closure, psi_err) = match reconstruct(field, &grid, &ro) {
        Ok(fields) => {
            let base = grid.default_base();
            let err = if corrupt {
                None
            } else {
                r.psi_closed(grid.rho[base.0], grid.v[base.1]).map(|p0| {
                    max_of((0..grid.len()).map(|k| {
                        let (rho, v) = grid.point(k);
                        (fields.psi[k] - (r.psi_closed(rho, v).unwrap() - p0)).abs()
                    }))
                })
            };
            (fields.b_closure.max(fields.psi_closure), err)
        }
        Err(Error::Inconsistency(_)) => (f64::INFINITY, None),
        Err(e) => return Err(e.into()),
    };

    let mut report = json!({
        "schema": 1,
        "command": "verify",
        "reference": r.name,
        "lambda": r.lambda.value(),
        "grid": grid.spec(),
        "stencil_step": h,
        "field_grid_order": order,
        "corrupted": corrupt,
    });
    let failed = judge(
        &mut report,
        &[
            Check { name: "field_equation", value: Some(fe), tol: tol.field },
            Check { name: "zero_curvature", value: Some(zc), tol: tol.zero_curvature },
            Check { name: "trace", value: Some(tr), tol: tol.trace },
            Check { name: "lax", value: lax, tol: tol.lax },
            Check { name: "tau_invariance", value: tau, tol: tol.tau_invariance },
            Check { name: "integrability", value: Some(closure), tol: ReconOptions::for_lambda(r.lambda).closure_tol },
            Check { name: "psi_closed_form", value: psi_err, tol: tol.psi },
        ],
    );
    finish_verify(cfg, report, failed)
}

fn finish_verify(cfg: &JobConfig, mut report: Value, failed: Vec<String>) -> CliResult<Value> {
    report["files"] = json!(["report.json"]);
    let mut out = Outputs::new(&cfg.out_dir());
    out.add("report.json", to_json(&report));
    out.commit()?;
    if failed.is_empty() {
        Ok(report)
    } else {
        println!("{}", to_json(&report).trim_end());
        Err(Failure::Verify(failed))
    }
}

fn verify_model(cfg: &JobConfig) -> CliResult<Value> {
    let tol = cfg.tol();
    let f = family_from(cfg)?;
    let sites = Sites::from_config(cfg, DEFAULT_GRID)?;
    let n = cfg.node_count(128);
    let shape = cfg.shape()?;
    let opts = solver_options(&tol);
    let h = stencil_step(sites.rho_min());
    let rows: Vec<[f64; 5]> = sites
        .points()
        .par_iter()
        .map(|&(rho, v)| -> gravfact::Result<[f64; 5]> {
            let p = WeylPoint::new(rho, v, f.lambda)?;
            let g = contour_for(shape, &f, &p, n)?;
            let r = factorize(&f, &p, &g, &opts)?;
            let sym = symmetric_form_check(&r, &f)?;
            let field = FnField {
                lambda: f.lambda,
                f: |rr: f64, vv: f64| -> gravfact::Result<RMat> {
                    let q = WeylPoint::new(rr, vv, f.lambda)?;
                    Ok(positive_representative(&factorize(&f, &q, &g, &opts)?.m).0)
                },
            };
            let fe = field_equation_residual_at(&field, rho, v, h)?;
            let zc = zero_curvature_residual_at(&field, rho, v, h)?;
            let tau = factorization_invariance_residual(&f, &p, &g, &opts, h)?;
            Ok([r.jump_residual, sym, fe, zc, tau])
        })
        .collect::<gravfact::Result<_>>()?;
    let col = |i: usize| Some(max_of(rows.iter().map(|r| r[i])));
    let mut report = json!({
        "schema": 1,
        "command": "verify",
        "model": { "name": f.name, "params": f.params },
        "lambda": f.lambda.value(),
        "contour": contour_json(cfg, n),
        "points": rows.len(),
        "stencil_step": h,
    });
    let (gj, aj) = sites.describe();
    report["grid"] = gj;
    report["at"] = aj;
    let failed = judge(
        &mut report,
        &[
            Check { name: "jump", value: col(0), tol: tol.jump_tol },
            Check { name: "symmetric_form", value: col(1), tol: tol.symmetric_form },
            Check { name: "field_equation", value: col(2), tol: tol.field },
            Check { name: "zero_curvature", value: col(3), tol: tol.zero_curvature },
            Check { name: "tau_invariance", value: col(4), tol: tol.tau_invariance },
        ],
    );
    finish_verify(cfg, report, failed)
}

pub fn ergosurface_cmd(a: &ErgoArgs) -> CliResult<Value> {
    let samples = ergosurface_trace(a.m, a.a, a.samples)?;
    let mut csv = String::from("y,u,rho,v\n");
    for s in &samples {
        csv.push_str(&format!("{},{},{},{}\n", fmt17(s.y), fmt17(s.u), fmt17(s.rho), fmt17(s.v)));
    }
    let dev = max_of(samples.iter().map(|s| (s.u - (a.m * a.m - a.a * a.a * s.y * s.y).sqrt()).abs()));
    let report = json!({
        "schema": 1,
        "command": "ergosurface",
        "m": a.m,
        "a": a.a,
        "samples": samples.len(),
        "max_deviation_from_closed_form": dev,
        "files": ["ergosurface.csv"],
    });
    let mut out = Outputs::new(&a.out.clone().unwrap_or_else(|| ".".into()));
    out.add("ergosurface.csv", csv);
    out.commit()?;
    Ok(report)
}

fn parse_list(s: &str, what: &str) -> gravfact::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Argument(format!("bad {what} list '{s}'"))))
        .collect()
}

/// `gen:<omegas>:<exponents>:<plus|minus>`.
fn parse_generator(spec: &str, lambda: Sign) -> gravfact::Result<GeneratorPair> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 || parts[0] != "gen" {
        return Err(Error::Argument(format!("generator must be gen:<omegas>:<exponents>:<plus|minus>, got '{spec}'")));
    }
    let omegas = parse_list(parts[1], "omega")?;
    let exps = parse_list(parts[2], "exponent")?;
    let branch = match parts[3] {
        "plus" => Branch::Plus,
        "minus" => Branch::Minus,
        other => return Err(Error::Argument(format!("branch must be plus or minus, got '{other}'"))),
    };
    GeneratorPair::new(lambda, &omegas, &exps, branch)
}

pub fn generate_cmd(a: &CommonArgs) -> CliResult<Value> {
    let cfg = JobConfig::resolve(a)?;
    let tol = cfg.tol();
    if cfg.pipeline.is_empty() {
        return Err(Error::Argument("empty pipeline: give at least one --pair".into()).into());
    }
    let default_lambda = Sign::from_value(cfg.params.get("lambda").copied().unwrap_or(-1.0))?;
    let mut acc: Option<Arc<dyn LaxPair>> = None;
    for item in &cfg.pipeline {
        let lambda = acc.as_ref().map(|p| p.lambda()).unwrap_or(default_lambda);
        let next: Arc<dyn LaxPair> =
            if item.starts_with("gen:") { Arc::new(parse_generator(item, lambda)?) } else { catalog_pair(item, &cfg.params)? };
        acc = Some(match acc {
            None => next,
            Some(prev) => Arc::new(product_solution(prev, next)?),
        });
    }
    let pair = acc.unwrap();
    let grid = cfg
        .grid
        .clone()
        .unwrap_or(GridSpec { rho_min: 0.5, rho_max: 1.0, v_min: 1.5, v_max: 2.5, n_rho: 5, n_v: 5 })
        .build()?;
    let ro = ReconOptions::for_lambda(pair.lambda());
    let fields = reconstruct(pair.as_ref(), &grid, &ro)?;
    let h = stencil_step(grid.rho[0]);
    let g = unit_circle(pair.lambda(), 64)?;
    let vals: Vec<(f64, f64)> = grid
        .points()
        .par_iter()
        .map(|&(rho, v)| {
            let p = WeylPoint::new(rho, v, pair.lambda())?;
            let scale = pair.m(rho, v)?.abs().max().max(1.0);
            Ok((field_equation_residual_at(pair.as_ref(), rho, v, h)?, tau_invariance_residual(pair.as_ref(), &g, &p)? / scale))
        })
        .collect::<gravfact::Result<_>>()?;
    let mut report = json!({
        "schema": 1,
        "command": "generate",
        "pipeline": cfg.pipeline,
        "product": pair.name(),
        "lambda": pair.lambda().value(),
        "grid": grid.spec(),
        "stencil_step": h,
        "b_closure": fields.b_closure,
        "psi_closure": fields.psi_closure,
        "max_abs_log_delta": max_of(fields.delta.iter().map(|d| d.ln().abs())),
    });
    let failed = judge(
        &mut report,
        &[
            Check { name: "field_equation", value: Some(max_of(vals.iter().map(|x| x.0))), tol: tol.field },
            Check { name: "tau_invariance", value: Some(max_of(vals.iter().map(|x| x.1))), tol: tol.tau_invariance },
        ],
    );
    report["files"] = json!(["fields.csv", "report.json"]);
    if !failed.is_empty() {
        println!("{}", to_json(&report).trim_end());
        return Err(Failure::Verify(failed));
    }
    let mut out = Outputs::new(&cfg.out_dir());
    out.add("fields.csv", fields.to_csv());
    out.add("report.json", to_json(&report));
    out.commit()?;
    Ok(report)
}

pub fn catalog_cmd() -> CliResult<Value> {
    Ok(json!({
        "schema": 1,
        "command": "catalog",
        "families": BUILTIN_NAMES,
        "references": REFERENCE_NAMES,
        "pairs": CATALOG_NAMES,
        "generator": "gen:<omegas>:<exponents>:<plus|minus>",
        "contours": ["circle", "bump:<c>", "fold:<c>,<e>,<a>"],
    }))
}
