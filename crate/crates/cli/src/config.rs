//! Job configuration: JSON file merged with command-line flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use gravfact::contour::{ContourSpec, Shape};
use gravfact::grid::GridSpec;
use gravfact::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::CommonArgs;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    /// `circle`, `bump:<c>` or `fold:<c>,<e>,<a>`; absent means a designed contour per point.
    pub shape: Option<String>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub jump_tol: f64,
    pub field: f64,
    pub zero_curvature: f64,
    pub trace: f64,
    pub lax: f64,
    pub tau_invariance: f64,
    pub psi: f64,
    pub symmetric_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            jump_tol: 1e-7,
            field: 1e-6,
            zero_curvature: 1e-6,
            trace: 1e-8,
            lax: 1e-7,
            tau_invariance: 1e-7,
            psi: 1e-6,
            symmetric_form: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
}

/// Everything a subcommand may read; every field optional in the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: Option<ModelConfig>,
    pub reference: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub contour: Option<ContourConfig>,
    pub grid: Option<GridSpec>,
    pub at: Option<[f64; 2]>,
    #[serde(default)]
    pub pipeline: Vec<String>,
    #[serde(default)]
    pub outputs: Outputs,
    pub tolerances: Option<Tolerances>,
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::Argument(format!("grid must be rho_min,rho_max,n_rho,v_min,v_max,n_v; got '{s}'"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(bad());
    }
    let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
    let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
    Ok(GridSpec { rho_min: f(0)?, rho_max: f(1)?, n_rho: n(2)?, v_min: f(3)?, v_max: f(4)?, n_v: n(5)? })
}

pub fn parse_point(s: &str) -> Result<[f64; 2]> {
    let bad = || Error::Argument(format!("point must be rho,v; got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn parse_param(s: &str) -> Result<(String, f64)> {
    let bad = || Error::Argument(format!("parameter must be key=value; got '{s}'"));
    let (k, v) = s.split_once('=').ok_or_else(bad)?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|_| bad())?))
}

/// Parameters given on the command line, in a fixed key order.
fn flag_params(a: &CommonArgs) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, val) in
        [("m", a.m), ("a", a.a), ("b", a.b), ("k", a.k), ("xi", a.xi), ("lambda", a.lambda), ("exponent", a.exponent)]
    {
        if let Some(v) = val {
            out.insert(key.to_string(), v);
        }
    }
    for p in &a.param {
        let (k, v) = parse_param(p)?;
        out.insert(k, v);
    }
    Ok(out)
}

impl JobConfig {
    pub fn load(path: &std::path::Path) -> Result<JobConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Argument(format!("invalid config {}: {e}", path.display())))
    }

    /// Config file (if any) overridden by flags.
    pub fn resolve(a: &CommonArgs) -> Result<JobConfig> {
        let mut cfg = match &a.config {
            Some(p) => JobConfig::load(p)?,
            None => JobConfig::default(),
        };
        let params = flag_params(a)?;
        if let Some(name) = &a.model {
            let keep = cfg.model.take().filter(|m| &m.name == name).map(|m| m.params).unwrap_or_default();
            cfg.model = Some(ModelConfig { name: name.clone(), params: keep });
        }
        if let Some(r) = &a.reference {
            cfg.reference = Some(r.clone());
        }
        if let Some(m) = cfg.model.as_mut() {
            m.params.extend(params.clone());
        }
        cfg.params.extend(params);
        if a.contour.is_some() || a.nodes.is_some() {
            let prev = cfg.contour.take();
            cfg.contour = Some(ContourConfig {
                shape: a.contour.clone().or_else(|| prev.as_ref().and_then(|c| c.shape.clone())),
                n: a.nodes.or_else(|| prev.and_then(|c| c.n)),
            });
        }
        if let Some(g) = &a.grid {
            cfg.grid = Some(parse_grid(g)?);
        }
        if let Some(p) = &a.at {
            cfg.at = Some(parse_point(p)?);
        }
        if !a.pair.is_empty() {
            cfg.pipeline = a.pair.clone();
        }
        if let Some(d) = &a.out {
            cfg.outputs.dir = Some(d.clone());
        }
        let mut tol = cfg.tolerances.take().unwrap_or_default();
        if let Some(j) = a.jump_tol {
            tol.jump_tol = j;
        }
        cfg.tolerances = Some(tol);
        Ok(cfg)
    }

    pub fn tol(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.outputs.dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn node_count(&self, default: usize) -> usize {
        self.contour.as_ref().and_then(|c| c.n).unwrap_or(default)
    }

    /// Fixed contour shape, if one was requested.
    pub fn shape(&self) -> Result<Option<Shape>> {
        match self.contour.as_ref().and_then(|c| c.shape.as_deref()) {
            Some(s) => Ok(Some(ContourSpec::parse_shape(s)?)),
            None => Ok(None),
        }
    }
}
