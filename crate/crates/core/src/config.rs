//! Run configuration: `key = value` text, one entry per line, `#` comments.
//!
//! | key | default |
//! |---|---|
//! | `geometry.half_length` | 2.0 |
//! | `geometry.height` | 1.5 |
//! | `geometry.chord` | 1.0 |
//! | `geometry.bump_height` | 0.05 (0 removes the obstacle) |
//! | `geometry.h_mesh` | 0.08 |
//! | `flow.q_inf` | 0.9 |
//! | `solver.epsilons` | `0.2, 0.1, 0.05, 0.025, 0.0125` |
//! | `solver.omega` | 0.5 |
//! | `solver.tols` | `1e-8, 1e-7` (Picard update, residual) |
//! | `solver.picard_tol`, `solver.residual_tol` | as in `solver.tols` |
//! | `solver.max_iters` | 500 |
//! | `solver.tol_inv` | `auto` (`1e-3 k(q_inf)`) |
//! | `solver.scheme` | `riemann` (or `poisson`) |
//! | `kernel.nu_star` | `nu_cr / 2` |
//! | `kernel.xi_max` | 200 (largest frequency times `k(nu_star)`) |
//! | `kernel.nu_points`, `kernel.xi_linear`, `kernel.xi_log` | 241, 41, 40 |
//! | `kernel.kinds` | `none`; `regular, singular` stores tables with the run |
//! | `output.dir` | `run` |
//! | `run.deterministic` | `true` (single-threaded linear algebra) |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chart::NU_CR;
use crate::error::{CavError, Result};
use crate::kernel::{GridSpec, KernelKind};
use crate::mesh::DomainSpec;
use crate::solver::{Scheme, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub nu_star: f64,
    pub grid: GridSpec,
    pub kinds: Vec<KernelKind>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            nu_star: NU_CR / 2.0,
            grid: GridSpec::default(),
            kinds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub solver: SolverConfig,
    pub kernel: KernelConfig,
    pub output_dir: PathBuf,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::default(),
            solver: SolverConfig::default(),
            kernel: KernelConfig::default(),
            output_dir: PathBuf::from("run"),
            deterministic: true,
        }
    }
}

pub const KEYS: &[&str] = &[
    "geometry.half_length",
    "geometry.height",
    "geometry.chord",
    "geometry.bump_height",
    "geometry.h_mesh",
    "flow.q_inf",
    "solver.epsilons",
    "solver.omega",
    "solver.tols",
    "solver.picard_tol",
    "solver.residual_tol",
    "solver.max_iters",
    "solver.tol_inv",
    "solver.scheme",
    "kernel.nu_star",
    "kernel.xi_max",
    "kernel.nu_points",
    "kernel.xi_linear",
    "kernel.xi_log",
    "kernel.kinds",
    "output.dir",
    "run.deterministic",
];

fn bad(line: usize, msg: impl std::fmt::Display) -> CavError {
    CavError::Config(format!("line {line}: {msg}"))
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| bad(line, format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(line, format!("{key}: '{v}' is not a nonnegative integer")))
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn nums(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    list(v).map(|s| num(line, key, s)).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| bad(line, format!("expected 'key = value', got '{body}'")))?;
            let (key, v) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(bad(line, format!("unknown key '{key}'")));
            }
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key '{key}'")));
            }
            let s = &mut c.solver;
            let d = &mut c.domain;
            let g = &mut c.kernel.grid;
            match key {
                "geometry.half_length" => d.half_length = num(line, key, v)?,
                "geometry.height" => d.height = num(line, key, v)?,
                "geometry.chord" => d.chord = num(line, key, v)?,
                "geometry.bump_height" => d.bump_height = num(line, key, v)?,
                "geometry.h_mesh" => d.h_mesh = num(line, key, v)?,
                "flow.q_inf" => s.q_inf = num(line, key, v)?,
                "solver.epsilons" => s.epsilons = nums(line, key, v)?,
                "solver.omega" => s.omega = num(line, key, v)?,
                "solver.tols" => match nums(line, key, v)?.as_slice() {
                    [p, r] => (s.picard_tol, s.residual_tol) = (*p, *r),
                    _ => return Err(bad(line, "solver.tols takes two values: picard, residual")),
                },
                "solver.picard_tol" => s.picard_tol = num(line, key, v)?,
                "solver.residual_tol" => s.residual_tol = num(line, key, v)?,
                "solver.max_iters" => s.max_iters = count(line, key, v)?,
                "solver.tol_inv" => s.tol_inv = if v == "auto" { None } else { Some(num(line, key, v)?) },
                "solver.scheme" => s.scheme = Scheme::parse(v).ok_or_else(|| bad(line, format!("unknown scheme '{v}'")))?,
                "kernel.nu_star" => c.kernel.nu_star = num(line, key, v)?,
                "kernel.xi_max" => g.xi_max_factor = num(line, key, v)?,
                "kernel.nu_points" => g.nu_points = count(line, key, v)?,
                "kernel.xi_linear" => g.xi_linear = count(line, key, v)?,
                "kernel.xi_log" => g.xi_log = count(line, key, v)?,
                "kernel.kinds" => {
                    c.kernel.kinds = if v == "none" {
                        Vec::new()
                    } else {
                        list(v).map(|k| k.parse().map_err(|e| bad(line, e))).collect::<Result<_>>()?
                    }
                }
                "output.dir" => {
                    if v.is_empty() {
                        return Err(bad(line, "output.dir is empty"));
                    }
                    c.output_dir = PathBuf::from(v)
                }
                "run.deterministic" => {
                    c.deterministic = v.parse().map_err(|_| bad(line, format!("{key}: '{v}' is not true/false")))?
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }
        if seen.contains("solver.tols") && (seen.contains("solver.picard_tol") || seen.contains("solver.residual_tol")) {
            return Err(CavError::Config("solver.tols conflicts with solver.picard_tol/residual_tol".into()));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.solver.validate()?;
        if !(self.kernel.nu_star > 0.0 && self.kernel.nu_star < NU_CR) {
            return Err(CavError::Domain {
                what: "kernel.nu_star",
                value: self.kernel.nu_star,
                range: "(0, nu_cr)",
            });
        }
        let g = &self.kernel.grid;
        if g.nu_points < 2 || g.xi_linear < 2 || !(g.xi_max_factor > 0.0) {
            return Err(CavError::Config("kernel grids need at least two points and xi_max > 0".into()));
        }
        if !self.deterministic {
            return Err(CavError::Config("run.deterministic = false is not supported".into()));
        }
        Ok(())
    }

    /// Canonical text with every key; parses back to an equal config.
    /// Floats use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let (d, s, k) = (&self.domain, &self.solver, &self.kernel);
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let kinds = if k.kinds.is_empty() {
            "none".to_string()
        } else {
            k.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
        };
        let mut out = String::new();
        let mut put = |key: &str, v: String| {
            let _ = writeln!(out, "{key} = {v}");
        };
        put("geometry.half_length", format!("{:?}", d.half_length));
        put("geometry.height", format!("{:?}", d.height));
        put("geometry.chord", format!("{:?}", d.chord));
        put("geometry.bump_height", format!("{:?}", d.bump_height));
        put("geometry.h_mesh", format!("{:?}", d.h_mesh));
        put("flow.q_inf", format!("{:?}", s.q_inf));
        put("solver.epsilons", join(&s.epsilons));
        put("solver.omega", format!("{:?}", s.omega));
        put("solver.tols", join(&[s.picard_tol, s.residual_tol]));
        put("solver.max_iters", s.max_iters.to_string());
        put("solver.tol_inv", s.tol_inv.map_or("auto".into(), |t| format!("{t:?}")));
        put("solver.scheme", s.scheme.name().to_string());
        put("kernel.nu_star", format!("{:?}", k.nu_star));
        put("kernel.xi_max", format!("{:?}", k.grid.xi_max_factor));
        put("kernel.nu_points", k.grid.nu_points.to_string());
        put("kernel.xi_linear", k.grid.xi_linear.to_string());
        put("kernel.xi_log", k.grid.xi_log.to_string());
        put("kernel.kinds", kinds);
        put("output.dir", self.output_dir.display().to_string());
        put("run.deterministic", self.deterministic.to_string());
        out
    }
}
