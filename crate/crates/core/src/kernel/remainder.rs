//! Remainder terms: the per-frequency forced oscillator
//! `y'' + k'(nu)^2 xi^2 y = R(nu, xi)` started from zero data just above
//! the vacuum.
//!
//! The equation is integrated in `rho` with state `(y, y_nu / k')`, which
//! keeps every coefficient bounded on `(0, rho_*]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coeffs::{CoefficientModel, KernelKind};
use super::ode::{dopri5, OdeStats, StepControl};
use crate::basis::{fhat, BasisIndex};
use crate::chart::{self, k_of_rho_unchecked};
use crate::error::{CavError, Result};

pub const NU_START_FACTOR: f64 = 1e-8;
pub const DEFAULT_RTOL: f64 = 1e-10;

impl KernelKind {
    /// Basis order multiplying the forcing amplitude.
    pub fn forcing_order(self) -> BasisIndex {
        match self {
            KernelKind::Regular => BasisIndex::of(2),
            KernelKind::Singular => BasisIndex::of(0),
        }
    }

    /// Exponents `(p, q)` of the envelope `nu^p (1 + |xi k|)^{-q}`.
    pub fn envelope_exponents(self) -> (f64, i32) {
        match self {
            KernelKind::Regular => (7.0 / 3.0, 4),
            KernelKind::Singular => (2.0, 2),
        }
    }
}

/// `R(nu(rho), xi)`.
pub fn forcing_hat(model: &CoefficientModel, kind: KernelKind, rho: f64, xi: f64) -> f64 {
    model.forcing(kind, rho) * fhat(kind.forcing_order(), xi * k_of_rho_unchecked(rho))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xi: f64,
    pub nu: Vec<f64>,
    pub value: Vec<f64>,
    pub dnu: Vec<f64>,
    pub stats: OdeStats,
}

/// Solves the remainder equation at one frequency and samples it at `nu_out`
/// (ascending). Points at or below `nu_start` get the zero data.
pub fn integrate_remainder(
    model: &CoefficientModel,
    kind: KernelKind,
    xi: f64,
    nu_start: f64,
    nu_out: &[f64],
    rtol: f64,
) -> Result<Trajectory> {
    if !(nu_start > 0.0 && nu_start < model.nu_star) {
        return Err(CavError::Domain {
            what: "nu_start",
            value: nu_start,
            range: "(0, nu_star)",
        });
    }
    if let Some(&last) = nu_out.last() {
        if last > model.nu_star * (1.0 + 1e-12) {
            return Err(CavError::Domain {
                what: "nu",
                value: last,
                range: "(0, nu_star]",
            });
        }
    }
    let xi_abs = xi.abs();
    let rho0 = chart::rho_of_nu(nu_start)?;
    let split = nu_out.partition_point(|&n| n <= nu_start);
    let rho_out: Vec<f64> = nu_out[split..]
        .iter()
        .map(|&n| chart::rho_of_nu(n.min(model.nu_star)))
        .collect::<Result<_>>()?;

    let (p, q) = kind.envelope_exponents();
    let amp = forcing_scale(model, kind);
    let rhs = |rho: f64, y: &[f64; 2]| {
        let r2 = rho * rho;
        let s2 = 1.0 - 2.0 * r2;
        let big_k = s2.sqrt() / (1.0 - r2);
        let r = forcing_hat(model, kind, rho, xi_abs);
        [
            big_k * y[1],
            big_k * (r * r2 * r2 / s2 - xi_abs * xi_abs * y[0])
                + 2.0 * (1.0 - r2) / (s2 * rho) * y[1],
        ]
    };
    let atol = |rho: f64| {
        let nu = chart::nu_of_rho_unchecked(rho);
        let env = amp * nu.powf(p) / (1.0 + xi_abs * k_of_rho_unchecked(rho)).powi(q);
        let floor = 1e-3 * rtol * env;
        [floor, floor / (nu * chart::kprime_of_rho(rho))]
    };
    let hmax = |rho: f64| {
        let big_k = (1.0 - 2.0 * rho * rho).sqrt() / (1.0 - rho * rho);
        (0.25 * rho).min(0.5 / (xi_abs * big_k).max(1e-300))
    };
    let ctl = StepControl {
        rtol,
        ..StepControl::default()
    };
    let (states, stats) = dopri5(rhs, rho0, [0.0, 0.0], &rho_out, atol, hmax, ctl).map_err(|e| {
        match e {
            CavError::Integrator { nu, msg, .. } => CavError::Integrator {
                nu: chart::nu_of_rho_unchecked(nu),
                xi,
                msg,
            },
            other => other,
        }
    })?;
    let mut value = vec![0.0; split];
    let mut dnu = vec![0.0; split];
    for (st, &rho) in states.iter().zip(&rho_out) {
        value.push(st[0]);
        dnu.push(st[1] * chart::kprime_of_rho(rho));
    }
    Ok(Trajectory {
        xi,
        nu: nu_out.to_vec(),
        value,
        dnu,
        stats,
    })
}

/// Size of the forcing relative to its vacuum power, used to scale absolute
/// tolerances.
fn forcing_scale(model: &CoefficientModel, kind: KernelKind) -> f64 {
    let (p, _) = kind.envelope_exponents();
    (1..=16)
        .map(|i| {
            let rho = model.rho_star * i as f64 / 16.0;
            let nu = chart::nu_of_rho_unchecked(rho);
            model.forcing(kind, rho).abs() / nu.powf(p - 2.0)
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Grid layout shared by remainder tables and transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu_points: usize,
    pub xi_linear: usize,
    pub xi_log: usize,
    /// Largest frequency in units of `1 / k(nu_*)`.
    pub xi_max_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nu_points: 241,
            xi_linear: 41,
            xi_log: 40,
            xi_max_factor: 200.0,
        }
    }
}

impl GridSpec {
    /// Roughly halves every spacing.
    pub fn refined(&self) -> Self {
        Self {
            nu_points: 2 * self.nu_points - 1,
            xi_linear: 2 * self.xi_linear - 1,
            xi_log: 2 * self.xi_log,
            xi_max_factor: self.xi_max_factor,
        }
    }

    /// Log-spaced `nu` samples from `nu_start` to `nu_star`.
    pub fn nu_grid(&self, nu_start: f64, nu_star: f64) -> Vec<f64> {
        let n = self.nu_points.max(2);
        let (a, b) = (nu_start.ln(), nu_star.ln());
        let mut g: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        g[0] = nu_start;
        g[n - 1] = nu_star;
        g
    }

    /// Nonnegative half of the symmetric frequency grid: linear up to
    /// `4 / k_star`, then log-spaced to `xi_max_factor / k_star`.
    pub fn xi_grid(&self, k_star: f64) -> Vec<f64> {
        let xl = 4.0 / k_star;
        let xm = self.xi_max_factor / k_star;
        let n = self.xi_linear.max(2);
        let mut g: Vec<f64> = (0..n).map(|i| xl * i as f64 / (n - 1) as f64).collect();
        if xm > xl {
            let (a, b) = (xl.ln(), xm.ln());
            g.extend((1..=self.xi_log).map(|i| (a + (b - a) * i as f64 / self.xi_log as f64).exp()));
        }
        g
    }
}

/// Sampled remainder `g` (regular) or `h` (singular) and its `nu` derivative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderTable {
    pub kind: KernelKind,
    pub nu_star: f64,
    pub nu_start: f64,
    pub rtol: f64,
    pub nu_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    /// Row-major by frequency: `value[i_xi * n_nu + i_nu]`.
    pub value: Vec<f64>,
    pub dnu: Vec<f64>,
}

impl RemainderTable {
    pub fn build(model: &CoefficientModel, kind: KernelKind, spec: &GridSpec) -> Result<Self> {
        let nu_start = NU_START_FACTOR * model.nu_star;
        let k_star = k_of_rho_unchecked(model.rho_star);
        let nu_grid = spec.nu_grid(nu_start, model.nu_star);
        let xi_grid = spec.xi_grid(k_star);
        Self::build_on(model, kind, nu_start, nu_grid, xi_grid, DEFAULT_RTOL)
    }

    pub fn build_on(
        model: &CoefficientModel,
        kind: KernelKind,
        nu_start: f64,
        nu_grid: Vec<f64>,
        xi_grid: Vec<f64>,
        rtol: f64,
    ) -> Result<Self> {
        if nu_grid.windows(2).any(|w| w[1] <= w[0]) || xi_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CavError::Grid("grids must be strictly increasing".into()));
        }
        if xi_grid.first().is_some_and(|&x| x < 0.0) {
            return Err(CavError::Grid("frequency grid must be nonnegative".into()));
        }
        let cols: Vec<Trajectory> = xi_grid
            .par_iter()
            .map(|&xi| integrate_remainder(model, kind, xi, nu_start, &nu_grid, rtol))
            .collect::<Result<_>>()?;
        let mut value = Vec::with_capacity(cols.len() * nu_grid.len());
        let mut dnu = Vec::with_capacity(value.capacity());
        for c in cols {
            value.extend(c.value);
            dnu.extend(c.dnu);
        }
        Ok(Self {
            kind,
            nu_star: model.nu_star,
            nu_start,
            rtol,
            nu_grid,
            xi_grid,
            value,
            dnu,
        })
    }

    pub fn n_nu(&self) -> usize {
        self.nu_grid.len()
    }

    pub fn at(&self, i_xi: usize, i_nu: usize) -> (f64, f64) {
        let j = i_xi * self.n_nu() + i_nu;
        (self.value[j], self.dnu[j])
    }

    /// Cubic Hermite interpolation in `ln nu` within one column.
    fn column(&self, i_xi: usize, nu: f64) -> (f64, f64) {
        let g = &self.nu_grid;
        if nu <= g[0] {
            // below the first node the remainder follows its vacuum power law
            let (p, _) = self.kind.envelope_exponents();
            let (y0, d0) = self.at(i_xi, 0);
            let r = nu / g[0];
            return (y0 * r.powf(p), d0 * r.powf(p - 1.0));
        }
        let i = g.partition_point(|&x| x <= nu).clamp(1, g.len() - 1) - 1;
        let (t0, t1) = (g[i].ln(), g[i + 1].ln());
        let h = t1 - t0;
        let u = ((nu.ln() - t0) / h).clamp(0.0, 1.0);
        let (y0, d0) = self.at(i_xi, i);
        let (y1, d1) = self.at(i_xi, i + 1);
        let (m0, m1) = (d0 * g[i] * h, d1 * g[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let val = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        let dval_du = (6.0 * u2 - 6.0 * u) * y0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * m1;
        (val, dval_du / (h * nu))
    }

    /// Interpolated `(value, d/dnu)`; even in `xi`. Frequencies beyond the
    /// grid follow the decay envelope from the last column.
    pub fn interpolate(&self, nu: f64, xi: f64) -> Result<(f64, f64)> {
        if !(nu >= 0.0 && nu <= self.nu_star * (1.0 + 1e-12)) {
            return Err(CavError::Domain {
                what: "nu",
                value: nu,
                range: "[0, nu_star]",
            });
        }
        let x = xi.abs();
        let xs = &self.xi_grid;
        let last = xs.len() - 1;
        if x >= xs[last] {
            let (v, d) = self.column(last, nu);
            if x == xs[last] {
                return Ok((v, d));
            }
            let k = chart::k_of_nu(nu.min(self.nu_star))?;
            let (_, q) = self.kind.envelope_exponents();
            let f = ((1.0 + xs[last] * k) / (1.0 + x * k)).powi(q);
            return Ok((v * f, d * f));
        }
        let j = xs.partition_point(|&a| a <= x).clamp(1, last) - 1;
        let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
        let (a, da) = self.column(j, nu);
        let (b, db) = self.column(j + 1, nu);
        Ok(((1.0 - w) * a + w * b, (1.0 - w) * da + w * db))
    }

    /// Grid supremum of `|g| (1 + |xi k|)^q / nu^p`.
    pub fn envelope_constant(&self) -> Result<f64> {
        let (p, q) = self.kind.envelope_exponents();
        let mut sup = 0.0f64;
        for (i_nu, &nu) in self.nu_grid.iter().enumerate().skip(1) {
            let k = chart::k_of_nu(nu)?;
            for (i_xi, &xi) in self.xi_grid.iter().enumerate() {
                let (v, _) = self.at(i_xi, i_nu);
                sup = sup.max(v.abs() * (1.0 + xi * k).powi(q) / nu.powf(p));
            }
        }
        Ok(sup)
    }
}
