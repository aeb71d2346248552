//! Physical-space samples of kernels convolved with a Gaussian test
//! function, by quadrature of the inverse cosine transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coeffs::KernelKind;
use super::remainder::integrate_remainder;
use super::transform::{coefficient_part, KernelTransform};
use crate::chart;
use crate::error::{CavError, Result};
use crate::quad::gl16;

/// Orders of `s`-derivatives stored for `H * phi` and `H_nu * phi`.
pub const H_DERIVS: usize = 5;
pub const HNU_DERIVS: usize = 3;
pub const TAIL_TOL: f64 = 1e-10;
pub const HUYGENS_TOL: f64 = 1e-6;

/// Gaussian `phi(s) = exp(-s^2 / (2 sigma^2)) / (sigma sqrt(2 pi))` with
/// `sigma = width / 2`, so `phi_hat = exp(-sigma^2 xi^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub width: f64,
}

impl Default for PhiSpec {
    fn default() -> Self {
        Self { width: 0.2 }
    }
}

impl PhiSpec {
    pub fn sigma(&self) -> f64 {
        0.5 * self.width
    }

    pub fn value(&self, s: f64) -> f64 {
        let sg = self.sigma();
        (-0.5 * (s / sg).powi(2)).exp() / (sg * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn hat(&self, xi: f64) -> f64 {
        (-0.5 * (self.sigma() * xi).powi(2)).exp()
    }

    /// Frequency cutoff where `phi_hat` is about `3e-18`.
    pub fn cutoff(&self) -> f64 {
        9.0 / self.sigma()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedKernel {
    pub kind: KernelKind,
    pub phi: PhiSpec,
    pub nu_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `h[j][i_nu * n_s + i_s] = d^j/ds^j (H * phi)`.
    pub h: Vec<Vec<f64>>,
    /// `h_nu[j][..] = d^j/ds^j (H_nu * phi)`.
    pub h_nu: Vec<Vec<f64>>,
    /// Largest relative tail estimate of the truncated frequency integral.
    pub tail_estimate: f64,
}

/// Symmetric uniform `s` grid on `[-s_max, s_max]`.
pub fn s_grid(s_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64)
        .collect()
}

/// Default physical window: twice the cone at `nu_*` plus the test
/// function's effective support.
pub fn default_s_max(kt: &KernelTransform, phi: &PhiSpec) -> f64 {
    2.0 * (chart::k_of_rho(kt.model.rho_star).unwrap_or(chart::K_CR) + 3.0 * phi.width)
}

impl SmoothedKernel {
    pub fn build(kt: &KernelTransform, phi: PhiSpec, nu_grid: &[f64], s_grid: &[f64]) -> Result<Self> {
        if !(phi.width > 0.0) {
            return Err(CavError::Domain {
                what: "width",
                value: phi.width,
                range: "(0, inf)",
            });
        }
        if nu_grid.windows(2).any(|w| w[1] <= w[0]) || nu_grid.is_empty() {
            return Err(CavError::Grid("nu grid must be nonempty and increasing".into()));
        }
        let rule = gl16();
        let cut = phi.cutoff();
        let panels = (cut / 2.0).ceil() as usize;
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|p| {
                let a = cut * p as f64 / panels as f64;
                let b = cut * (p + 1) as f64 / panels as f64;
                rule.mapped(a, b).collect::<Vec<_>>()
            })
            .collect();
        let rhos: Vec<f64> = nu_grid.iter().map(|&n| chart::rho_of_nu(n)).collect::<Result<_>>()?;

        // weights * H phi_hat / pi per (node, nu)
        let cols: Vec<Vec<(f64, f64)>> = nodes
            .par_iter()
            .map(|&(xi, w)| {
                let tr = integrate_remainder(
                    &kt.model,
                    kt.kind,
                    xi,
                    kt.remainder.nu_start,
                    nu_grid,
                    kt.remainder.rtol,
                )?;
                let f = w * phi.hat(xi) / std::f64::consts::PI;
                Ok(rhos
                    .iter()
                    .enumerate()
                    .map(|(i, &rho)| {
                        let (h, hn) = coefficient_part(&kt.model, kt.kind, rho, xi);
                        (f * (h + tr.value[i]), f * (hn + tr.dnu[i]))
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        let tail_estimate = {
            let sg2 = phi.sigma().powi(2);
            let mut worst = 0.0f64;
            for (i, &rho) in rhos.iter().enumerate() {
                let (h, hn) = coefficient_part(&kt.model, kt.kind, rho, cut);
                let (g, gn) = kt.remainder.interpolate(nu_grid[i], cut)?;
                let edge = (h + g).abs().max((hn + gn).abs()) * cut.powi(4) * phi.hat(cut) / (sg2 * cut);
                let scale: f64 = cols
                    .iter()
                    .zip(&nodes)
                    .map(|(c, (xi, _))| c[i].0.abs().max(c[i].1.abs()) * xi.powi(4))
                    .sum();
                worst = worst.max(edge / scale.max(f64::MIN_POSITIVE));
            }
            worst
        };
        if tail_estimate > TAIL_TOL {
            return Err(CavError::Quadrature(format!(
                "frequency tail estimate {tail_estimate:e} exceeds {TAIL_TOL:e}"
            )));
        }

        let n_nu = nu_grid.len();
        let n_s = s_grid.len();
        let rows: Vec<[Vec<f64>; 2]> = s_grid
            .par_iter()
            .map(|&s| {
                let mut hv = vec![0.0; H_DERIVS * n_nu];
                let mut hnv = vec![0.0; HNU_DERIVS * n_nu];
                for ((xi, _), col) in nodes.iter().zip(&cols) {
                    let (sn, cs) = (xi * s).sin_cos();
                    // d^j/ds^j cos(xi s) = xi^j * basis[j % 4]
                    let basis = [cs, -sn, -cs, sn];
                    let mut pw = [1.0; H_DERIVS];
                    for j in 1..H_DERIVS {
                        pw[j] = pw[j - 1] * xi;
                    }
                    for (i, &(a, b)) in col.iter().enumerate() {
                        for j in 0..H_DERIVS {
                            hv[j * n_nu + i] += a * pw[j] * basis[j % 4];
                        }
                        for j in 0..HNU_DERIVS {
                            hnv[j * n_nu + i] += b * pw[j] * basis[j % 4];
                        }
                    }
                }
                [hv, hnv]
            })
            .collect();
        let mut h = vec![vec![0.0; n_nu * n_s]; H_DERIVS];
        let mut h_nu = vec![vec![0.0; n_nu * n_s]; HNU_DERIVS];
        for (is, [hv, hnv]) in rows.iter().enumerate() {
            for i in 0..n_nu {
                for j in 0..H_DERIVS {
                    h[j][i * n_s + is] = hv[j * n_nu + i];
                }
                for j in 0..HNU_DERIVS {
                    h_nu[j][i * n_s + is] = hnv[j * n_nu + i];
                }
            }
        }
        Ok(Self {
            kind: kt.kind,
            phi,
            nu_grid: nu_grid.to_vec(),
            s_grid: s_grid.to_vec(),
            h,
            h_nu,
            tail_estimate,
        })
    }

    pub fn n_s(&self) -> usize {
        self.s_grid.len()
    }

    /// Samples of `d^j/ds^j (H * phi)` at `nu_grid[i_nu]`.
    pub fn h_row(&self, j: usize, i_nu: usize) -> &[f64] {
        let n = self.n_s();
        &self.h[j][i_nu * n..(i_nu + 1) * n]
    }

    pub fn h_nu_row(&self, j: usize, i_nu: usize) -> &[f64] {
        let n = self.n_s();
        &self.h_nu[j][i_nu * n..(i_nu + 1) * n]
    }

    /// Fraction of `int |H * phi| ds` outside `|s| <= k(nu) + 3 w`.
    pub fn huygens_leakage(&self, i_nu: usize) -> Result<f64> {
        let k = chart::k_of_nu(self.nu_grid[i_nu])?;
        let edge = k + 3.0 * self.phi.width;
        let row = self.h_row(0, i_nu);
        let (mut total, mut outside) = (0.0, 0.0);
        for i in 0..row.len() - 1 {
            let ds = self.s_grid[i + 1] - self.s_grid[i];
            let m = 0.5 * ds * (row[i].abs() + row[i + 1].abs());
            total += m;
            let mid = 0.5 * (self.s_grid[i] + self.s_grid[i + 1]).abs();
            if mid > edge {
                outside += m;
            }
        }
        Ok(outside / total.max(f64::MIN_POSITIVE))
    }

    pub fn max_huygens_leakage(&self) -> Result<f64> {
        (0..self.nu_grid.len())
            .map(|i| self.huygens_leakage(i))
            .try_fold(0.0f64, |m, x| Ok(m.max(x?)))
    }

    /// `sup_s |(rho H_nu + H_ss) * phi| / rho` at each `nu`, plus the same
    /// with `j` extra derivatives up to two.
    pub fn compactness_ratios(&self) -> Result<Vec<[f64; HNU_DERIVS]>> {
        self.nu_grid
            .iter()
            .enumerate()
            .map(|(i, &nu)| {
                let rho = chart::rho_of_nu(nu)?;
                let mut out = [0.0; HNU_DERIVS];
                for (j, o) in out.iter_mut().enumerate() {
                    let a = self.h_nu_row(j, i);
                    let b = self.h_row(j + 2, i);
                    *o = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (rho * x + y).abs())
                        .fold(0.0, f64::max)
                        / rho;
                }
                Ok(out)
            })
            .collect()
    }

    /// `sup_s |H * phi - target|` at `nu_grid[i_nu]`, where the target is
    /// `0` (regular) or `phi` (singular).
    pub fn initial_defect(&self, i_nu: usize) -> f64 {
        let row = self.h_row(0, i_nu);
        row.iter()
            .zip(&self.s_grid)
            .map(|(v, &s)| match self.kind {
                KernelKind::Regular => v.abs(),
                KernelKind::Singular => (v - self.phi.value(s)).abs(),
            })
            .fold(0.0, f64::max)
    }
}
