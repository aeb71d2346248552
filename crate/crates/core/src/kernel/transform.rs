//! Assembled kernels `H(nu, xi)` and `H_nu(nu, xi)`: coefficient part from
//! the closed forms, remainder from a table or a direct solve.

use super::coeffs::{CoefficientModel, KernelKind, Q};
use super::remainder::{integrate_remainder, GridSpec, RemainderTable, DEFAULT_RTOL};
use crate::basis::{fhat_jet, BasisIndex};
use crate::chart::{self, k_of_rho_unchecked};
use crate::error::{CavError, Result};

const F_M2: BasisIndex = BasisIndex::of(-2);
const F_M1: BasisIndex = BasisIndex::of(-1);
const F_0: BasisIndex = BasisIndex::of(0);
const F_1: BasisIndex = BasisIndex::of(1);
const F_2: BasisIndex = BasisIndex::of(2);

/// Coefficient part `(H - g, H_nu - g_nu)` at density `rho` and frequency `xi`.
pub fn coefficient_part(model: &CoefficientModel, kind: KernelKind, rho: f64, xi: f64) -> (f64, f64) {
    let k = k_of_rho_unchecked(rho);
    let kp = chart::kprime_of_rho(rho);
    let z = xi * k;
    let c = |q: Q| model.at_rho(q, rho);
    match kind {
        KernelKind::Regular => {
            let f1 = fhat_jet(F_1, z);
            let f2 = fhat_jet(F_2, z);
            let (a0, a0p, a1, a1p) = (c(Q::Alpha0), c(Q::Alpha0P), c(Q::Alpha1), c(Q::Alpha1P));
            let h = a0 * f1[0] + a1 * f2[0];
            let hn = a0p * f1[0] + a0 * xi * kp * f1[1] + a1p * f2[0] + a1 * xi * kp * f2[1];
            (h, hn)
        }
        KernelKind::Singular => {
            let fm2 = fhat_jet(F_M2, z);
            let fm1 = fhat_jet(F_M1, z);
            let f0 = fhat_jet(F_0, z);
            let (b0, b0p) = (c(Q::Beta0), c(Q::Beta0P));
            let (b1, b1p) = (c(Q::Beta1), c(Q::Beta1P));
            let (b2, b2p) = (c(Q::Beta2), c(Q::Beta2P));
            let k2 = k * k;
            let k4 = k2 * k2;
            let h = b0 * fm2[0] + b1 * k2 * fm1[0] + b2 * k4 * f0[0];
            let hn = b0p * fm2[0]
                + b0 * xi * kp * fm2[1]
                + (b1p * k2 + 2.0 * b1 * k * kp) * fm1[0]
                + b1 * k2 * xi * kp * fm1[1]
                + (b2p * k4 + 4.0 * b2 * k2 * k * kp) * f0[0]
                + b2 * k4 * xi * kp * f0[1];
            (h, hn)
        }
    }
}

/// A kernel in Fourier space, callable at any `(nu, xi)` with
/// `0 < nu <= nu_*`.
#[derive(Debug, Clone)]
pub struct KernelTransform {
    pub kind: KernelKind,
    pub model: CoefficientModel,
    pub remainder: RemainderTable,
}

impl KernelTransform {
    pub fn assemble(model: CoefficientModel, remainder: RemainderTable) -> Result<Self> {
        if (model.nu_star - remainder.nu_star).abs() > 1e-14 * model.nu_star {
            return Err(CavError::Grid(format!(
                "remainder table built for nu_* = {}, coefficients for {}",
                remainder.nu_star, model.nu_star
            )));
        }
        Ok(Self {
            kind: remainder.kind,
            model,
            remainder,
        })
    }

    /// Coefficients, remainder table and assembly in one step.
    pub fn build(nu_star: f64, kind: KernelKind, spec: &GridSpec) -> Result<Self> {
        let model = CoefficientModel::new(nu_star)?;
        let table = RemainderTable::build(&model, kind, spec)?;
        Self::assemble(model, table)
    }

    pub fn nu_star(&self) -> f64 {
        self.model.nu_star
    }

    /// `(H, H_nu)` with the tabulated remainder.
    pub fn eval(&self, nu: f64, xi: f64) -> Result<(f64, f64)> {
        if !(nu > 0.0 && nu <= self.model.nu_star * (1.0 + 1e-12)) {
            return Err(CavError::Domain {
                what: "nu",
                value: nu,
                range: "(0, nu_star]",
            });
        }
        let rho = chart::rho_of_nu(nu.min(self.model.nu_star))?;
        let (h, hn) = coefficient_part(&self.model, self.kind, rho, xi);
        let (g, gn) = self.remainder.interpolate(nu, xi)?;
        Ok((h + g, hn + gn))
    }

    pub fn hhat(&self, nu: f64, xi: f64) -> Result<f64> {
        Ok(self.eval(nu, xi)?.0)
    }

    pub fn hhat_nu(&self, nu: f64, xi: f64) -> Result<f64> {
        Ok(self.eval(nu, xi)?.1)
    }

    /// `(H, H_nu)` at the ascending `nu` samples with the remainder solved
    /// directly at frequency `xi` instead of interpolated.
    pub fn eval_exact(&self, nu: &[f64], xi: f64) -> Result<Vec<(f64, f64)>> {
        let traj = integrate_remainder(
            &self.model,
            self.kind,
            xi,
            self.remainder.nu_start,
            nu,
            self.remainder.rtol.min(DEFAULT_RTOL),
        )?;
        nu.iter()
            .zip(traj.value.iter().zip(&traj.dnu))
            .map(|(&n, (&g, &gn))| {
                let rho = chart::rho_of_nu(n)?;
                let (h, hn) = coefficient_part(&self.model, self.kind, rho, xi);
                Ok((h + g, hn + gn))
            })
            .collect()
    }
}
