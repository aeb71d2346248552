//! Quantitative checks of an assembled kernel: vacuum limits, cancellation
//! ratios, remainder envelopes, closure of the generator equation and
//! Hölder-type integrals.

use serde::{Deserialize, Serialize};

use super::coeffs::KernelKind;
use super::remainder::{RemainderTable, DEFAULT_RTOL};
use super::transform::{coefficient_part, KernelTransform};
use crate::asymptotics::loglog_slope;
use crate::chart;
use crate::error::Result;

pub const LIMIT_NU: f64 = 1e-7;
pub const LIMIT_XI: [f64; 3] = [0.5, 1.0, 5.0];
pub const LIMIT_TOL: f64 = 1e-4;
pub const DRIFT_TOL: f64 = 0.1;
pub const CANCEL_NU_MIN: f64 = 1e-6;
pub const CANCEL_XI_MAX: f64 = 100.0;
/// Allowed shortfall of the fitted defect exponent below `1/3`.
pub const SLOPE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitCheck {
    pub xi: f64,
    pub nu: f64,
    /// `H - H(0)` (regular: `H`; singular: `H - 1`).
    pub value_defect: f64,
    /// Regular: `H_nu - 1`; singular: `rho H_nu - xi^2`.
    pub derivative_defect: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub coarse: f64,
    pub fine: f64,
    pub drift: f64,
    pub worst_nu: Option<f64>,
    pub worst_xi: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosureCheck {
    pub xi: f64,
    pub nu: f64,
    /// `|H_nunu + k'^2 xi^2 H|` over `|H_nunu| + k'^2 xi^2 |H| + |H_nu| / nu`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderCheck {
    pub alpha: f64,
    pub constant: StabilityCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: KernelKind,
    pub nu_star: f64,
    pub c0: f64,
    pub d0: f64,
    pub c0_closed_form: f64,
    pub d0_closed_form: f64,
    pub limits: Vec<LimitCheck>,
    pub limits_pass: bool,
    pub cancellation: StabilityCheck,
    /// Log-log slope of the cancellation defect at `xi = 1` for small `nu`.
    pub defect_slope: Option<f64>,
    pub defect_slope_min: Option<f64>,
    pub envelope: StabilityCheck,
    pub closure: Vec<ClosureCheck>,
    pub closure_tol: f64,
    pub closure_pass: bool,
    pub holder: Vec<HolderCheck>,
    pub pass: bool,
}

/// Inserts the geometric midpoint of each `nu` interval and the arithmetic
/// (linear part) or geometric (log part) midpoint of each `xi` interval.
pub fn refine_grids(table: &RemainderTable) -> (Vec<f64>, Vec<f64>) {
    let mid_geo = |a: f64, b: f64| (a * b).sqrt();
    let mut nu = Vec::with_capacity(2 * table.nu_grid.len());
    for w in table.nu_grid.windows(2) {
        nu.push(w[0]);
        nu.push(mid_geo(w[0], w[1]));
    }
    nu.push(*table.nu_grid.last().expect("nonempty grid"));
    let mut xi = Vec::with_capacity(2 * table.xi_grid.len());
    let h0 = table.xi_grid.get(1).map_or(0.0, |x| x - table.xi_grid[0]);
    for w in table.xi_grid.windows(2) {
        xi.push(w[0]);
        let linear = (w[1] - w[0] - h0).abs() <= 1e-9 * h0 || w[0] == 0.0;
        xi.push(if linear { 0.5 * (w[0] + w[1]) } else { mid_geo(w[0], w[1]) });
    }
    xi.push(*table.xi_grid.last().expect("nonempty grid"));
    (nu, xi)
}

pub fn refined(kt: &KernelTransform) -> Result<KernelTransform> {
    let (nu, xi) = refine_grids(&kt.remainder);
    let table = RemainderTable::build_on(
        &kt.model,
        kt.kind,
        kt.remainder.nu_start,
        nu,
        xi,
        kt.remainder.rtol,
    )?;
    KernelTransform::assemble(kt.model.clone(), table)
}

/// Vacuum-limit defects at `LIMIT_NU`, solved directly at each frequency.
pub fn limit_checks(kt: &KernelTransform) -> Result<Vec<LimitCheck>> {
    let rho = chart::rho_of_nu(LIMIT_NU)?;
    LIMIT_XI
        .iter()
        .map(|&xi| {
            let (h, hn) = kt.eval_exact(&[LIMIT_NU], xi)?[0];
            let (vd, dd) = match kt.kind {
                KernelKind::Regular => (h, hn - 1.0),
                KernelKind::Singular => (h - 1.0, rho * hn - xi * xi),
            };
            Ok(LimitCheck {
                xi,
                nu: LIMIT_NU,
                value_defect: vd,
                derivative_defect: dd,
                pass: vd.abs() <= LIMIT_TOL && dd.abs() <= LIMIT_TOL,
            })
        })
        .collect()
}

/// `(nu^a, weight)` normalization of the cancellation defect.
fn cancel_weight(kind: KernelKind, nu: f64, xi: f64) -> f64 {
    match kind {
        KernelKind::Regular => (1.0 + xi * xi) * nu.cbrt(),
        KernelKind::Singular => (1.0 + xi.powi(4)) * nu.powf(2.0 / 3.0),
    }
}

/// Cancellation defect `|rho H_nu - xi^2 H|` at a grid node.
fn node_defect(kt: &KernelTransform, i_xi: usize, i_nu: usize) -> Result<f64> {
    let nu = kt.remainder.nu_grid[i_nu];
    let xi = kt.remainder.xi_grid[i_xi];
    let rho = chart::rho_of_nu(nu)?;
    let (h, hn) = coefficient_part(&kt.model, kt.kind, rho, xi);
    let (g, gn) = kt.remainder.at(i_xi, i_nu);
    Ok((rho * (hn + gn) - xi * xi * (h + g)).abs())
}

/// Grid supremum of the normalized cancellation defect with its location.
pub fn cancellation_sup(kt: &KernelTransform) -> Result<(f64, f64, f64)> {
    let mut best = (0.0, f64::NAN, f64::NAN);
    for (i_nu, &nu) in kt.remainder.nu_grid.iter().enumerate() {
        if nu < CANCEL_NU_MIN {
            continue;
        }
        for (i_xi, &xi) in kt.remainder.xi_grid.iter().enumerate() {
            if xi > CANCEL_XI_MAX {
                break;
            }
            let r = node_defect(kt, i_xi, i_nu)? / cancel_weight(kt.kind, nu, xi);
            if r > best.0 {
                best = (r, nu, xi);
            }
        }
    }
    Ok(best)
}

fn stability(coarse: (f64, f64, f64), fine: (f64, f64, f64)) -> StabilityCheck {
    let drift = (fine.0 - coarse.0).abs() / fine.0.abs().max(f64::MIN_POSITIVE);
    StabilityCheck {
        coarse: coarse.0,
        fine: fine.0,
        drift,
        worst_nu: Some(fine.1).filter(|x| x.is_finite()),
        worst_xi: Some(fine.2).filter(|x| x.is_finite()),
        pass: coarse.0.is_finite() && fine.0.is_finite() && drift < DRIFT_TOL,
    }
}

fn envelope_sup(t: &RemainderTable) -> Result<(f64, f64, f64)> {
    let (p, q) = t.kind.envelope_exponents();
    let mut best = (0.0, f64::NAN, f64::NAN);
    for (i_nu, &nu) in t.nu_grid.iter().enumerate().skip(1) {
        let k = chart::k_of_nu(nu)?;
        for (i_xi, &xi) in t.xi_grid.iter().enumerate() {
            let r = t.at(i_xi, i_nu).0.abs() * (1.0 + xi * k).powi(q) / nu.powf(p);
            if r > best.0 {
                best = (r, nu, xi);
            }
        }
    }
    Ok(best)
}

/// Slope of `log |rho H_nu - H|` against `log nu` at `xi = 1` over
/// `nu in [1e-7, 1e-3]`.
pub fn defect_slope(kt: &KernelTransform) -> Result<f64> {
    let nus: Vec<f64> = (0..=16).map(|i| 1e-7 * 10f64.powf(i as f64 / 4.0)).collect();
    let vals = kt.eval_exact(&nus, 1.0)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = nus
        .iter()
        .zip(&vals)
        .map(|(&nu, &(h, hn))| {
            let rho = chart::rho_of_nu(nu).expect("grid inside chart");
            (nu, (rho * hn - h).abs())
        })
        .unzip();
    Ok(loglog_slope(&xs, &ys))
}

/// Residual of `H_nunu + k'^2 xi^2 H = 0` with `H_nunu` from a five-point
/// stencil on directly solved `H_nu`.
pub fn closure_checks(kt: &KernelTransform, xis: &[f64], nus: &[f64]) -> Result<Vec<ClosureCheck>> {
    let mut out = Vec::new();
    for &xi in xis {
        for &nu in nus {
            let h = 2e-3 * nu;
            let pts = [nu - 2.0 * h, nu - h, nu, nu + h, nu + 2.0 * h];
            let v = kt.eval_exact(&pts, xi)?;
            let hnn = (v[0].1 - 8.0 * v[1].1 + 8.0 * v[3].1 - v[4].1) / (12.0 * h);
            let kp = chart::kprime_of_nu(nu)?;
            let w = kp * kp * xi * xi;
            let res = (hnn + w * v[2].0).abs();
            let scale = hnn.abs() + w * v[2].0.abs() + v[2].1.abs() / nu;
            out.push(ClosureCheck {
                xi,
                nu,
                relative_residual: res / scale.max(f64::MIN_POSITIVE),
            });
        }
    }
    Ok(out)
}

/// Supremum over `nu` of `int |xi|^alpha |g| dxi / nu^{2 - alpha/3}`, with
/// trapezoidal quadrature over the symmetric grid.
fn holder_sup(t: &RemainderTable, alpha: f64) -> (f64, f64, f64) {
    let mut best = (0.0, f64::NAN, f64::NAN);
    for (i_nu, &nu) in t.nu_grid.iter().enumerate().skip(1) {
        let mut acc = 0.0;
        for j in 0..t.xi_grid.len() - 1 {
            let (x0, x1) = (t.xi_grid[j], t.xi_grid[j + 1]);
            let f0 = x0.powf(alpha) * t.at(j, i_nu).0.abs();
            let f1 = x1.powf(alpha) * t.at(j + 1, i_nu).0.abs();
            acc += (x1 - x0) * (f0 + f1);
        }
        let r = acc / nu.powf(2.0 - alpha / 3.0);
        if r > best.0 {
            best = (r, nu, f64::NAN);
        }
    }
    best
}

/// Full report; builds one refined table internally.
pub fn verify(kt: &KernelTransform) -> Result<VerifyReport> {
    let fine = refined(kt)?;
    let limits = limit_checks(kt)?;
    let cancellation = stability(cancellation_sup(kt)?, cancellation_sup(&fine)?);
    let envelope = stability(envelope_sup(&kt.remainder)?, envelope_sup(&fine.remainder)?);
    let (defect_slope_v, slope_min) = match kt.kind {
        KernelKind::Regular => (Some(defect_slope(kt)?), Some(1.0 / 3.0 - SLOPE_SLACK)),
        KernelKind::Singular => (None, None),
    };
    let nus: Vec<f64> = [1e-3, 1e-2, 0.5].iter().map(|f| f * kt.nu_star()).collect();
    let closure = closure_checks(kt, &[0.5, 2.0, 10.0], &nus)?;
    let closure_tol = 10.0 * DEFAULT_RTOL.max(kt.remainder.rtol);
    let closure_pass = closure.iter().all(|c| c.relative_residual <= closure_tol);
    let holder = match kt.kind {
        KernelKind::Regular => [0.0, 0.5]
            .iter()
            .map(|&alpha| HolderCheck {
                alpha,
                constant: stability(holder_sup(&kt.remainder, alpha), holder_sup(&fine.remainder, alpha)),
            })
            .collect(),
        KernelKind::Singular => Vec::new(),
    };
    let limits_pass = limits.iter().all(|l| l.pass);
    let slope_ok = match (defect_slope_v, slope_min) {
        (Some(s), Some(m)) => s >= m,
        _ => true,
    };
    let n = kt.model.normalization();
    let pass = limits_pass
        && cancellation.pass
        && envelope.pass
        && slope_ok
        && closure_pass
        && holder.iter().all(|h| h.constant.pass);
    Ok(VerifyReport {
        kind: kt.kind,
        nu_star: kt.nu_star(),
        c0: n.c0,
        d0: n.d0,
        c0_closed_form: n.c0_closed_form,
        d0_closed_form: n.d0_closed_form,
        limits,
        limits_pass,
        cancellation,
        defect_slope: defect_slope_v,
        defect_slope_min: slope_min,
        envelope,
        closure,
        closure_tol,
        closure_pass,
        holder,
        pass,
    })
}
