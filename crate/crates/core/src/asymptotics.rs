//! Vacuum expansion `k(nu) = c_sharp nu^{1/3} + c_flat nu + c_l nu^{5/3} + L(nu)`.
//!
//! The constants come from truncated power-series arithmetic in `x = nu^{1/3}`:
//! the density series is inverted by fixed-point iteration, composed into
//! `dk/dx = 3 x^2 k'(nu)` and integrated term by term. A least-squares fit of
//! the closed-form `k` provides the cross-check, and the remainder `L` is
//! evaluated in double-double arithmetic.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::chart;
use crate::constants;
use crate::error::{CavError, Result};

/// Truncated power series with coefficients in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<f64>);

impl Series {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let mut out = vec![0.0; n];
        for (i, a) in self.0.iter().enumerate().take(n) {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.0.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        Series(out)
    }

    pub fn scale(&self, c: f64) -> Series {
        Series(self.0.iter().map(|a| a * c).collect())
    }

    /// `self^alpha` for a series with nonzero constant term.
    pub fn powf(&self, alpha: f64) -> Series {
        let n = self.len();
        let a0 = self.0[0];
        let f: Vec<f64> = self.0.iter().map(|a| a / a0).collect();
        let mut h = vec![0.0; n];
        h[0] = 1.0;
        for m in 1..n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += (alpha * k as f64 - (m - k) as f64) * f[k] * h[m - k];
            }
            h[m] = acc / m as f64;
        }
        Series(h).scale(a0.powf(alpha))
    }

    /// `P(self)` where `P` is given by its coefficients.
    pub fn compose_into(&self, p: &[f64]) -> Series {
        let n = self.len();
        let mut out = Series::zeros(n);
        for c in p.iter().rev() {
            out = out.mul(self);
            out.0[0] += c;
        }
        out
    }

    /// Antiderivative vanishing at zero (one extra coefficient dropped).
    pub fn integrate(&self) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 1..n {
            out[i] = self.0[i - 1] / i as f64;
        }
        Series(out)
    }
}

/// Coefficients of `k` in powers of `x = nu^{1/3}`, up to `x^{order}`.
pub fn k_series_in_cbrt_nu(order: usize) -> Series {
    let n = order + 2;
    let third = 1.0 / 3.0;
    // nu = (rho^3 / 3) P(rho^2), P(t) = sum 3 t^j / (2j + 3)
    let p: Vec<f64> = (0..n).map(|j| 3.0 / (2 * j + 3) as f64).collect();
    let c = 3f64.powf(third);
    // r(x) = rho / x satisfies r = c P(x^2 r^2)^{-1/3}
    let mut r = Series::zeros(n);
    r.0[0] = c;
    let mut x2 = Series::zeros(n);
    if n > 2 {
        x2.0[2] = 1.0;
    }
    for _ in 0..n {
        let rho2 = x2.mul(&r.mul(&r));
        let pr = rho2.compose_into(&p);
        r = pr.powf(-third).scale(c);
    }
    // dk/dx = 3 x^2 sqrt(1 - 2 rho^2) / rho^2 = 3 sqrt(1 - 2 rho^2) / r^2
    let rho2 = x2.mul(&r.mul(&r));
    let mut one_minus = rho2.scale(-2.0);
    one_minus.0[0] += 1.0;
    let dk = one_minus.powf(0.5).mul(&r.mul(&r).powf(-1.0)).scale(3.0);
    let mut k = dk.integrate();
    k.0.truncate(order + 1);
    k
}

/// The three vacuum constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub c_sharp: f64,
    pub c_flat: f64,
    pub c_l: f64,
}

impl AsymptoticConstants {
    /// The frozen values.
    pub fn frozen() -> Self {
        Self {
            c_sharp: constants::C_SHARP,
            c_flat: constants::C_FLAT,
            c_l: constants::C_L,
        }
    }

    /// `c_tilde = (28/9) c_sharp c_l + 2 c_flat^2`.
    pub fn c_tilde(&self) -> f64 {
        28.0 / 9.0 * self.c_sharp * self.c_l + 2.0 * self.c_flat * self.c_flat
    }

    pub fn leading(&self, nu: f64) -> f64 {
        let x = nu.cbrt();
        self.c_sharp * x + self.c_flat * nu + self.c_l * nu * x * x
    }
}

/// Oracle, fit and frozen values side by side.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub constants: AsymptoticConstants,
    pub series: AsymptoticConstants,
    pub fitted: AsymptoticConstants,
    /// `x^7` coefficient of the series (the `nu^{7/3}` term).
    pub series_next: f64,
    pub frozen_vs_series: f64,
    /// Largest `|L(nu)| / nu^{7/3}` on the fit window.
    pub remainder_envelope: f64,
}

/// Runs the series oracle, the least-squares cross-check and the remainder
/// envelope test. Fails if the remainder leaves a `C nu^{7/3}` envelope.
pub fn fit_asymptotic_constants() -> Result<AsymptoticReport> {
    let k = k_series_in_cbrt_nu(9);
    let series = AsymptoticConstants {
        c_sharp: k.0[1],
        c_flat: k.0[3],
        c_l: k.0[5],
    };
    let frozen = AsymptoticConstants::frozen();

    // least squares for (k - c_sharp nu^{1/3}) / nu = a + b nu^{2/3}
    let nus = log_grid(1e-8, 1e-4, 41);
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &nu in &nus {
        let y = (chart::k_of_nu(nu)? - frozen.c_sharp * nu.cbrt()) / nu;
        let t = nu.powf(2.0 / 3.0);
        s00 += 1.0;
        s01 += t;
        s11 += t * t;
        r0 += y;
        r1 += y * t;
    }
    let det = s00 * s11 - s01 * s01;
    let fitted = AsymptoticConstants {
        c_sharp: frozen.c_sharp,
        c_flat: (r0 * s11 - r1 * s01) / det,
        c_l: (s00 * r1 - s01 * r0) / det,
    };

    let mut envelope: f64 = 0.0;
    let mut at_largest = 0.0;
    for &nu in &nus {
        let l = remainder_l(nu)?.abs() / nu.powf(7.0 / 3.0);
        envelope = envelope.max(l);
        at_largest = l;
    }
    // the ratio must stay near its limit rather than grow toward the vacuum
    if envelope > 2.0 * at_largest.max(k.0[7].abs()) {
        return Err(CavError::Quadrature(format!(
            "remainder ratio {envelope:e} is not bounded by the nu^(7/3) envelope"
        )));
    }

    let frozen_vs_series = (frozen.c_flat - series.c_flat)
        .abs()
        .max((frozen.c_l - series.c_l).abs())
        .max((frozen.c_sharp - series.c_sharp).abs());
    Ok(AsymptoticReport {
        constants: frozen,
        series,
        fitted,
        series_next: k.0[7],
        frozen_vs_series,
        remainder_envelope: envelope,
    })
}

pub(crate) fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// Division refined by one correction step; the crate's quotient alone is
/// only accurate to about f64 precision.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let y = a / b;
    y + dd((a - y * b).hi() / b.hi())
}

fn dd_cbrt(a: TwoFloat) -> TwoFloat {
    let mut y = dd(a.hi().cbrt());
    for _ in 0..3 {
        y = y - dd_div(y * y * y - a, dd(3.0) * y * y);
    }
    y
}

/// `sum (-1)^n t^{2n+1}/(2n+1)` for `|t| <= 0.2`.
fn dd_atan_small(t: TwoFloat) -> TwoFloat {
    let t2 = t * t;
    let mut term = t;
    let mut sum = dd(0.0);
    let mut n = 1.0;
    for i in 0..60 {
        let add = dd_div(term, dd(n));
        sum = if i % 2 == 0 { sum + add } else { sum - add };
        if add.hi().abs() < 1e-34 * sum.hi().abs() {
            break;
        }
        term = term * t2;
        n += 2.0;
    }
    sum
}

fn dd_nu_of_rho(rho: TwoFloat) -> TwoFloat {
    let r2 = rho * rho;
    let mut term = rho * r2;
    let mut sum = dd(0.0);
    let mut n = 3.0;
    for _ in 0..80 {
        let add = dd_div(term, dd(n));
        sum = sum + add;
        if add.hi() < 1e-34 * sum.hi() {
            break;
        }
        term = term * r2;
        n += 2.0;
    }
    sum
}

/// `k(nu)` in double-double for `nu <= 1e-3`.
pub fn k_of_nu_dd(nu: f64) -> Result<TwoFloat> {
    if !(nu > 0.0 && nu <= 1e-3) {
        return Err(crate::error::domain("nu", nu, "(0, 1e-3]"));
    }
    let target = dd(nu);
    let mut rho = dd(chart::rho_of_nu(nu)?);
    for _ in 0..3 {
        let r2 = rho * rho;
        let d = dd_div(r2, dd(1.0) - r2);
        rho = rho - dd_div(dd_nu_of_rho(rho) - target, d);
    }
    let r2 = rho * rho;
    let s = (dd(1.0) - dd(2.0) * r2).sqrt();
    let sqrt2 = dd(2.0).sqrt();
    Ok(sqrt2 * dd_atan_small(dd_div(sqrt2 * rho, s)) - dd_atan_small(dd_div(rho, s)))
}

/// Remainder `L(nu)` after the three leading terms, in double-double.
pub fn remainder_l(nu: f64) -> Result<f64> {
    let k = k_of_nu_dd(nu)?;
    let x = dd_cbrt(dd(nu));
    let c_sharp = dd_cbrt(dd(3.0));
    let c_l = dd_div(dd(-87.0) * dd_cbrt(dd(9.0)), dd(350.0));
    let lead = c_sharp * x + dd(-0.6) * dd(nu) + c_l * dd(nu) * x * x;
    Ok((k - lead).hi())
}

/// `2 k'^2 + k k'' - (10/9) c_sharp c_flat nu^{-2/3} - c_tilde` at density `rho`.
pub fn cancellation_defect(rho: f64, c: &AsymptoticConstants) -> f64 {
    let nu = chart::nu_of_rho_unchecked(rho);
    let k = chart::k_of_rho_unchecked(rho);
    let kp = chart::kprime_of_rho(rho);
    let kpp = chart::kdoubleprime_of_rho(rho);
    2.0 * kp * kp + k * kpp - 10.0 / 9.0 * c.c_sharp * c.c_flat * nu.powf(-2.0 / 3.0) - c.c_tilde()
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
