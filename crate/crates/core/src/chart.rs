//! Thermodynamic closures and coordinate maps for the gamma = 3 gas.
//!
//! Bernoulli gives `rho = sqrt(1 - q^2)`, the sound speed equals `rho`, and the
//! renormalized density is `nu = artanh(rho) - rho`. The characteristic speed
//! `k` is written in the density variable so that nothing cancels near the
//! vacuum.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{domain, CavError, Result};

pub const GAMMA: f64 = 3.0;
pub const Q_CR: f64 = FRAC_1_SQRT_2;
pub const Q_CAV: f64 = 1.0;
pub const RHO_CR: f64 = FRAC_1_SQRT_2;
/// `artanh(1/sqrt 2) - 1/sqrt 2`.
pub const NU_CR: f64 = 0.174_266_805_832_995_5;
/// `(sqrt 2 - 1) pi / 2`, the value of `k` at the critical speed.
pub const K_CR: f64 = (SQRT_2 - 1.0) * PI / 2.0;
/// `2 rho_cr - artanh(rho_cr)`, the largest value of `sigma`.
pub const SIGMA_CR: f64 = 0.532_839_975_353_552_0;

/// Named constants of the gamma = 3 gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasConstants {
    pub gamma: f64,
    pub q_cr: f64,
    pub q_cav: f64,
    pub rho_cr: f64,
    pub nu_cr: f64,
    pub k_at_qcr: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        Self {
            gamma: GAMMA,
            q_cr: Q_CR,
            q_cav: Q_CAV,
            rho_cr: RHO_CR,
            nu_cr: NU_CR,
            k_at_qcr: K_CR,
        }
    }
}

/// Polar state `(rho, theta)`; everything else is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatePolar {
    pub rho: f64,
    pub theta: f64,
}

impl StatePolar {
    pub fn new(rho: f64, theta: f64) -> Self {
        Self { rho, theta }
    }

    pub fn from_speed(q: f64, theta: f64) -> Result<Self> {
        Ok(Self {
            rho: rho_of_q(q)?,
            theta,
        })
    }

    pub fn q(&self) -> f64 {
        q_of_rho(self.rho)
    }

    pub fn nu(&self) -> f64 {
        nu_of_rho_unchecked(self.rho)
    }

    pub fn sigma(&self) -> f64 {
        sigma_of_rho(self.rho)
    }

    pub fn mach(&self) -> f64 {
        mach_of_rho(self.rho)
    }

    /// `(W_-, W_+)`.
    pub fn invariants(&self) -> (f64, f64) {
        let k = k_of_rho_unchecked(self.rho);
        (self.theta - k, self.theta + k)
    }

    pub fn velocity(&self) -> (f64, f64) {
        let q = self.q();
        (q * self.theta.cos(), q * self.theta.sin())
    }
}

/// `Z = (rho u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedState {
    pub z1: f64,
    pub z2: f64,
}

pub fn rho_of_q(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain("q", q, "[0, 1]"));
    }
    Ok(((1.0 - q) * (1.0 + q)).sqrt())
}

/// Speed from density; negative densities are treated as the vacuum.
pub fn q_of_rho(rho: f64) -> f64 {
    let r = rho.max(0.0);
    ((1.0 - r) * (1.0 + r)).max(0.0).sqrt()
}

/// Clipped speed `(1 - rho_+^2)_+^{1/2}`.
pub fn q_clipped(rho: f64) -> f64 {
    q_of_rho(rho)
}

pub fn nu_of_rho(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(domain("rho", rho, "[0, 1)"));
    }
    Ok(nu_of_rho_unchecked(rho))
}

pub(crate) fn nu_of_rho_unchecked(rho: f64) -> f64 {
    if rho < 0.1 {
        let r2 = rho * rho;
        let mut term = rho * r2;
        let mut sum: f64 = 0.0;
        let mut n = 3.0;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) || sum == 0.0 {
            sum += term / n;
            term *= r2;
            n += 2.0;
            if term == 0.0 {
                break;
            }
        }
        sum
    } else {
        rho.atanh() - rho
    }
}

/// `d nu / d rho = rho^2 / (1 - rho^2)`.
pub fn dnu_drho(rho: f64) -> f64 {
    rho * rho / ((1.0 - rho) * (1.0 + rho))
}

/// Inverse of `nu_of_rho` on `[0, nu_cr]` by safeguarded Newton.
pub fn rho_of_nu(nu: f64) -> Result<f64> {
    if !(0.0..=NU_CR * (1.0 + 1e-14)).contains(&nu) {
        return Err(domain("nu", nu, "[0, nu_cr]"));
    }
    if nu == 0.0 {
        return Ok(0.0);
    }
    let x = nu.cbrt();
    let seed = if nu < 1e-2 {
        3f64.cbrt() * x - 0.6 * nu
    } else {
        0.5 * RHO_CR
    };
    Ok(monotone_solve(
        nu,
        seed,
        0.0,
        RHO_CR,
        nu_of_rho_unchecked,
        dnu_drho,
    ))
}

/// Solves `f(r) = target` for increasing `f` on `[lo, hi]`, Newton with
/// bisection safeguard.
pub(crate) fn monotone_solve(
    target: f64,
    seed: f64,
    mut lo: f64,
    mut hi: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> f64 {
    let mut r = seed.clamp(lo, hi);
    for _ in 0..200 {
        let g = f(r) - target;
        if g == 0.0 {
            return r;
        }
        if g > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = df(r);
        let mut next = if d > 0.0 && d.is_finite() { r - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-16 * r.abs().max(1e-300) || hi - lo <= 1e-17 * hi.abs() {
            return next;
        }
        r = next;
    }
    r
}

/// `sigma(rho) = 2 rho - artanh(rho)`, extended oddly to negative densities.
pub fn sigma_of_rho(rho: f64) -> f64 {
    2.0 * rho - rho.atanh()
}

/// `d sigma / d rho = (1 - 2 rho^2) / (1 - rho^2)`, the factor `1 - c^2/q^2`.
pub fn dsigma_drho(rho: f64) -> f64 {
    (1.0 - 2.0 * rho * rho) / ((1.0 - rho) * (1.0 + rho))
}

/// Inverse of `sigma` on `[-rho_cr, rho_cr]`.
pub fn rho_of_sigma(sigma: f64) -> Result<f64> {
    if !(-SIGMA_CR..=SIGMA_CR).contains(&sigma) {
        return Err(domain("sigma", sigma, "[-sigma_cr, sigma_cr]"));
    }
    let s = sigma.abs();
    let r = monotone_solve(s, s, 0.0, RHO_CR, sigma_of_rho, dsigma_drho);
    Ok(r.copysign(sigma))
}

/// Characteristic speed as a function of density.
pub fn k_of_rho(rho: f64) -> Result<f64> {
    if !(0.0..=RHO_CR).contains(&rho) {
        return Err(domain("rho", rho, "[0, rho_cr]"));
    }
    Ok(k_of_rho_unchecked(rho))
}

pub(crate) fn k_of_rho_unchecked(rho: f64) -> f64 {
    let s = (1.0 - 2.0 * rho * rho).max(0.0).sqrt();
    SQRT_2 * (SQRT_2 * rho).atan2(s) - rho.atan2(s)
}

/// `dk / d rho = sqrt(1 - 2 rho^2) / (1 - rho^2)`.
pub fn dk_drho(rho: f64) -> f64 {
    (1.0 - 2.0 * rho * rho).max(0.0).sqrt() / ((1.0 - rho) * (1.0 + rho))
}

/// Closed-form `k(q)` on `[q_cr, q_cav]`.
pub fn k_of_q(q: f64) -> Result<f64> {
    if !(Q_CR..=Q_CAV).contains(&q) {
        return Err(domain("q", q, "[q_cr, q_cav]"));
    }
    Ok(k_of_rho_unchecked(((1.0 - q) * (1.0 + q)).sqrt().min(RHO_CR)))
}

/// `k'(q) = -(1/q) sqrt((2q^2 - 1)/(1 - q^2))`; `-inf` at the cavitation speed.
pub fn kprime_of_q(q: f64) -> Result<f64> {
    if !(Q_CR..=Q_CAV).contains(&q) {
        return Err(domain("q", q, "[q_cr, q_cav]"));
    }
    let num = 2.0 * q * q - 1.0;
    if num <= 4.0 * f64::EPSILON {
        return Ok(-0.0);
    }
    let den = (1.0 - q) * (1.0 + q);
    if den == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-(num / den).sqrt() / q)
}

pub fn k_of_nu(nu: f64) -> Result<f64> {
    Ok(k_of_rho_unchecked(rho_of_nu(nu)?))
}

/// `k'(nu) = sqrt(1 - 2 rho^2) / rho^2`.
pub fn kprime_of_nu(nu: f64) -> Result<f64> {
    if nu <= 0.0 {
        return Err(domain("nu", nu, "(0, nu_cr]"));
    }
    Ok(kprime_of_rho(rho_of_nu(nu)?))
}

pub fn kprime_of_rho(rho: f64) -> f64 {
    (1.0 - 2.0 * rho * rho).max(0.0).sqrt() / (rho * rho)
}

/// `k''(nu) = -2 (1 - rho^2)^2 / (s rho^5)` with `s = sqrt(1 - 2 rho^2)`.
pub fn kdoubleprime_of_nu(nu: f64) -> Result<f64> {
    if nu <= 0.0 || nu >= NU_CR {
        return Err(domain("nu", nu, "(0, nu_cr)"));
    }
    Ok(kdoubleprime_of_rho(rho_of_nu(nu)?))
}

pub fn kdoubleprime_of_rho(rho: f64) -> f64 {
    let q2 = (1.0 - rho) * (1.0 + rho);
    let s = (1.0 - 2.0 * rho * rho).sqrt();
    -2.0 * q2 * q2 / (s * rho.powi(5))
}

/// `(M^2 - 1)/rho^2 = (1 - 2 rho^2)/rho^4`, finite form of `k'^2`.
pub fn mach_factor(rho: f64) -> f64 {
    (1.0 - 2.0 * rho * rho) / rho.powi(4)
}

/// Mach number `q / rho`; infinite at the vacuum.
pub fn mach_of_rho(rho: f64) -> f64 {
    if rho <= 0.0 {
        f64::INFINITY
    } else {
        q_of_rho(rho) / rho
    }
}

/// Inverse of `k(rho)` on `[0, k_cr]`.
pub fn rho_of_k(k: f64) -> Result<f64> {
    if !(0.0..=K_CR).contains(&k) {
        return Err(domain("k", k, "[0, k_cr]"));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    if k == K_CR {
        return Ok(RHO_CR);
    }
    Ok(monotone_solve(
        k,
        k.min(0.9 * RHO_CR),
        0.0,
        RHO_CR,
        k_of_rho_unchecked,
        dk_drho,
    ))
}

/// `(W_-, W_+) = (theta - k(q), theta + k(q))`.
pub fn riemann_invariants(state: StatePolar) -> Result<(f64, f64)> {
    let k = k_of_rho(state.rho)?;
    Ok((state.theta - k, state.theta + k))
}

/// Inverse of `riemann_invariants`.
pub fn state_from_invariants(w_minus: f64, w_plus: f64) -> Result<StatePolar> {
    let k = 0.5 * (w_plus - w_minus);
    if !(0.0..=K_CR).contains(&k) {
        return Err(domain("(W+ - W-)/2", k, "[0, k_cr]"));
    }
    Ok(StatePolar {
        rho: rho_of_k(k)?,
        theta: 0.5 * (w_plus + w_minus),
    })
}

pub fn conserved_of_state(state: StatePolar) -> ConservedState {
    let (u, v) = state.velocity();
    ConservedState {
        z1: state.rho.max(0.0) * u,
        z2: v,
    }
}

/// Explicit radical inversion of `Z`. The formula selects the root with
/// `rho <= |u|`, which is the supersonic branch along the x-direction.
pub fn state_of_conserved(z: ConservedState) -> Result<StatePolar> {
    let a = 1.0 - z.z2 * z.z2;
    let disc = a * a - 4.0 * z.z1 * z.z1;
    if a <= 0.0 || disc < -1e-14 {
        return Err(domain("Z", z.z1, "radical inversion range"));
    }
    let rho2 = 0.5 * (a - disc.max(0.0).sqrt());
    // 2 z1^2 / (a + sqrt(disc)) avoids the cancellation in a - sqrt(disc)
    let rho2 = if rho2 < 0.25 * a {
        2.0 * z.z1 * z.z1 / (a + disc.max(0.0).sqrt())
    } else {
        rho2
    };
    let rho = rho2.sqrt();
    if rho == 0.0 {
        return Err(CavError::VacuumInversion);
    }
    let u = z.z1 / rho;
    Ok(StatePolar {
        rho,
        theta: z.z2.atan2(u),
    })
}

/// Eigenvalues of the polar system and the genuine nonlinearity quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenstructure {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub strictly_hyperbolic: bool,
    /// `grad_Z Lambda_- . e_-`.
    pub gn_minus: f64,
    /// `grad_Z Lambda_+ . e_+`.
    pub gn_plus: f64,
    /// The positive factor `q^3 / sqrt((1 + q^2 - c^2)(q^2 - c^2))`.
    pub gn_factor: f64,
}

pub fn eigenstructure(state: StatePolar) -> Result<Eigenstructure> {
    let rho = state.rho;
    if !(0.0..=RHO_CR).contains(&rho) {
        return Err(domain("rho", rho, "[0, rho_cr]"));
    }
    let q = q_of_rho(rho);
    let c = rho;
    let r = ((q - c) * (q + c)).max(0.0).sqrt();
    let (sn, cs) = state.theta.sin_cos();
    let mut lam = [0.0; 2];
    let mut gn = [0.0; 2];
    let factor = q.powi(3) / ((1.0 + r * r) * r * r).sqrt();
    for (i, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let den = c * sn - sign * r * cs;
        if den.abs() < 1e-14 {
            return Err(CavError::CharacteristicAligned { denom: den });
        }
        lam[i] = -(c * cs + sign * r * sn) / den;
        gn[i] = sign * (GAMMA + 1.0) / (2.0 * den.powi(3)) * factor;
    }
    Ok(Eigenstructure {
        lambda_minus: lam[0],
        lambda_plus: lam[1],
        strictly_hyperbolic: rho > 0.0 && q > c,
        gn_minus: gn[0],
        gn_plus: gn[1],
        gn_factor: factor,
    })
}

/// Immutable chart: gas constants plus the configured `nu_*`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GasChart {
    pub constants: GasConstants,
    pub nu_star: f64,
}

impl Default for GasChart {
    fn default() -> Self {
        Self::new(0.5 * NU_CR).expect("default nu_star is valid")
    }
}

/// One row of the chart dump.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChartRow {
    pub nu: f64,
    pub rho: f64,
    pub q: f64,
    pub sigma: f64,
    pub k: f64,
    pub kprime: f64,
    pub kdoubleprime: f64,
    pub mach: f64,
}

impl GasChart {
    pub fn new(nu_star: f64) -> Result<Self> {
        if !(nu_star > 0.0 && nu_star < NU_CR) {
            return Err(domain("nu_star", nu_star, "(0, nu_cr)"));
        }
        Ok(Self {
            constants: GasConstants::default(),
            nu_star,
        })
    }

    pub fn row(&self, nu: f64) -> Result<ChartRow> {
        let rho = rho_of_nu(nu)?;
        Ok(ChartRow {
            nu,
            rho,
            q: q_of_rho(rho),
            sigma: sigma_of_rho(rho),
            k: k_of_rho_unchecked(rho),
            kprime: kprime_of_rho(rho),
            kdoubleprime: kdoubleprime_of_rho(rho),
            mach: mach_of_rho(rho),
        })
    }

    /// Log-spaced rows on `[nu_min, nu_*]`.
    pub fn table(&self, nu_min: f64, n: usize) -> Result<Vec<ChartRow>> {
        if !(nu_min > 0.0 && nu_min < self.nu_star) || n < 2 {
            return Err(CavError::Grid("chart table needs 0 < nu_min < nu_* and n >= 2".into()));
        }
        let (a, b) = (nu_min.ln(), self.nu_star.ln());
        (0..n)
            .map(|i| self.row((a + (b - a) * i as f64 / (n - 1) as f64).exp()))
            .collect()
    }
}
