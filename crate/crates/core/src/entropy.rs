//! Entropy generators, the Loewner-Morawetz map to entropy pairs, and
//! admissibility checks.

use serde::{Deserialize, Serialize};

use crate::chart::{self, StatePolar, RHO_CR};
use crate::error::{CavError, Result};
use crate::kernel::smooth::{PhiSpec, SmoothedKernel};
use crate::kernel::KernelTransform;

/// Derivatives of a generator at one point. `rho_h_nu` is kept separately
/// because `H_nu` itself may blow up at the vacuum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GenJet {
    pub h: f64,
    pub h_nu: f64,
    pub rho_h_nu: f64,
    pub h_th: f64,
    pub h_thth: f64,
    pub h_nuth: f64,
    pub h_ththth: f64,
    pub h_nuthth: f64,
    pub h_th4: f64,
}

impl GenJet {
    pub fn scale(&self, a: f64) -> Self {
        Self {
            h: a * self.h,
            h_nu: a * self.h_nu,
            rho_h_nu: a * self.rho_h_nu,
            h_th: a * self.h_th,
            h_thth: a * self.h_thth,
            h_nuth: a * self.h_nuth,
            h_ththth: a * self.h_ththth,
            h_nuthth: a * self.h_nuthth,
            h_th4: a * self.h_th4,
        }
    }

    pub fn add(&self, o: &GenJet) -> Self {
        Self {
            h: self.h + o.h,
            h_nu: self.h_nu + o.h_nu,
            rho_h_nu: self.rho_h_nu + o.rho_h_nu,
            h_th: self.h_th + o.h_th,
            h_thth: self.h_thth + o.h_thth,
            h_nuth: self.h_nuth + o.h_nuth,
            h_ththth: self.h_ththth + o.h_ththth,
            h_nuthth: self.h_nuthth + o.h_nuthth,
            h_th4: self.h_th4 + o.h_th4,
        }
    }
}

/// A solution of `H_nunu - k'(nu)^2 H_thth = 0`.
pub trait Generator: Send + Sync {
    fn jet(&self, nu: f64, theta: f64) -> Result<GenJet>;
    fn name(&self) -> String;
}

/// `N(rho) = -int_{rho_inf}^{rho} dr / q(r)^2 = atanh(rho_inf) - atanh(rho)`.
pub fn n_of_rho(rho: f64, rho_inf: f64) -> f64 {
    rho_inf.atanh() - rho.atanh()
}

/// Antiderivative of `-1/rho + N(rho)` in `nu`, as a function of `rho`.
fn special_primitive(rho: f64, rho_inf: f64) -> f64 {
    let at = rho.atanh();
    (1.0 - rho * rho).ln() + rho_inf.atanh() * chart::nu_of_rho_unchecked(rho) + rho * at - 0.5 * at * at
}

/// `H*(nu, theta) = theta^2/2 - nu/rho_bar + int int k'^2`, both integrals
/// based at `nu_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialGenerator {
    pub nu_bar: f64,
    pub rho_bar: f64,
}

pub fn special_generator(nu_bar: f64) -> Result<SpecialGenerator> {
    if !(nu_bar > 0.0 && nu_bar < chart::NU_CR) {
        return Err(CavError::Domain {
            what: "nu_bar",
            value: nu_bar,
            range: "(0, nu_cr)",
        });
    }
    Ok(SpecialGenerator {
        nu_bar,
        rho_bar: chart::rho_of_nu(nu_bar)?,
    })
}

impl SpecialGenerator {
    /// Anchored at the far-field speed.
    pub fn from_q_inf(q_inf: f64) -> Result<Self> {
        special_generator(chart::nu_of_rho(chart::rho_of_q(q_inf)?)?)
    }

    pub fn n(&self, rho: f64) -> f64 {
        n_of_rho(rho, self.rho_bar)
    }

    /// `H*_nunu = k'^2`.
    pub fn h_nunu(&self, nu: f64) -> Result<f64> {
        let kp = chart::kprime_of_nu(nu)?;
        Ok(kp * kp)
    }
}

impl Generator for SpecialGenerator {
    fn jet(&self, nu: f64, theta: f64) -> Result<GenJet> {
        let rho = chart::rho_of_nu(nu)?;
        let rb = self.rho_bar;
        let n = self.n(rho);
        let h = 0.5 * theta * theta - self.nu_bar / rb + special_primitive(rho, rb) - special_primitive(rb, rb);
        Ok(GenJet {
            h,
            h_nu: if rho > 0.0 { -1.0 / rho + n } else { f64::NEG_INFINITY },
            rho_h_nu: -1.0 + rho * n,
            h_th: theta,
            h_thth: 1.0,
            ..GenJet::default()
        })
    }

    fn name(&self) -> String {
        format!("special(nu_bar={})", self.nu_bar)
    }
}

/// Linear combination of generators.
pub struct Combination {
    pub terms: Vec<(f64, Box<dyn Generator>)>,
}

impl Generator for Combination {
    fn jet(&self, nu: f64, theta: f64) -> Result<GenJet> {
        let mut acc = GenJet::default();
        for (a, g) in &self.terms {
            acc = acc.add(&g.jet(nu, theta)?.scale(*a));
        }
        Ok(acc)
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(a, g)| format!("{a}*{}", g.name())).collect();
        parts.join(" + ")
    }
}

/// `H = sum_i c_i (H_i * phi_i)` from smoothed kernel tables, with `theta`
/// playing the role of `s`. Evaluation uses cubic Hermite interpolation
/// in `theta` (stored next derivatives as slopes) and linear interpolation
/// in `ln nu`.
#[derive(Debug, Clone)]
pub struct KernelGenerator {
    pub parts: Vec<(f64, SmoothedKernel)>,
}

impl KernelGenerator {
    /// Smooths the given transforms on shared grids.
    pub fn build(parts: &[(f64, &KernelTransform, PhiSpec)], nu_grid: &[f64], s_grid: &[f64]) -> Result<Self> {
        let parts = parts
            .iter()
            .map(|(c, kt, phi)| Ok((*c, SmoothedKernel::build(kt, *phi, nu_grid, s_grid)?)))
            .collect::<Result<_>>()?;
        Ok(Self { parts })
    }

    /// Jet at grid node `(nu_grid[i_nu], s_grid[i_s])`.
    pub fn jet_at(&self, i_nu: usize, i_s: usize) -> Result<GenJet> {
        let mut acc = GenJet::default();
        for (c, sk) in &self.parts {
            let rho = chart::rho_of_nu(sk.nu_grid[i_nu])?;
            let hv = |j: usize| sk.h_row(j, i_nu)[i_s];
            let hn = |j: usize| sk.h_nu_row(j, i_nu)[i_s];
            let jt = GenJet {
                h: hv(0),
                h_nu: hn(0),
                rho_h_nu: rho * hn(0),
                h_th: hv(1),
                h_thth: hv(2),
                h_nuth: hn(1),
                h_ththth: hv(3),
                h_nuthth: hn(2),
                h_th4: hv(4),
            };
            acc = acc.add(&jt.scale(*c));
        }
        Ok(acc)
    }

    pub fn nu_grid(&self) -> &[f64] {
        &self.parts[0].1.nu_grid
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.parts[0].1.s_grid
    }
}

fn hermite(s: &[f64], y: &[f64], dy: Option<&[f64]>, x: f64) -> f64 {
    let i = s.partition_point(|&a| a <= x).clamp(1, s.len() - 1) - 1;
    let h = s[i + 1] - s[i];
    let u = (x - s[i]) / h;
    match dy {
        Some(d) => {
            let u2 = u * u;
            let u3 = u2 * u;
            (2.0 * u3 - 3.0 * u2 + 1.0) * y[i]
                + (u3 - 2.0 * u2 + u) * h * d[i]
                + (-2.0 * u3 + 3.0 * u2) * y[i + 1]
                + (u3 - u2) * h * d[i + 1]
        }
        None => (1.0 - u) * y[i] + u * y[i + 1],
    }
}

impl Generator for KernelGenerator {
    fn jet(&self, nu: f64, theta: f64) -> Result<GenJet> {
        let g = self.nu_grid();
        let s = self.s_grid();
        let inside = nu >= g[0] && nu <= g[g.len() - 1] && theta >= s[0] && theta <= s[s.len() - 1];
        if !inside {
            return Err(CavError::Domain {
                what: "generator argument",
                value: if nu >= g[0] && nu <= g[g.len() - 1] { theta } else { nu },
                range: "the smoothed-kernel table",
            });
        }
        let rho = chart::rho_of_nu(nu)?;
        let (i0, w) = if g.len() == 1 {
            (0, 0.0)
        } else {
            let i = g.partition_point(|&a| a <= nu).clamp(1, g.len() - 1) - 1;
            (i, (nu.ln() - g[i].ln()) / (g[i + 1].ln() - g[i].ln()))
        };
        let mut acc = GenJet::default();
        for (c, sk) in &self.parts {
            let row_h = |j: usize, i: usize| {
                let d = if j + 1 < sk.h.len() { Some(sk.h_row(j + 1, i)) } else { None };
                hermite(s, sk.h_row(j, i), d, theta)
            };
            let row_n = |j: usize, i: usize| {
                let d = if j + 1 < sk.h_nu.len() { Some(sk.h_nu_row(j + 1, i)) } else { None };
                hermite(s, sk.h_nu_row(j, i), d, theta)
            };
            let blend = |f: &dyn Fn(usize) -> f64| {
                if w == 0.0 {
                    f(i0)
                } else {
                    (1.0 - w) * f(i0) + w * f(i0 + 1)
                }
            };
            let hn0 = blend(&|i| row_n(0, i));
            let jt = GenJet {
                h: blend(&|i| row_h(0, i)),
                h_nu: hn0,
                rho_h_nu: rho * hn0,
                h_th: blend(&|i| row_h(1, i)),
                h_thth: blend(&|i| row_h(2, i)),
                h_nuth: blend(&|i| row_n(1, i)),
                h_ththth: blend(&|i| row_h(3, i)),
                h_nuthth: blend(&|i| row_n(2, i)),
                h_th4: blend(&|i| row_h(4, i)),
            };
            acc = acc.add(&jt.scale(*c));
        }
        Ok(acc)
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|(c, sk)| format!("{c}*{}(w={})", sk.kind.name(), sk.phi.width))
            .collect();
        parts.join(" + ")
    }
}

/// `(Q1, Q2)` from `(rho H_nu, H_theta)` at a supersonic state.
pub fn loewner_morawetz_jet(jet: &GenJet, state: StatePolar) -> (f64, f64) {
    let q = state.q();
    let (s, c) = state.theta.sin_cos();
    (
        q * c * jet.rho_h_nu - q * s * jet.h_th,
        q * s * jet.rho_h_nu + q * c * jet.h_th,
    )
}

fn check_supersonic(state: StatePolar) -> Result<()> {
    if !(state.rho >= 0.0 && state.rho < RHO_CR) {
        return Err(CavError::Domain {
            what: "rho",
            value: state.rho,
            range: "[0, rho_cr) (supersonic)",
        });
    }
    Ok(())
}

pub fn loewner_morawetz(gen: &dyn Generator, state: StatePolar) -> Result<(f64, f64)> {
    check_supersonic(state)?;
    let jet = gen.jet(state.nu(), state.theta)?;
    Ok(loewner_morawetz_jet(&jet, state))
}

/// Closed-form special pair `Q_*`.
pub fn special_pair(gen: &SpecialGenerator, state: StatePolar) -> Result<(f64, f64)> {
    check_supersonic(state)?;
    let q = state.q();
    let th = state.theta;
    let (s, c) = th.sin_cos();
    let n = gen.n(state.rho);
    Ok((
        -q * (th * s + c) + n * state.rho * q * c,
        q * (th * c - s) + n * state.rho * q * s,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub generator: String,
    /// `min (H_thth - rho H_nuthth)`.
    pub margin1: f64,
    /// `min (rho (H_thth - rho H_nuthth) - |rho H_nuth + H_ththth|)`.
    pub margin2: f64,
    pub worst1: (f64, f64),
    pub worst2: (f64, f64),
    pub admissible: bool,
    /// Per-point rows `(nu, theta, m1, m2)`.
    pub rows: Vec<[f64; 4]>,
}

pub fn convexity_check(gen: &dyn Generator, nu_grid: &[f64], theta_grid: &[f64]) -> Result<ConvexityReport> {
    let mut rep = ConvexityReport {
        generator: gen.name(),
        margin1: f64::INFINITY,
        margin2: f64::INFINITY,
        worst1: (f64::NAN, f64::NAN),
        worst2: (f64::NAN, f64::NAN),
        admissible: false,
        rows: Vec::with_capacity(nu_grid.len() * theta_grid.len()),
    };
    for &nu in nu_grid {
        let rho = chart::rho_of_nu(nu)?;
        for &th in theta_grid {
            let j = gen.jet(nu, th)?;
            let a = j.h_thth - rho * j.h_nuthth;
            let m1 = a;
            let m2 = rho * a - (rho * j.h_nuth + j.h_ththth).abs();
            if m1 < rep.margin1 {
                rep.margin1 = m1;
                rep.worst1 = (nu, th);
            }
            if m2 < rep.margin2 {
                rep.margin2 = m2;
                rep.worst2 = (nu, th);
            }
            rep.rows.push([nu, th, m1, m2]);
        }
    }
    rep.admissible = rep.margin1 >= 0.0 && rep.margin2 >= 0.0;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub generator: String,
    /// `sup |d^j_theta (rho H_nu)| + sup |d^j_theta H_theta|`, `j = 0, 1, 2`.
    pub bounded: [f64; 3],
    /// `sup |d^j_theta (rho H_nu + H_thth)| / rho`.
    pub rho_weighted: [f64; 3],
}

pub fn compactness_bounds(gen: &dyn Generator, nu_grid: &[f64], theta_grid: &[f64]) -> Result<CompactnessReport> {
    let mut b = [[0.0f64; 2]; 3];
    let mut r = [0.0f64; 3];
    for &nu in nu_grid {
        let rho = chart::rho_of_nu(nu)?;
        for &th in theta_grid {
            let j = gen.jet(nu, th)?;
            let rh = [j.rho_h_nu, rho * j.h_nuth, rho * j.h_nuthth];
            let ht = [j.h_th, j.h_thth, j.h_ththth];
            let comb = [j.rho_h_nu + j.h_thth, rho * j.h_nuth + j.h_ththth, rho * j.h_nuthth + j.h_th4];
            for d in 0..3 {
                b[d][0] = b[d][0].max(rh[d].abs());
                b[d][1] = b[d][1].max(ht[d].abs());
                r[d] = r[d].max(comb[d].abs() / rho);
            }
        }
    }
    Ok(CompactnessReport {
        generator: gen.name(),
        bounded: [b[0][0] + b[0][1], b[1][0] + b[1][1], b[2][0] + b[2][1]],
        rho_weighted: r,
    })
}

/// Relative residual of `H_nunu - k'^2 H_thth = 0` for a smoothed kernel at
/// `nu`, with `H_nunu` from a five-point stencil of directly built rows.
pub fn kernel_generator_residual(kt: &KernelTransform, phi: PhiSpec, nu: f64, s_grid: &[f64]) -> Result<f64> {
    let h = 2e-3 * nu;
    let stencil = [nu - 2.0 * h, nu - h, nu, nu + h, nu + 2.0 * h];
    let sk = SmoothedKernel::build(kt, phi, &stencil, s_grid)?;
    let kp = chart::kprime_of_nu(nu)?;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..s_grid.len() {
        let v = |k: usize| sk.h_nu_row(0, k)[i];
        let hnn = (v(0) - 8.0 * v(1) + 8.0 * v(3) - v(4)) / (12.0 * h);
        let w = kp * kp * sk.h_row(2, 2)[i];
        res = res.max((hnn - w).abs());
        scale = scale.max(hnn.abs()).max(w.abs());
    }
    Ok(res / scale.max(f64::MIN_POSITIVE))
}
