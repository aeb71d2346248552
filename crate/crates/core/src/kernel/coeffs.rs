//! Coefficient functions of the regular and singular kernels as functions of
//! the density. Near the vacuum every coefficient is summed from its Laurent
//! expansion in `rho`; further out Taylor jets supply derivatives and
//! Chebyshev panels carry the three running integrals.

use serde::{Deserialize, Serialize};

use crate::chart;
use crate::cheb::ChebPanels;
use crate::constants::{C0_CLOSED_FORM, D0_CLOSED_FORM};
use crate::error::{CavError, Result};
use crate::jet::Jet;

/// Below this density the Laurent expansions are summed directly.
pub const RHO_SERIES: f64 = 0.25;
const SERIES_TERMS: usize = 48;
const JET_TERMS: usize = 10;
const CHEB_DEGREE: usize = 24;
const CHEB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Regular,
    Singular,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Regular => "regular",
            KernelKind::Singular => "singular",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            KernelKind::Regular => 0,
            KernelKind::Singular => 1,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(KernelKind::Regular),
            1 => Ok(KernelKind::Singular),
            _ => Err(CavError::Format(format!("unknown kernel kind code {c}"))),
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = CavError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(KernelKind::Regular),
            "singular" => Ok(KernelKind::Singular),
            _ => Err(CavError::Config(format!("unknown kernel kind `{s}`"))),
        }
    }
}

/// Index of each tabulated quantity; primes are `nu`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q {
    Alpha0 = 0,
    Alpha0P,
    Alpha0PP,
    Alpha1,
    Alpha1P,
    Alpha1PP,
    Ell,
    EllP,
    IntReg,
    Beta0,
    Beta0P,
    Beta0PP,
    Beta1,
    Beta1P,
    Beta1PP,
    Ell1,
    Beta2,
    Beta2P,
    Beta2PP,
    Ell2,
    Ell2P,
    Int1,
    Int2,
}

pub const N_Q: usize = 23;

impl Q {
    fn singular(self) -> bool {
        self as usize >= Q::Beta0 as usize
    }
}

/// Local expansions of `rho`, `k` and friends about a center.
struct Base {
    s: Jet,
    k: Jet,
    kp: Jet,
    kpp: Jet,
    kp_mh: Jet,
    dnu: Jet,
    g: Jet,
}

fn base(rho0: f64, n: usize) -> Base {
    let r = Jet::var(rho0, n);
    let r2 = &r * &r;
    let one = Jet::constant(1.0, n);
    let one_m = &one - &r2;
    let s = (&one - &r2.scale(2.0)).powf(0.5);
    let k0 = if rho0 == 0.0 { 0.0 } else { chart::k_of_rho(rho0).expect("rho in chart") };
    let k = s.div(&one_m).integ(k0);
    let kp = s.div(&r2);
    let g = one_m.div(&r2);
    let kpp = &g * kp.deriv();
    let kp_mh = &r * s.powf(-0.5);
    let dnu = r2.div(&one_m);
    Base {
        s,
        k,
        kp,
        kpp,
        kp_mh,
        dnu,
        g,
    }
}

impl Base {
    fn d(&self, f: &Jet) -> Jet {
        &self.g * f.deriv()
    }

    fn alpha0(&self) -> Jet {
        &(&self.k * &self.k) * &self.kp_mh
    }

    fn int_reg_rho(&self, a0pp: &Jet) -> Jet {
        &(a0pp * &self.kp_mh).div(&(&self.k * &self.k)) * &self.dnu
    }

    fn beta0(&self) -> Jet {
        self.kp_mh.div(&self.k)
    }

    fn int1_rho(&self, b0pp: &Jet) -> Jet {
        &(&(b0pp * &self.k) * &self.kp_mh) * &self.dnu
    }

    fn beta1(&self, i1: &Jet) -> Jet {
        (&self.kp_mh.div(&(&self.k * &self.k)) * i1).scale(0.25)
    }

    /// `f'' k^2 + 6 f' k' k + 6 f k'^2 + 3 f k'' k`.
    fn wave_defect(&self, f: &Jet, fp: &Jet, fpp: &Jet) -> Jet {
        let k = &self.k;
        let t1 = &(fpp * k) * k;
        let t2 = (&(fp * &self.kp) * k).scale(6.0);
        let t3 = (&(f * &self.kp) * &self.kp).scale(6.0);
        let t4 = (&(f * &self.kpp) * k).scale(3.0);
        &(&t1 + &t2) + &(&t3 + &t4)
    }

    fn int2_rho(&self, ell1: &Jet) -> Jet {
        &(ell1 * &self.kp_mh) * &self.dnu
    }
}

/// Every quantity as a jet about one center, for given values of the three
/// running integrals there.
fn expand(rho0: f64, n: usize, i_reg: f64, i1: f64, i2: f64) -> Vec<Jet> {
    let b = base(rho0, n);
    let a0 = b.alpha0();
    let a0p = b.d(&a0);
    let a0pp = b.d(&a0p);
    let ir = b.int_reg_rho(&a0pp).integ(i_reg);
    let a1 = (&(&(&b.k * &b.k) * &b.k) * &b.kp_mh * &ir).scale(-0.125);
    let a1p = b.d(&a1);
    let a1pp = b.d(&a1p);
    let ell = -(&a1pp + &a0pp.scale(1.25));
    let ellp = b.d(&ell);

    let b0 = b.beta0();
    let b0p = b.d(&b0);
    let b0pp = b.d(&b0p);
    let j1 = b.int1_rho(&b0pp).integ(i1);
    let b1 = b.beta1(&j1);
    let b1p = b.d(&b1);
    let b1pp = b.d(&b1p);
    let ell1 = b.wave_defect(&b1, &b1p, &b1pp);
    let j2 = b.int2_rho(&ell1).integ(i2);
    let k3 = &(&b.k * &b.k) * &b.k;
    let b2 = (&b.kp_mh.div(&k3) * &j2).scale(-0.25);
    let b2p = b.d(&b2);
    let b2pp = b.d(&b2p);
    let ell2 = -(&(&b.k * &b.k) * b.wave_defect(&b2, &b2p, &b2pp));
    let ell2p = b.d(&ell2);
    let _ = &b.s;
    vec![
        a0, a0p, a0pp, a1, a1p, a1pp, ell, ellp, ir, b0, b0p, b0pp, b1, b1p, b1pp, ell1, b2, b2p,
        b2pp, ell2, ell2p, j1, j2,
    ]
}

/// Coefficient functions with unit normalization (`c0 = d0 = 1`), scaled on
/// evaluation.
#[derive(Debug, Clone)]
pub struct CoefficientModel {
    pub nu_star: f64,
    pub rho_star: f64,
    pub c0: f64,
    pub d0: f64,
    series: Vec<Jet>,
    panels: Option<ChebPanels>,
}

/// Normalization constants: the closed-form values and the ones fixed by the
/// initial data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Normalization {
    pub c0_closed_form: f64,
    pub d0_closed_form: f64,
    pub c0: f64,
    pub d0: f64,
}

impl CoefficientModel {
    pub fn new(nu_star: f64) -> Result<Self> {
        if !(nu_star > 0.0 && nu_star < chart::NU_CR) {
            return Err(CavError::Domain {
                what: "nu_star",
                value: nu_star,
                range: "(0, nu_cr)",
            });
        }
        let rho_star = chart::rho_of_nu(nu_star)?;
        let series = expand(0.0, SERIES_TERMS, 0.0, 0.0, 0.0);
        let mut model = Self {
            nu_star,
            rho_star,
            c0: 1.0,
            d0: 1.0,
            series,
            panels: None,
        };
        if rho_star > RHO_SERIES {
            model.panels = Some(model.build_panels()?);
        }
        // limits at the vacuum: Hhat^r_nu -> (4/3) alpha0'(0), Hhat^s -> beta0(0)/2
        let a0p0 = model.series[Q::Alpha0P as usize].value();
        let b00 = model.series[Q::Beta0 as usize].value();
        model.c0 = 0.75 / a0p0;
        model.d0 = 2.0 / b00;
        Ok(model)
    }

    fn build_panels(&self) -> Result<ChebPanels> {
        let (a, b) = (RHO_SERIES, self.rho_star);
        let at = |q: Q| self.series[q as usize].eval(a);
        let first = ChebPanels::adaptive(
            |rho| {
                let j = expand(rho, JET_TERMS, 0.0, 0.0, 0.0);
                let bb = base(rho, JET_TERMS);
                vec![
                    bb.int_reg_rho(&j[Q::Alpha0PP as usize]).value(),
                    bb.int1_rho(&j[Q::Beta0PP as usize]).value(),
                ]
            },
            a,
            b,
            CHEB_DEGREE,
            CHEB_TOL,
        )?
        .integrate(&[at(Q::IntReg), at(Q::Int1)]);
        let second = ChebPanels::adaptive(
            |rho| {
                let i1 = first.eval(rho, 1);
                let j = expand(rho, JET_TERMS, 0.0, i1, 0.0);
                let bb = base(rho, JET_TERMS);
                vec![bb.int2_rho(&j[Q::Ell1 as usize]).value()]
            },
            a,
            b,
            CHEB_DEGREE,
            CHEB_TOL,
        )?
        .integrate(&[at(Q::Int2)]);
        ChebPanels::adaptive(
            |rho| {
                let i = first.eval_all(rho);
                let i2 = second.eval(rho, 0);
                expand(rho, JET_TERMS, i[0], i[1], i2)
                    .iter()
                    .map(Jet::value)
                    .collect()
            },
            a,
            b,
            CHEB_DEGREE,
            CHEB_TOL,
        )
    }

    pub fn normalization(&self) -> Normalization {
        Normalization {
            c0_closed_form: C0_CLOSED_FORM,
            d0_closed_form: D0_CLOSED_FORM,
            c0: self.c0,
            d0: self.d0,
        }
    }

    /// Replaces the normalization constants.
    pub fn with_normalization(mut self, c0: f64, d0: f64) -> Self {
        self.c0 = c0;
        self.d0 = d0;
        self
    }

    /// Unit-normalized value of `q` at density `rho`.
    fn raw(&self, q: Q, rho: f64) -> f64 {
        match &self.panels {
            Some(p) if rho > RHO_SERIES => p.eval(rho.min(self.rho_star), q as usize),
            _ => self.series[q as usize].eval(rho),
        }
    }

    pub fn at_rho(&self, q: Q, rho: f64) -> f64 {
        let scale = if q.singular() { self.d0 } else { self.c0 };
        scale * self.raw(q, rho)
    }

    pub fn at_nu(&self, q: Q, nu: f64) -> Result<f64> {
        Ok(self.at_rho(q, chart::rho_of_nu(nu)?))
    }

    /// Leading Laurent coefficient of `q` at the vacuum, as a power of `rho`.
    pub fn vacuum_leading(&self, q: Q) -> (i32, f64) {
        let j = &self.series[q as usize];
        let scale = if q.singular() { self.d0 } else { self.c0 };
        let big = j.c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (i, x) in j.c.iter().enumerate() {
            if x.abs() > 1e-12 * big {
                return (j.v + i as i32, scale * x);
            }
        }
        (j.order(), 0.0)
    }

    /// Coefficient of `rho^p` in the vacuum expansion of `q`.
    pub fn vacuum_coeff(&self, q: Q, p: i32) -> f64 {
        let scale = if q.singular() { self.d0 } else { self.c0 };
        scale * self.series[q as usize].coeff(p)
    }

    /// Forcing amplitude of the remainder equation: `ell` or `ell2`.
    pub fn forcing(&self, kind: KernelKind, rho: f64) -> f64 {
        match kind {
            KernelKind::Regular => self.at_rho(Q::Ell, rho),
            KernelKind::Singular => self.at_rho(Q::Ell2, rho),
        }
    }

    pub fn panel_count(&self) -> usize {
        self.panels.as_ref().map_or(0, |p| p.panels.len())
    }
}

/// Sampled coefficient table on a `nu` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub nu_grid: Vec<f64>,
    pub c0: f64,
    pub d0: f64,
    pub alpha0: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub ell: Vec<f64>,
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub ell1: Vec<f64>,
    pub ell2: Vec<f64>,
}

impl CoefficientTable {
    pub fn sample(model: &CoefficientModel, nu_grid: &[f64]) -> Result<Self> {
        let rhos = nu_grid
            .iter()
            .map(|&nu| chart::rho_of_nu(nu))
            .collect::<Result<Vec<_>>>()?;
        let col = |q: Q| rhos.iter().map(|&r| model.at_rho(q, r)).collect::<Vec<_>>();
        Ok(Self {
            nu_grid: nu_grid.to_vec(),
            c0: model.c0,
            d0: model.d0,
            alpha0: col(Q::Alpha0),
            alpha1: col(Q::Alpha1),
            ell: col(Q::Ell),
            beta0: col(Q::Beta0),
            beta1: col(Q::Beta1),
            beta2: col(Q::Beta2),
            ell1: col(Q::Ell1),
            ell2: col(Q::Ell2),
        })
    }
}

pub fn build_regular_coeffs(nu_star: f64, nu_grid: &[f64]) -> Result<CoefficientTable> {
    CoefficientTable::sample(&CoefficientModel::new(nu_star)?, nu_grid)
}

pub fn build_singular_coeffs(nu_star: f64, nu_grid: &[f64]) -> Result<CoefficientTable> {
    build_regular_coeffs(nu_star, nu_grid)
}
