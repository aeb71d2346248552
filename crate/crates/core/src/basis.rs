//! Compactly supported distributions `G_l(nu, s)` and the rescaled Fourier
//! transforms `fhat_l` for `l in {-3, ..., 2}`, with exact first and second
//! derivatives and the recurrence checks.

use std::sync::OnceLock;

use serde::Serialize;

use crate::chart;
use crate::error::{CavError, Result};

/// Below this `|xi|` the orders 0, 1, 2 use their Taylor series.
pub const SERIES_RADIUS: f64 = 2.0;
const SERIES_TERMS: usize = 20;

/// One of the six representable orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BasisIndex(i8);

impl BasisIndex {
    pub const ALL: [BasisIndex; 6] = [
        BasisIndex(-3),
        BasisIndex(-2),
        BasisIndex(-1),
        BasisIndex(0),
        BasisIndex(1),
        BasisIndex(2),
    ];

    pub fn new(lambda: i32) -> Result<Self> {
        if (-3..=2).contains(&lambda) {
            Ok(Self(lambda as i8))
        } else {
            Err(CavError::Domain {
                what: "lambda",
                value: lambda as f64,
                range: "{-3, ..., 2}",
            })
        }
    }

    pub fn get(self) -> i32 {
        self.0 as i32
    }

    /// Compile-time constructor; panics outside `-3..=2`.
    pub const fn of(lambda: i8) -> Self {
        assert!(lambda >= -3 && lambda <= 2);
        Self(lambda)
    }
}

/// Value of `fhat_l` with a note on which branch produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierBasisEval {
    pub lambda: BasisIndex,
    pub value: f64,
    /// True when the removable singularity at zero was handled by the series.
    pub valid_at_zero: bool,
}

/// Value, first and second derivative.
pub type Jet2 = [f64; 3];

/// Taylor coefficients `a_m` of `fhat_n(z) = sum a_m z^{2m}` for `n = 0, 1, 2`.
fn series_coeffs() -> &'static [[f64; SERIES_TERMS]; 3] {
    static C: OnceLock<[[f64; SERIES_TERMS]; 3]> = OnceLock::new();
    C.get_or_init(|| {
        let mut out = [[0.0; SERIES_TERMS]; 3];
        for (n, row) in out.iter_mut().enumerate() {
            let mut fact2m = 1.0;
            for (m, a) in row.iter_mut().enumerate() {
                if m > 0 {
                    fact2m *= (2 * m - 1) as f64 * (2 * m) as f64;
                }
                // int_{-1}^{1} s^{2m} (1 - s^2)^n ds = 2^{n+1} n! / prod_{j=0}^{n} (2m + 2j + 1)
                let mut moment = 2.0;
                for j in 0..=n {
                    moment /= (2 * m + 2 * j + 1) as f64;
                    if j > 0 {
                        moment *= 2.0 * j as f64;
                    }
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                *a = sign * moment / fact2m;
            }
        }
        out
    })
}

fn series_jet(n: usize, z: f64) -> Jet2 {
    let a = &series_coeffs()[n];
    let z2 = z * z;
    let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for m in (0..SERIES_TERMS).rev() {
        let mm = m as f64;
        f = f * z2 + a[m];
        if m >= 1 {
            d1 = d1 * z2 + 2.0 * mm * a[m];
            d2 = d2 * z2 + 2.0 * mm * (2.0 * mm - 1.0) * a[m];
        }
    }
    [f, d1 * z, d2]
}

/// `fhat_l` and its two derivatives at `z`.
pub fn fhat_jet(l: BasisIndex, z: f64) -> Jet2 {
    let lam = l.get();
    if lam >= 0 && z.abs() < SERIES_RADIUS {
        return series_jet(lam as usize, z);
    }
    let (s, c) = z.sin_cos();
    match lam {
        -1 => [c, -s, -c],
        -2 => [0.5 * (z * s + c), 0.5 * z * c, 0.5 * (c - z * s)],
        -3 => {
            let z2 = z * z;
            [
                (3.0 * c + 3.0 * z * s - z2 * c) / 8.0,
                (z * c + z2 * s) / 8.0,
                (c + z * s + z2 * c) / 8.0,
            ]
        }
        0 => {
            let z2 = z * z;
            [
                2.0 * s / z,
                2.0 * (z * c - s) / z2,
                2.0 * (2.0 * s - 2.0 * z * c - z2 * s) / (z2 * z),
            ]
        }
        1 => {
            let z2 = z * z;
            let n = s - z * c;
            let a = z2 * s - 3.0 * n;
            let ap = z2 * c - z * s;
            [
                4.0 * n / (z2 * z),
                4.0 * a / (z2 * z2),
                4.0 * (z * ap - 4.0 * a) / (z2 * z2 * z),
            ]
        }
        2 => {
            let z2 = z * z;
            let b = 3.0 * s - 3.0 * z * c - z2 * s;
            let bp = z * s - z2 * c;
            let bpp = s - z * c + z2 * s;
            let cc = z * bp - 5.0 * b;
            let ccp = z * bpp - 4.0 * bp;
            let z5 = z2 * z2 * z;
            [16.0 * b / z5, 16.0 * cc / (z5 * z), 16.0 * (z * ccp - 6.0 * cc) / (z5 * z2)]
        }
        _ => unreachable!("BasisIndex is validated"),
    }
}

pub fn fhat(l: BasisIndex, z: f64) -> f64 {
    fhat_jet(l, z)[0]
}

pub fn fhat_prime(l: BasisIndex, z: f64) -> f64 {
    fhat_jet(l, z)[1]
}

pub fn fhat_second(l: BasisIndex, z: f64) -> f64 {
    fhat_jet(l, z)[2]
}

pub fn eval(l: BasisIndex, z: f64) -> FourierBasisEval {
    FourierBasisEval {
        lambda: l,
        value: fhat(l, z),
        valid_at_zero: l.get() >= 0 && z.abs() < SERIES_RADIUS,
    }
}

/// `Ghat_n(nu, xi) = k^{1+2n} fhat_n(xi k)` given `k = k(nu)`.
pub fn ghat_k(l: BasisIndex, k: f64, xi: f64) -> f64 {
    k.powi(1 + 2 * l.get()) * fhat(l, xi * k)
}

pub fn ghat(l: BasisIndex, nu: f64, xi: f64) -> Result<f64> {
    Ok(ghat_k(l, chart::k_of_nu(nu)?, xi))
}

/// `[k^2 - s^2]_+^l` for `l in {0, 1, 2}`.
pub fn g_physical_k(l: BasisIndex, k: f64, s: f64) -> Result<f64> {
    let lam = l.get();
    if lam < 0 {
        return Err(CavError::Domain {
            what: "lambda",
            value: lam as f64,
            range: "{0, 1, 2} in physical space",
        });
    }
    let d = k * k - s * s;
    if d <= 0.0 {
        return Ok(0.0);
    }
    Ok(d.powi(lam))
}

pub fn g_physical(l: BasisIndex, nu: f64, s: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(CavError::Domain {
            what: "nu",
            value: nu,
            range: "(0, nu_*]",
        });
    }
    g_physical_k(l, chart::k_of_nu(nu)?, s)
}

/// Largest defect of one named relation.
#[derive(Debug, Clone, Serialize)]
pub struct RelationDefect {
    pub name: String,
    pub max_defect: f64,
    pub worst_xi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub tolerance: f64,
    pub relations: Vec<RelationDefect>,
    pub pass: bool,
}

impl RecurrenceReport {
    pub fn failures(&self) -> Vec<&RelationDefect> {
        self.relations
            .iter()
            .filter(|r| !(r.max_defect <= self.tolerance))
            .collect()
    }
}

type Relation = (&'static str, fn(f64) -> f64);

fn j(l: i32, z: f64) -> Jet2 {
    fhat_jet(BasisIndex(l as i8), z)
}

fn relations() -> Vec<Relation> {
    vec![
        ("f0'' + f0 = f1", |z| j(0, z)[2] + j(0, z)[0] - j(1, z)[0]),
        ("f1'' + f1 = f2", |z| j(1, z)[2] + j(1, z)[0] - j(2, z)[0]),
        ("f1 = -(2/z) f0'", |z| j(1, z)[0] + 2.0 / z * j(0, z)[1]),
        ("f2 = -(4/z) f1'", |z| j(2, z)[0] + 4.0 / z * j(1, z)[1]),
        ("f1' = -(3/z) f1 + (2/z) f0", |z| {
            j(1, z)[1] + 3.0 / z * j(1, z)[0] - 2.0 / z * j(0, z)[0]
        }),
        ("f2' = -(5/z) f2 + (4/z) f1", |z| {
            j(2, z)[1] + 5.0 / z * j(2, z)[0] - 4.0 / z * j(1, z)[0]
        }),
        ("f-1'' + f-1 = 0", |z| j(-1, z)[2] + j(-1, z)[0]),
        ("f-2'' + f-2 = f-1", |z| j(-2, z)[2] + j(-2, z)[0] - j(-1, z)[0]),
        ("f-3'' + f-3 = f-2", |z| j(-3, z)[2] + j(-3, z)[0] - j(-2, z)[0]),
        ("f-1 = (2/z) f-2'", |z| j(-1, z)[0] - 2.0 / z * j(-2, z)[1]),
        ("f-2 = (4/z) f-3'", |z| j(-2, z)[0] - 4.0 / z * j(-3, z)[1]),
        ("f-1' = -(z/2) f0", |z| j(-1, z)[1] + 0.5 * z * j(0, z)[0]),
        ("f0' = -(1/z) f0 + (2/z) f-1", |z| {
            j(0, z)[1] + j(0, z)[0] / z - 2.0 / z * j(-1, z)[0]
        }),
        ("f-1' = (1/z) f-1 - (2/z) f-2", |z| {
            j(-1, z)[1] - j(-1, z)[0] / z + 2.0 / z * j(-2, z)[0]
        }),
        ("f-2' = (3/z) f-2 - (4/z) f-3", |z| {
            j(-2, z)[1] - 3.0 / z * j(-2, z)[0] + 4.0 / z * j(-3, z)[0]
        }),
        ("d2 G1 = -2 G0 + 4k^2 G-1", |z| {
            -z * z * j(1, z)[0] + 2.0 * j(0, z)[0] - 4.0 * j(-1, z)[0]
        }),
        ("d2 G0 = 2 G-1 - 4k^2 G-2", |z| {
            -z * z * j(0, z)[0] - 2.0 * j(-1, z)[0] + 4.0 * j(-2, z)[0]
        }),
        ("d2 G-1 = -6 G-2 + 8k^2 G-3", |z| {
            -z * z * j(-1, z)[0] + 6.0 * j(-2, z)[0] - 8.0 * j(-3, z)[0]
        }),
        ("d G0 = -2 s G-1", |z| z * j(0, z)[0] + 2.0 * j(-1, z)[1]),
        ("d G1 = -2 s G0", |z| z * j(1, z)[0] + 2.0 * j(0, z)[1]),
        ("d G-1 = 2 s G-2", |z| z * j(-1, z)[0] - 2.0 * j(-2, z)[1]),
        ("d G-2 = 4 s G-3", |z| z * j(-2, z)[0] - 4.0 * j(-3, z)[1]),
    ]
}

/// Evaluates every relation on the grid (zero is skipped for relations
/// with a `1/z`). Defects are absolute.
pub fn check_recurrences(xi_grid: &[f64], tolerance: f64) -> RecurrenceReport {
    let mut out = Vec::new();
    for (name, rel) in relations() {
        let mut worst = (0.0f64, f64::NAN);
        for &xi in xi_grid {
            if xi == 0.0 {
                continue;
            }
            let d = rel(xi).abs();
            if !(d <= worst.0) {
                worst = (d, xi);
            }
        }
        out.push(RelationDefect {
            name: name.to_string(),
            max_defect: worst.0,
            worst_xi: worst.1,
        });
    }
    let pass = out.iter().all(|r| r.max_defect <= tolerance);
    RecurrenceReport {
        tolerance,
        relations: out,
        pass,
    }
}

/// Growth or decay class of `fhat_l`: `(1+|xi|)^{-3}, ^{-2}, ^{-1}`, `1`,
/// `1+xi^2` and `(1+xi^2)(1+|xi|)` for `l = 2, ..., -3`.
pub fn envelope_weight(l: BasisIndex, xi: f64) -> f64 {
    let a = 1.0 + xi.abs();
    match l.get() {
        2 => a.powi(-3),
        1 => a.powi(-2),
        0 => 1.0 / a,
        -1 => 1.0,
        -2 => 1.0 + xi * xi,
        _ => (1.0 + xi * xi) * a,
    }
}

/// Smallest `C` with `|fhat_l| <= C * envelope_weight` on `n` uniform points
/// of `[0, xi_max]`.
pub fn envelope_constant(l: BasisIndex, xi_max: f64, n: usize) -> f64 {
    (0..n)
        .map(|i| xi_max * i as f64 / (n.max(2) - 1) as f64)
        .map(|xi| fhat(l, xi).abs() / envelope_weight(l, xi))
        .fold(0.0, f64::max)
}
