//! Quantitative checks on viscous solutions: invariant regions, the
//! dissipation integral, entropy dissipation against interior bump
//! functions, the D1 + D2 compactness split, obstacle traces and sweep
//! convergence indicators.

use serde::{Deserialize, Serialize};

use crate::chart::{self, StatePolar};
use crate::entropy::{loewner_morawetz, special_pair, Generator, GenJet, SpecialGenerator};
use crate::error::{CavError, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::solver::{l2_difference, Solution, SolverConfig};

/// `1 - c^2/q^2` with `c = rho`, `q^2 = 1 - rho^2`.
pub fn degeneracy(rho: f64) -> f64 {
    (1.0 - 2.0 * rho * rho) / (1.0 - rho * rho)
}

/// Smooth bump `exp(1 - 1/(1 - r^2/w^2))`, supported in `|x - c| < w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
}

impl Bump {
    pub fn value(&self, p: [f64; 2]) -> f64 {
        let s = self.s(p);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }

    pub fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        let s = self.s(p);
        if s >= 1.0 {
            return [0.0; 2];
        }
        let f = -(1.0 - 1.0 / (1.0 - s)).exp() / ((1.0 - s) * (1.0 - s)) * 2.0 / (self.width * self.width);
        [f * (p[0] - self.center[0]), f * (p[1] - self.center[1])]
    }

    fn s(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        (dx * dx + dy * dy) / (self.width * self.width)
    }

    fn touches(&self, a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
        let lo = [a[0].min(b[0]).min(c[0]), a[1].min(b[1]).min(c[1])];
        let hi = [a[0].max(b[0]).max(c[0]), a[1].max(b[1]).max(c[1])];
        let w = self.width;
        hi[0] > self.center[0] - w && lo[0] < self.center[0] + w && hi[1] > self.center[1] - w && lo[1] < self.center[1] + w
    }
}

/// Nonnegative interior test functions on a regular lattice of centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionLattice {
    pub bumps: Vec<Bump>,
}

pub const LATTICE_NX: usize = 5;
pub const LATTICE_NY: usize = 3;

impl TestFunctionLattice {
    /// `nx x ny` centers evenly inside the box; supports must avoid the
    /// walls and the obstacle.
    pub fn new(mesh: &Mesh, nx: usize, ny: usize, width: f64) -> Result<Self> {
        let s = &mesh.spec;
        let mut bumps = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = [
                    -s.half_length + 2.0 * s.half_length * (i + 1) as f64 / (nx + 1) as f64,
                    s.height * (j + 1) as f64 / (ny + 1) as f64,
                ];
                let inside = c[0] - width > -s.half_length
                    && c[0] + width < s.half_length
                    && c[1] + width < s.height
                    && c[1] - width > s.bump_height;
                if !inside || !(width > 0.0) {
                    return Err(CavError::Config(format!(
                        "test function at ({:.3}, {:.3}) with width {width} leaves the interior",
                        c[0], c[1]
                    )));
                }
                bumps.push(Bump { center: c, width });
            }
        }
        Ok(Self { bumps })
    }

    /// Default `5 x 3` lattice with width `4 h_mesh`, narrowed on coarse
    /// meshes to 95% of the largest width that fits.
    pub fn default_for(mesh: &Mesh) -> Result<Self> {
        let s = &mesh.spec;
        let fit = (2.0 * s.half_length / (LATTICE_NX + 1) as f64)
            .min(s.height / (LATTICE_NY + 1) as f64 - s.bump_height.max(0.0));
        let w = 4.0 * s.h_mesh;
        Self::new(mesh, LATTICE_NX, LATTICE_NY, if w < fit { w } else { 0.95 * fit })
    }

    /// Bumps centred on the obstacle arc whose supports stay clear of the
    /// far-field boundary.
    pub fn obstacle(mesh: &Mesh, n: usize) -> Vec<Bump> {
        let s = &mesh.spec;
        if s.bump_height <= 0.0 || n == 0 {
            return Vec::new();
        }
        let half = 0.5 * s.chord;
        (0..n)
            .map(|i| {
                let x = -0.6 * half + 1.2 * half * i as f64 / (n.max(2) - 1) as f64;
                let x = if n == 1 { 0.0 } else { x };
                Bump {
                    center: [x, s.bump(x)],
                    width: (0.9 * half - x.abs()).min(4.0 * s.h_mesh),
                }
            })
            .collect()
    }
}

/// Edge-midpoint quadrature of `int G dx` against the P1 interpolant of
/// `bump`; `g(t, lambda, psi, grad psi)` with barycentric weights `lambda`.
/// Only triangles meeting the support are visited.
fn integrate_on(mesh: &Mesh, bump: &Bump, mut g: impl FnMut(usize, [f64; 3], f64, [f64; 2]) -> f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        if !bump.touches(a, b, c) {
            continue;
        }
        let psi = [bump.value(a), bump.value(b), bump.value(c)];
        if psi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let gr = &mesh.grads[t];
        let gpsi = [
            psi[0] * gr[0][0] + psi[1] * gr[1][0] + psi[2] * gr[2][0],
            psi[0] * gr[0][1] + psi[1] * gr[1][1] + psi[2] * gr[2][1],
        ];
        let mut s = 0.0;
        for lam in [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]] {
            let v = lam[0] * psi[0] + lam[1] * psi[1] + lam[2] * psi[2];
            s += g(t, lam, v, gpsi);
        }
        total += s * mesh.areas[t] / 3.0;
    }
    total
}

fn interp(tri: &[usize; 3], lam: [f64; 3], f: &[f64]) -> f64 {
    lam[0] * f[tri[0]] + lam[1] * f[tri[1]] + lam[2] * f[tri[2]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// P1 gradients of `rho` and `theta` on triangle `t`.
fn grads(mesh: &Mesh, sol: &Solution, t: usize) -> ([f64; 2], [f64; 2]) {
    let tri = mesh.triangles[t];
    let g = &mesh.grads[t];
    let (mut gr, mut gt) = ([0.0; 2], [0.0; 2]);
    for i in 0..3 {
        for d in 0..2 {
            gr[d] += sol.rho[tri[i]] * g[i][d];
            gt[d] += sol.theta[tri[i]] * g[i][d];
        }
    }
    (gr, gt)
}

fn centroid_state(mesh: &Mesh, sol: &Solution, t: usize) -> (f64, f64) {
    let [a, b, c] = mesh.triangles[t];
    ((sol.rho[a] + sol.rho[b] + sol.rho[c]) / 3.0, (sol.theta[a] + sol.theta[b] + sol.theta[c]) / 3.0)
}

/// `|grad theta|^2 + (1 - c^2/q^2) q^-2 |grad rho|^2`.
fn dissipation_density(rho: f64, gr: [f64; 2], gt: [f64; 2]) -> f64 {
    let q2 = 1.0 - rho * rho;
    dot(gt, gt) + degeneracy(rho) / q2 * dot(gr, gr)
}

/// `eps int (|grad theta|^2 + (1 - c^2/q^2) q^-2 |grad rho|^2)`, one-point
/// rule per triangle with the coefficient at the centroid.
pub fn dissipation_integral(mesh: &Mesh, sol: &Solution) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.triangles.len() {
        let (rho, _) = centroid_state(mesh, sol, t);
        let (gr, gt) = grads(mesh, sol, t);
        s += mesh.areas[t] * dissipation_density(rho, gr, gt);
    }
    sol.epsilon * s
}

/// `int F . grad psi` for the inviscid mass flux `rho q e(theta)` and the
/// curl flux `q (sin theta, -cos theta)`, per test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResiduals {
    pub mass: Vec<f64>,
    pub curl: Vec<f64>,
}

impl WeakResiduals {
    pub fn max_mass(&self) -> f64 {
        self.mass.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_curl(&self) -> f64 {
        self.curl.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn weak_residuals(mesh: &Mesh, sol: &Solution, lattice: &TestFunctionLattice) -> WeakResiduals {
    let mut mass = Vec::with_capacity(lattice.bumps.len());
    let mut curl = Vec::with_capacity(lattice.bumps.len());
    for b in &lattice.bumps {
        let mut c = 0.0;
        let m = integrate_on(mesh, b, |t, lam, _, g| {
            let tri = &mesh.triangles[t];
            let rho = interp(tri, lam, &sol.rho);
            let th = interp(tri, lam, &sol.theta);
            let q = chart::q_clipped(rho);
            let (sn, cs) = th.sin_cos();
            c += dot([q * sn, -q * cs], g) * mesh.areas[t] / 3.0;
            rho * q * dot([cs, sn], g)
        });
        mass.push(m);
        curl.push(c);
    }
    WeakResiduals { mass, curl }
}

/// Entropy pair used for dissipation measures.
#[derive(Clone, Copy)]
pub enum Pair<'a> {
    Special(&'a SpecialGenerator),
    Generated(&'a dyn Generator),
}

impl Pair<'_> {
    pub fn flux(&self, state: StatePolar) -> Result<(f64, f64)> {
        match self {
            Pair::Special(g) => special_pair(g, state),
            Pair::Generated(g) => loewner_morawetz(*g, state),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Pair::Special(_) => "special".into(),
            Pair::Generated(g) => g.name(),
        }
    }
}

fn nodal_flux(sol: &Solution, pair: Pair) -> Result<Vec<[f64; 2]>> {
    sol.rho
        .iter()
        .zip(&sol.theta)
        .enumerate()
        .map(|(v, (&r, &t))| {
            pair.flux(StatePolar::new(r, t))
                .map(|(a, b)| [a, b])
                .map_err(|e| CavError::Config(format!("entropy pair at node {v}: {e}")))
        })
        .collect()
}

/// `d_psi = int Q(u) . grad psi` for each test function; `div Q >= 0` in
/// distributions means `d_psi <= 0`.
pub fn entropy_dissipation(mesh: &Mesh, sol: &Solution, pair: Pair, lattice: &TestFunctionLattice) -> Result<Vec<f64>> {
    let q = nodal_flux(sol, pair)?;
    Ok(lattice
        .bumps
        .iter()
        .map(|b| {
            integrate_on(mesh, b, |t, lam, _, g| {
                let tri = mesh.triangles[t];
                let mut f = [0.0; 2];
                for i in 0..3 {
                    f[0] += lam[i] * q[tri[i]][0];
                    f[1] += lam[i] * q[tri[i]][1];
                }
                dot(f, g)
            })
        })
        .collect())
}

/// Both sides of the viscous identity for `Q_*` against each test function:
/// `<div Q_*, psi>` and
/// `eps <div(-theta grad theta + (1 - c^2/q^2) N grad rho), psi> + eps <diss, psi>`.
pub fn special_identity(
    mesh: &Mesh,
    sol: &Solution,
    gen: &SpecialGenerator,
    lattice: &TestFunctionLattice,
) -> Result<Vec<(f64, f64)>> {
    let d = entropy_dissipation(mesh, sol, Pair::Special(gen), lattice)?;
    let eps = sol.epsilon;
    Ok(lattice
        .bumps
        .iter()
        .zip(d)
        .map(|(b, dpsi)| {
            let rhs = integrate_on(mesh, b, |t, lam, psi, g| {
                let tri = &mesh.triangles[t];
                let (gr, gt) = grads(mesh, sol, t);
                let rho = interp(tri, lam, &sol.rho);
                let th = interp(tri, lam, &sol.theta);
                let a = degeneracy(rho) * gen.n(rho);
                let v = [-th * gt[0] + a * gr[0], -th * gt[1] + a * gr[1]];
                eps * (-dot(v, g) + dissipation_density(rho, gr, gt) * psi)
            });
            (-dpsi, rhs)
        })
        .collect())
}

/// `(D1 estimate, ||D2||_L1)` from the generator's derivative combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d1: f64,
    pub d2_l1: f64,
}

pub fn compactness_decomposition(mesh: &Mesh, sol: &Solution, gen: &dyn Generator) -> Result<Decomposition> {
    let eps = sol.epsilon;
    let (mut d1, mut d2) = (0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        let (rho, th) = centroid_state(mesh, sol, t);
        let nu = chart::nu_of_rho(rho)?;
        let j: GenJet = gen.jet(nu, th)?;
        let (gr, gt) = grads(mesh, sol, t);
        let a = degeneracy(rho);
        let c1 = rho * j.h_nuth - j.h_th;
        let c2 = a * (j.rho_h_nu + j.h_thth) / rho;
        let v = [gt[0] * c1 + gr[0] * c2, gt[1] * c1 + gr[1] * c2];
        d1 += mesh.areas[t] * dot(v, v);
        let integrand = (rho * j.h_nuthth - j.h_thth) * dissipation_density(rho, gr, gt)
            + (j.h_ththth + rho * j.h_nuth) * 2.0 / rho * a * dot(gt, gr);
        d2 += mesh.areas[t] * integrand.abs();
    }
    Ok(Decomposition {
        d1: eps * d1.sqrt(),
        d2_l1: eps * d2,
    })
}

/// Margins of the invariant regions; each must exceed `-tol_inv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantMargins {
    /// `min q - q_inf`.
    pub speed: f64,
    /// `k(q_inf) - max |theta|`.
    pub angle: f64,
    pub min_rho: f64,
    /// `k(q_inf) - max W_+`.
    pub w_plus: f64,
    /// `min W_- + k(q_inf)`.
    pub w_minus: f64,
    pub tol_inv: f64,
    pub ok: bool,
}

pub fn invariant_region_report(sol: &Solution, cfg: &SolverConfig) -> InvariantMargins {
    let k_inf = cfg.k_inf();
    let tol = cfg.tol_inv();
    let max_wp = sol.w_plus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_wm = sol.w_minus.iter().copied().fold(f64::INFINITY, f64::min);
    let m = InvariantMargins {
        speed: sol.min_q() - cfg.q_inf,
        angle: k_inf - sol.max_abs_theta(),
        min_rho: sol.min_rho(),
        w_plus: k_inf - max_wp,
        w_minus: min_wm + k_inf,
        tol_inv: tol,
        ok: false,
    };
    InvariantMargins {
        ok: m.speed > -tol && m.angle > -tol && m.min_rho > 0.0 && m.w_plus > -tol && m.w_minus > -tol,
        ..m
    }
}

/// Weak normal trace `-int rho q e(theta) . grad phi` for bumps on the
/// obstacle; equals `int phi rho q e . n` when the mass flux is solenoidal.
pub fn obstacle_trace(mesh: &Mesh, sol: &Solution, bumps: &[Bump]) -> Vec<f64> {
    bumps
        .iter()
        .map(|b| {
            -integrate_on(mesh, b, |t, lam, _, g| {
                let tri = &mesh.triangles[t];
                let rho = interp(tri, lam, &sol.rho);
                let th = interp(tri, lam, &sol.theta);
                let q = chart::q_clipped(rho);
                rho * q * dot([th.cos(), th.sin()], g)
            })
        })
        .collect()
}

/// Pointwise boundary integral `int_{obstacle} phi rho q e(theta) . n`.
pub fn obstacle_flux(mesh: &Mesh, sol: &Solution, bump: &Bump) -> f64 {
    mesh.boundary_edges
        .iter()
        .filter(|e| e.tag == BoundaryTag::Obstacle)
        .map(|e| {
            let (a, b) = (e.v[0], e.v[1]);
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let f = |v: usize, p: [f64; 2]| {
                let q = chart::q_clipped(sol.rho[v]);
                bump.value(p) * sol.rho[v] * q * dot([sol.theta[v].cos(), sol.theta[v].sin()], e.normal)
            };
            0.5 * e.length * (f(a, pa) + f(b, pb))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    pub epsilons: Vec<f64>,
    /// `||(rho, theta)_i - (rho, theta)_{i+1}||_L2`.
    pub differences: Vec<f64>,
    pub monotone: bool,
}

pub fn cauchy_convergence(mesh: &Mesh, sols: &[Solution]) -> CauchyTable {
    let differences: Vec<f64> = sols
        .windows(2)
        .map(|w| l2_difference(mesh, &w[0].rho, &w[1].rho).hypot(l2_difference(mesh, &w[0].theta, &w[1].theta)))
        .collect();
    CauchyTable {
        epsilons: sols.iter().map(|s| s.epsilon).collect(),
        monotone: differences.windows(2).all(|w| w[1] <= w[0]),
        differences,
    }
}

/// Least-squares fit `d ~ C sqrt(eps)` and the worst relative excess over
/// the fitted envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtFit {
    pub c: f64,
    pub max_violation: f64,
}

pub const ENVELOPE_SLACK: f64 = 0.25;

impl SqrtFit {
    pub fn new(eps: &[f64], d: &[f64]) -> Self {
        let d: Vec<f64> = d.iter().map(|&v| denoise(v)).collect();
        let num: f64 = eps.iter().zip(&d).map(|(e, v)| v * e.sqrt()).sum();
        let den: f64 = eps.iter().sum();
        let c = num / den;
        let max_violation = eps
            .iter()
            .zip(&d)
            .map(|(e, &v)| {
                let env = c * e.sqrt();
                if env > 0.0 {
                    (v - env) / env
                } else if v > 0.0 {
                    f64::MAX
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        Self { c, max_violation }
    }

    pub fn ok(&self) -> bool {
        self.max_violation <= ENVELOPE_SLACK
    }
}

/// Values at or below this are roundoff in fits and sweep ratios.
pub const NOISE_FLOOR: f64 = 1e-12;

fn denoise(v: f64) -> f64 {
    if v > NOISE_FLOOR {
        v
    } else {
        0.0
    }
}

/// Ratio `max / min` of a positive series; `1` when everything is below
/// the noise floor.
pub fn sweep_ratio(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(0.0, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= NOISE_FLOOR {
        1.0
    } else if min <= 0.0 {
        f64::MAX
    } else {
        max / min
    }
}

/// Upper bound used for "bounded across the sweep" ratios.
pub const SWEEP_RATIO_MAX: f64 = 3.0;
/// Tolerance of the obstacle weak-trace inequality.
pub const TRACE_TOL: f64 = 1e-6;
/// Number of obstacle test functions.
pub const OBSTACLE_BUMPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDefects {
    pub pair: String,
    pub defects: Vec<f64>,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDecomposition {
    pub generator: String,
    pub d1: f64,
    pub d2_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRecord {
    pub epsilon: f64,
    pub iterations: usize,
    pub final_update: f64,
    pub final_residual: f64,
    pub projections: usize,
    pub vacuum_clips: usize,
    pub min_q: f64,
    pub max_abs_theta: f64,
    pub margins: InvariantMargins,
    pub dissipation: f64,
    pub mass_residual: f64,
    pub curl_residual: f64,
    pub residuals: WeakResiduals,
    pub entropy: Vec<PairDefects>,
    /// `max |lhs - rhs|` of the special-pair identity and `max |lhs|`.
    pub identity_mismatch: f64,
    pub identity_scale: f64,
    pub decomposition: Vec<NamedDecomposition>,
    /// Weak normal traces on the obstacle bumps and their minimum.
    pub obstacle_trace: Vec<f64>,
    pub obstacle_trace_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: SqrtFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scheme: String,
    pub q_inf: f64,
    pub h_mesh: f64,
    pub bump_height: f64,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub threads: usize,
    pub lattice: TestFunctionLattice,
    pub obstacle_bumps: Vec<Bump>,
    pub records: Vec<EpsRecord>,
    pub cauchy: CauchyTable,
    pub fits: Vec<NamedFit>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl RunReport {
    /// Evaluates every diagnostic on a sweep. The special pair is always
    /// included; `extra` adds generated pairs.
    pub fn build(mesh: &Mesh, cfg: &SolverConfig, sols: &[Solution], extra: &[&dyn Generator]) -> Result<Self> {
        let lattice = TestFunctionLattice::default_for(mesh)?;
        let obstacle_bumps = TestFunctionLattice::obstacle(mesh, OBSTACLE_BUMPS);
        let special = SpecialGenerator::from_q_inf(cfg.q_inf)?;
        let mut records = Vec::with_capacity(sols.len());
        for s in sols {
            let residuals = weak_residuals(mesh, s, &lattice);
            let mut pairs = vec![Pair::Special(&special)];
            pairs.extend(extra.iter().map(|g| Pair::Generated(*g)));
            let entropy = pairs
                .iter()
                .map(|p| {
                    let defects = entropy_dissipation(mesh, s, *p, &lattice)?;
                    let max = defects.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    Ok(PairDefects {
                        pair: p.name(),
                        defects,
                        max,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let id = special_identity(mesh, s, &special, &lattice)?;
            let mut gens: Vec<&dyn Generator> = vec![&special];
            gens.extend_from_slice(extra);
            let decomposition = gens
                .iter()
                .map(|g| {
                    let d = compactness_decomposition(mesh, s, *g)?;
                    Ok(NamedDecomposition {
                        generator: g.name(),
                        d1: d.d1,
                        d2_l1: d.d2_l1,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let obstacle_trace = obstacle_trace(mesh, s, &obstacle_bumps);
            let last = s.history.last().copied();
            records.push(EpsRecord {
                epsilon: s.epsilon,
                iterations: s.history.len(),
                final_update: last.map_or(0.0, |r| r.update),
                final_residual: last.map_or(0.0, |r| r.residual),
                projections: s.projections,
                vacuum_clips: s.vacuum_clips,
                min_q: s.min_q(),
                max_abs_theta: s.max_abs_theta(),
                margins: invariant_region_report(s, cfg),
                dissipation: dissipation_integral(mesh, s),
                mass_residual: residuals.max_mass(),
                curl_residual: residuals.max_curl(),
                residuals,
                entropy,
                identity_mismatch: id.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
                identity_scale: id.iter().map(|(a, _)| a.abs()).fold(0.0, f64::max),
                decomposition,
                obstacle_trace_min: obstacle_trace.iter().copied().fold(0.0, f64::min),
                obstacle_trace,
            });
        }
        let eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
        let col = |f: &dyn Fn(&EpsRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
        let mut fits = vec![
            NamedFit {
                name: "mass_residual".into(),
                fit: SqrtFit::new(&eps, &col(&|r| r.mass_residual)),
            },
            NamedFit {
                name: "curl_residual".into(),
                fit: SqrtFit::new(&eps, &col(&|r| r.curl_residual)),
            },
        ];
        let n_pairs = records.first().map_or(0, |r| r.entropy.len());
        for k in 0..n_pairs {
            fits.push(NamedFit {
                name: format!("entropy_defect:{}", records[0].entropy[k].pair),
                fit: SqrtFit::new(&eps, &col(&|r| r.entropy[k].max)),
            });
        }

        let mut checks = vec![
            Check::at_least(
                "invariant_regions",
                col(&|r| r.margins.speed.min(r.margins.angle)).into_iter().fold(f64::INFINITY, f64::min),
                -cfg.tol_inv(),
            ),
            Check::at_least("min_rho", col(&|r| r.margins.min_rho).into_iter().fold(f64::INFINITY, f64::min), 0.0),
            Check::at_least(
                "riemann_extremes",
                col(&|r| r.margins.w_plus.min(r.margins.w_minus)).into_iter().fold(f64::INFINITY, f64::min),
                -cfg.tol_inv(),
            ),
            Check::at_most(
                "clipping_inactive",
                col(&|r| (r.projections + r.vacuum_clips) as f64).into_iter().fold(0.0, f64::max),
                0.0,
            ),
            Check::at_most("dissipation_ratio", sweep_ratio(&col(&|r| r.dissipation)), SWEEP_RATIO_MAX),
        ];
        for f in &fits {
            checks.push(Check::at_most(&format!("sqrt_eps:{}", f.name), f.fit.max_violation, ENVELOPE_SLACK));
        }
        for k in 0..records.first().map_or(0, |r| r.decomposition.len()) {
            let name = &records[0].decomposition[k].generator;
            checks.push(Check::at_most(
                &format!("d2_ratio:{name}"),
                sweep_ratio(&col(&|r| r.decomposition[k].d2_l1)),
                SWEEP_RATIO_MAX,
            ));
            checks.push(Check::at_most(
                &format!("d1_over_sqrt_eps_ratio:{name}"),
                sweep_ratio(&col(&|r| r.decomposition[k].d1 / r.epsilon.sqrt())),
                SWEEP_RATIO_MAX,
            ));
        }
        checks.push(Check::at_least(
            "obstacle_trace",
            col(&|r| r.obstacle_trace_min).into_iter().fold(0.0, f64::min),
            -TRACE_TOL,
        ));
        let cauchy = cauchy_convergence(mesh, sols);
        checks.push(Check::at_least("cauchy_monotone", if cauchy.monotone { 1.0 } else { 0.0 }, 1.0));
        let pass = checks.iter().all(|c| c.pass);
        Ok(Self {
            scheme: cfg.scheme.name().into(),
            q_inf: cfg.q_inf,
            h_mesh: mesh.spec.h_mesh,
            bump_height: mesh.spec.bump_height,
            n_vertices: mesh.n_vertices(),
            n_triangles: mesh.triangles.len(),
            threads: 1,
            lattice,
            obstacle_bumps,
            records,
            cauchy,
            fits,
            checks,
            pass,
        })
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
