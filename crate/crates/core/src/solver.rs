//! Damped Picard solver for the viscous approximate problems on the bump
//! channel, and the decreasing-viscosity sweep.
//!
//! Two linearizations are available. `Scheme::Poisson` solves two Poisson
//! problems for `(sigma, theta)` with right-hand sides from the current
//! iterate. `Scheme::Riemann` freezes the coefficients of the scalar
//! advection-diffusion equations satisfied by the Riemann invariants
//!
//! `b_pm . grad W_pm - eps Lap W_pm = -/+ eps 2 rho q^2 / m^3 |grad k|^2`,
//! `b_pm = q (e(theta) +/- (rho/m) e(theta + pi/2))`, `m = (q^2 - c^2)^{1/2}`,
//!
//! with `eps grad W_pm . n = +/- |rho q e(theta) . n| / m` on the obstacle,
//! and discretizes them with P1 elements plus discrete upwinding, which
//! gives an M-matrix and hence the discrete extremum principle.

use serde::{Deserialize, Serialize};

use crate::chart::{self, K_CR, RHO_CR};
use crate::error::{CavError, Result};
use crate::linalg::{SparsePattern, SparseSolver};
use crate::mesh::{BoundaryTag, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Riemann,
    Poisson,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "riemann" => Some(Self::Riemann),
            "poisson" => Some(Self::Poisson),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Riemann => "riemann",
            Self::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilons: Vec<f64>,
    pub q_inf: f64,
    pub omega: f64,
    pub picard_tol: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Invariant-region tolerance; `None` means `1e-3 k(q_inf)`.
    pub tol_inv: Option<f64>,
    pub scheme: Scheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            q_inf: 0.9,
            omega: 0.5,
            picard_tol: 1e-8,
            residual_tol: 1e-7,
            max_iters: 500,
            tol_inv: None,
            scheme: Scheme::Riemann,
        }
    }
}

/// Densities are projected below `rho_cr - RHO_GUARD`.
pub const RHO_GUARD: f64 = 1e-6;
/// Floor for `1 - c^2/q^2` in linear assembly.
pub const DEGENERATE_FLOOR: f64 = 1e-12;
const MIN_OMEGA: f64 = 1e-4;
/// `omega` is halved when the update has not halved over this many steps.
pub const STAGNATION_WINDOW: usize = 50;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_inf > chart::Q_CR && self.q_inf < chart::Q_CAV) {
            return Err(CavError::Domain {
                what: "q_inf",
                value: self.q_inf,
                range: "(q_cr, q_cav)",
            });
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(CavError::Domain {
                what: "omega",
                value: self.omega,
                range: "(0, 1]",
            });
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(CavError::Config("epsilons must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CavError::Config("epsilons must be strictly decreasing".into()));
        }
        if !(self.picard_tol > 0.0 && self.residual_tol > 0.0) || self.max_iters == 0 {
            return Err(CavError::Config("tolerances and max_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn rho_inf(&self) -> f64 {
        chart::rho_of_q(self.q_inf).expect("validated q_inf")
    }

    pub fn k_inf(&self) -> f64 {
        chart::k_of_q(self.q_inf).expect("validated q_inf")
    }

    pub fn tol_inv(&self) -> f64 {
        self.tol_inv.unwrap_or(1e-3 * self.k_inf())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub update: f64,
    pub residual: f64,
    pub omega: f64,
}

/// Nodal fields of one viscous solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub epsilon: f64,
    pub scheme: Scheme,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub w_minus: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub history: Vec<IterRecord>,
    /// Nodes projected below `rho_cr` during the iteration.
    pub projections: usize,
    /// Nodes where `rho_+` clipping was active in the returned fields.
    pub vacuum_clips: usize,
}

/// `k(rho_cr - RHO_GUARD)`.
fn k_max() -> f64 {
    chart::k_of_rho(RHO_CR - RHO_GUARD).unwrap_or(K_CR)
}

fn sigma_max() -> f64 {
    chart::sigma_of_rho(RHO_CR - RHO_GUARD)
}

impl Solution {
    /// Uniform state `(rho, theta)` on every node.
    pub fn constant(mesh: &Mesh, epsilon: f64, scheme: Scheme, rho: f64, theta: f64) -> Result<Self> {
        let n = mesh.n_vertices();
        Self::from_rho_theta(epsilon, scheme, vec![rho; n], vec![theta; n])
    }

    pub fn far_field(mesh: &Mesh, cfg: &SolverConfig, epsilon: f64) -> Result<Self> {
        Self::constant(mesh, epsilon, cfg.scheme, cfg.rho_inf(), 0.0)
    }

    pub fn from_rho_theta(epsilon: f64, scheme: Scheme, rho: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let mut k = Vec::with_capacity(rho.len());
        for &r in &rho {
            if !(0.0..RHO_CR).contains(&r) {
                return Err(CavError::Domain {
                    what: "rho",
                    value: r,
                    range: "[0, rho_cr)",
                });
            }
            k.push(chart::k_of_rho(r)?);
        }
        let w_plus = theta.iter().zip(&k).map(|(t, k)| t + k).collect();
        let w_minus = theta.iter().zip(&k).map(|(t, k)| t - k).collect();
        Ok(Self {
            epsilon,
            scheme,
            sigma: rho.iter().map(|&r| chart::sigma_of_rho(r)).collect(),
            q: rho.iter().map(|&r| chart::q_clipped(r)).collect(),
            theta,
            rho,
            w_minus,
            w_plus,
            history: Vec::new(),
            projections: 0,
            vacuum_clips: 0,
        })
    }

    /// Fields from Riemann invariants; `k` is clipped to `[0, k_max]`.
    fn from_invariants(epsilon: f64, w_plus: Vec<f64>, w_minus: Vec<f64>) -> Result<(Self, usize)> {
        let n = w_plus.len();
        let (mut rho, mut theta) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut proj, mut clips) = (0, 0);
        let km = k_max();
        for i in 0..n {
            let mut k = 0.5 * (w_plus[i] - w_minus[i]);
            if k > km {
                k = km;
                proj += 1;
            } else if k < 0.0 {
                k = 0.0;
                clips += 1;
            }
            rho.push(chart::rho_of_k(k)?);
            theta.push(0.5 * (w_plus[i] + w_minus[i]));
        }
        let mut s = Self::from_rho_theta(epsilon, Scheme::Riemann, rho, theta)?;
        s.w_plus = w_plus;
        s.w_minus = w_minus;
        s.vacuum_clips = clips;
        Ok((s, proj))
    }

    /// Fields from `(sigma, theta)`; `None` if `sigma` leaves the invertible range.
    fn from_sigma(epsilon: f64, sigma: Vec<f64>, theta: Vec<f64>) -> Result<Option<(Self, usize)>> {
        let sm = sigma_max();
        let mut proj = 0;
        let mut clips = 0;
        let mut rho = Vec::with_capacity(sigma.len());
        for &s in &sigma {
            if !s.is_finite() || s.abs() > chart::SIGMA_CR {
                return Ok(None);
            }
            let r = if s > sm {
                proj += 1;
                RHO_CR - RHO_GUARD
            } else {
                chart::rho_of_sigma(s)?
            };
            if r < 0.0 {
                clips += 1;
            }
            rho.push(r.max(0.0));
        }
        let mut out = Self::from_rho_theta(epsilon, Scheme::Poisson, rho, theta)?;
        out.sigma = sigma;
        out.vacuum_clips = clips;
        Ok(Some((out, proj)))
    }

    pub fn min_q(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_theta(&self) -> f64 {
        self.theta.iter().fold(0.0f64, |m, t| m.max(t.abs()))
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn converged(&self) -> bool {
        !self.history.is_empty()
    }
}

/// Optional manufactured data: Dirichlet values `(rho, theta)` on every
/// far-field node and sources added to the two scheme equations.
#[derive(Default)]
pub struct Forcing<'a> {
    pub dirichlet: Option<&'a (dyn Fn([f64; 2]) -> (f64, f64) + Sync)>,
    pub source: Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)>,
}

/// Local state at a triangle centroid from vertex averages.
fn tri_mean(mesh: &Mesh, t: usize, f: &[f64]) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    (f[a] + f[b] + f[c]) / 3.0
}

fn rho_from_k(k: f64) -> f64 {
    chart::rho_of_k(k.clamp(0.0, k_max())).unwrap_or(0.0)
}

/// `int f phi_i` by the edge-midpoint rule, added to `rhs`.
fn add_source(mesh: &Mesh, f: &dyn Fn([f64; 2]) -> [f64; 2], rhs: &mut [Vec<f64>; 2]) {
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.areas[t] / 6.0;
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let v = f([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            for c in 0..2 {
                rhs[c][a] += w * v[c];
                rhs[c][b] += w * v[c];
            }
        }
    }
}

/// Assembled linear problems of one Picard step.
struct Linearized {
    mats: [Vec<f64>; 2],
    rhs: [Vec<f64>; 2],
}

pub struct Solver<'a> {
    pub mesh: &'a Mesh,
    pub cfg: &'a SolverConfig,
    pattern: SparsePattern,
    dirichlet: Vec<bool>,
    /// Factored Dirichlet Laplacian (Poisson scheme).
    laplace: Option<SparseSolver>,
    stiffness: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(mesh: &'a Mesh, cfg: &'a SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let pattern = SparsePattern::from_mesh(mesh);
        let dirichlet: Vec<bool> = (0..mesh.n_vertices()).map(|v| mesh.is_dirichlet(v)).collect();
        if !dirichlet.iter().any(|&d| d) {
            return Err(CavError::Mesh("no far-field nodes".into()));
        }
        let mut stiffness = vec![0.0; pattern.nnz()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let g = &mesh.grads[t];
            for i in 0..3 {
                for j in 0..3 {
                    let v = mesh.areas[t] * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    stiffness[pattern.index(tri[i], tri[j])] += v;
                }
            }
        }
        let laplace = if cfg.scheme == Scheme::Poisson {
            let mut m = stiffness.clone();
            pattern.apply_dirichlet_rows(&mut m, &dirichlet);
            Some(SparseSolver::factor(&pattern, &m)?)
        } else {
            None
        };
        Ok(Self {
            mesh,
            cfg,
            pattern,
            dirichlet,
            laplace,
            stiffness,
        })
    }

    fn boundary_values(&self, forcing: &Forcing) -> Result<Vec<(f64, f64)>> {
        let rho_inf = self.cfg.rho_inf();
        self.mesh
            .vertices
            .iter()
            .map(|&p| match forcing.dirichlet {
                Some(f) => {
                    let (r, t) = f(p);
                    Ok((r, t))
                }
                None => Ok((rho_inf, 0.0)),
            })
            .collect()
    }

    /// Frozen-coefficient Riemann-invariant system at the iterate `s`.
    fn linearize_riemann(&self, s: &Solution, eps: f64, forcing: &Forcing, bv: &[(f64, f64)]) -> Linearized {
        let mesh = self.mesh;
        let n = mesh.n_vertices();
        let nnz = self.pattern.nnz();
        let mut mats = [vec![0.0; nnz], vec![0.0; nnz]];
        let mut rhs = [vec![0.0; n], vec![0.0; n]];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let wp = tri_mean(mesh, t, &s.w_plus);
            let wm = tri_mean(mesh, t, &s.w_minus);
            let rho = rho_from_k(0.5 * (wp - wm));
            let th = 0.5 * (wp + wm);
            let q = chart::q_clipped(rho);
            let m = (1.0 - 2.0 * rho * rho).max(DEGENERATE_FLOOR).sqrt();
            let (sn, cs) = th.sin_cos();
            let g = &mesh.grads[t];
            let area = mesh.areas[t];
            let mut gk = [0.0; 2];
            for i in 0..3 {
                let k = 0.5 * (s.w_plus[tri[i]] - s.w_minus[tri[i]]);
                gk[0] += k * g[i][0];
                gk[1] += k * g[i][1];
            }
            let src = eps * 2.0 * rho * q * q / (m * m * m) * (gk[0] * gk[0] + gk[1] * gk[1]) * area / 3.0;
            for (c, sgn) in [(0usize, 1.0), (1usize, -1.0)] {
                let b = [q * (cs - sgn * rho / m * sn), q * (sn + sgn * rho / m * cs)];
                for j in 0..3 {
                    let adv = area / 3.0 * (b[0] * g[j][0] + b[1] * g[j][1]);
                    for i in 0..3 {
                        mats[c][self.pattern.index(tri[i], tri[j])] += adv;
                    }
                }
                for &v in tri {
                    rhs[c][v] -= sgn * src;
                }
            }
        }
        for c in 0..2 {
            for (a, &k) in mats[c].iter_mut().zip(&self.stiffness) {
                *a += eps * k;
            }
            self.pattern.discrete_upwind(&mut mats[c]);
        }
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Obstacle) {
            for &v in &e.v {
                let rho = s.rho[v];
                let q = chart::q_clipped(rho);
                let m = (1.0 - 2.0 * rho * rho).max(DEGENERATE_FLOOR).sqrt();
                let (sn, cs) = s.theta[v].sin_cos();
                let flux = (rho * q * (cs * e.normal[0] + sn * e.normal[1])).abs() / m;
                rhs[0][v] -= 0.5 * e.length * flux;
                rhs[1][v] += 0.5 * e.length * flux;
            }
        }
        if let Some(f) = forcing.source {
            add_source(mesh, f, &mut rhs);
        }
        for v in 0..n {
            if self.dirichlet[v] {
                let (r, t) = bv[v];
                let k = chart::k_of_rho(r).unwrap_or(0.0);
                rhs[0][v] = t + k;
                rhs[1][v] = t - k;
            }
        }
        for m in mats.iter_mut() {
            self.pattern.apply_dirichlet_rows(m, &self.dirichlet);
        }
        Linearized { mats, rhs }
    }

    /// Right-hand sides of the two Poisson problems at the iterate `s`.
    fn linearize_poisson(&self, s: &Solution, eps: f64, forcing: &Forcing, bv: &[(f64, f64)]) -> [Vec<f64>; 2] {
        let mesh = self.mesh;
        let n = mesh.n_vertices();
        let mut rhs = [vec![0.0; n], vec![0.0; n]];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let rho = tri_mean(mesh, t, &s.rho);
            let th = tri_mean(mesh, t, &s.theta);
            let q = chart::q_clipped(rho);
            let (sn, cs) = th.sin_cos();
            let f = [rho * q * cs, rho * q * sn];
            let gv = [q * sn, -q * cs];
            let g = &mesh.grads[t];
            for i in 0..3 {
                rhs[0][tri[i]] += mesh.areas[t] * (f[0] * g[i][0] + f[1] * g[i][1]) / eps;
                rhs[1][tri[i]] += mesh.areas[t] * (gv[0] * g[i][0] + gv[1] * g[i][1]) / eps;
            }
        }
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Obstacle) {
            for &v in &e.v {
                let rho = s.rho[v];
                let q = chart::q_clipped(rho);
                let (sn, cs) = s.theta[v].sin_cos();
                let fnrm = rho * q * (cs * e.normal[0] + sn * e.normal[1]);
                let gnrm = q * (sn * e.normal[0] - cs * e.normal[1]);
                rhs[0][v] += 0.5 * e.length * (fnrm - fnrm.abs()) / eps;
                rhs[1][v] += 0.5 * e.length * gnrm / eps;
            }
        }
        if let Some(f) = forcing.source {
            let mut extra = [vec![0.0; n], vec![0.0; n]];
            add_source(mesh, f, &mut extra);
            for c in 0..2 {
                for v in 0..n {
                    rhs[c][v] += extra[c][v] / eps;
                }
            }
        }
        for v in 0..n {
            if self.dirichlet[v] {
                let (r, t) = bv[v];
                rhs[0][v] = chart::sigma_of_rho(r);
                rhs[1][v] = t;
            }
        }
        rhs
    }

    /// Relative discrete residual `max |A u - f| / max (|A| |u| + |f|)`.
    fn residual(&self, mats: &[&[f64]; 2], u: &[&[f64]; 2], rhs: &[Vec<f64>; 2]) -> f64 {
        let (mut r, mut scale) = (0.0f64, 0.0f64);
        for c in 0..2 {
            let (res, mag) = self.pattern.residual(mats[c], u[c], &rhs[c]);
            for v in 0..res.len() {
                if !self.dirichlet[v] {
                    r = r.max(res[v].abs());
                    scale = scale.max(mag[v]);
                }
            }
        }
        r / scale.max(f64::MIN_POSITIVE)
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    /// Assembled Riemann-scheme matrices for `(W_+, W_-)` at the iterate `s`.
    pub fn riemann_operators(&self, s: &Solution, eps: f64) -> Result<[Vec<f64>; 2]> {
        let forcing = Forcing::default();
        let bv = self.boundary_values(&forcing)?;
        Ok(self.linearize_riemann(s, eps, &forcing, &bv).mats)
    }

    fn scheme_vars(s: &Solution) -> [&[f64]; 2] {
        match s.scheme {
            Scheme::Riemann => [&s.w_plus, &s.w_minus],
            Scheme::Poisson => [&s.sigma, &s.theta],
        }
    }

    /// One undamped linear solve at `current`: returns the full Picard
    /// image in scheme variables and the residual of `current`.
    fn picard_image(&self, current: &Solution, eps: f64, forcing: &Forcing) -> Result<([Vec<f64>; 2], f64)> {
        let bv = self.boundary_values(forcing)?;
        match self.cfg.scheme {
            Scheme::Riemann => {
                let lin = self.linearize_riemann(current, eps, forcing, &bv);
                let u = Self::scheme_vars(current);
                let res = self.residual(&[&lin.mats[0], &lin.mats[1]], &u, &lin.rhs);
                let mut out = [Vec::new(), Vec::new()];
                for c in 0..2 {
                    let lu = SparseSolver::factor(&self.pattern, &lin.mats[c])?;
                    out[c] = lu.solve(&lin.rhs[c])?;
                }
                Ok((out, res))
            }
            Scheme::Poisson => {
                let rhs = self.linearize_poisson(current, eps, forcing, &bv);
                let mut a = self.stiffness.clone();
                self.pattern.apply_dirichlet_rows(&mut a, &self.dirichlet);
                let u = Self::scheme_vars(current);
                let res = self.residual(&[&a, &a], &u, &rhs);
                let lu = self.laplace.as_ref().expect("poisson factor");
                Ok(([lu.solve(&rhs[0])?, lu.solve(&rhs[1])?], res))
            }
        }
    }

    fn assemble_state(&self, eps: f64, u: [Vec<f64>; 2]) -> Result<Option<(Solution, usize)>> {
        let [a, b] = u;
        match self.cfg.scheme {
            Scheme::Riemann => Solution::from_invariants(eps, a, b).map(Some),
            Scheme::Poisson => Solution::from_sigma(eps, a, b),
        }
    }

    /// One damped Picard step; returns the new iterate and its record.
    pub fn picard_step(
        &self,
        current: &Solution,
        eps: f64,
        omega: f64,
        forcing: &Forcing,
    ) -> Result<(Solution, IterRecord)> {
        let (image, residual) = self.picard_image(current, eps, forcing)?;
        let u = Self::scheme_vars(current);
        let scale = u
            .iter()
            .flat_map(|x| x.iter())
            .fold(self.cfg.k_inf(), |m, v| m.max(v.abs()));
        let mut update = 0.0f64;
        let mut mixed = [Vec::new(), Vec::new()];
        for c in 0..2 {
            mixed[c] = image[c]
                .iter()
                .zip(u[c])
                .map(|(&new, &old)| {
                    update = update.max((new - old).abs());
                    omega * new + (1.0 - omega) * old
                })
                .collect();
        }
        let rec = IterRecord {
            iter: current.history.len() + 1,
            update: update / scale,
            residual,
            omega,
        };
        match self.assemble_state(eps, mixed)? {
            Some((mut s, proj)) => {
                s.history = current.history.clone();
                s.history.push(rec);
                s.projections = current.projections + proj;
                Ok((s, rec))
            }
            None => Err(CavError::Domain {
                what: "sigma",
                value: f64::NAN,
                range: "[-sigma_cr, sigma_cr]",
            }),
        }
    }

    /// Picard iteration to convergence at viscosity `eps`.
    pub fn solve_epsilon(&self, eps: f64, warm: &Solution, forcing: &Forcing) -> Result<Solution> {
        if !(eps > 0.0) {
            return Err(CavError::Domain {
                what: "epsilon",
                value: eps,
                range: "(0, inf)",
            });
        }
        let mut cur = warm.clone();
        cur.epsilon = eps;
        cur.scheme = self.cfg.scheme;
        cur.history.clear();
        cur.projections = 0;
        let mut omega = self.cfg.omega;
        let mut last = (f64::NAN, f64::NAN);
        for _ in 0..self.cfg.max_iters {
            match self.picard_step(&cur, eps, omega, forcing) {
                Ok((next, rec)) => {
                    last = (rec.update, rec.residual);
                    if !(rec.update.is_finite() && rec.residual.is_finite()) {
                        omega *= 0.5;
                    } else if rec.update < self.cfg.picard_tol && rec.residual < self.cfg.residual_tol {
                        // accept the iterate whose residual was measured
                        let mut done = cur;
                        done.history = next.history;
                        done.projections = next.projections;
                        return Ok(done);
                    } else {
                        cur = next;
                        let h = &cur.history;
                        let n = h.len();
                        if n > STAGNATION_WINDOW
                            && n % STAGNATION_WINDOW == 0
                            && h[n - 1].update > 0.5 * h[n - 1 - STAGNATION_WINDOW].update
                        {
                            omega *= 0.5;
                        }
                    }
                }
                Err(CavError::Domain { what: "sigma", .. }) => {
                    omega *= 0.5;
                }
                Err(e) => return Err(e),
            }
            if omega < MIN_OMEGA {
                break;
            }
        }
        Err(CavError::NoConvergence {
            iters: cur.history.len(),
            last_update: last.0,
            last_residual: last.1,
        })
    }

    /// Solves every viscosity of the configuration with warm starts.
    pub fn sweep(&self) -> Result<Vec<Solution>> {
        let mut out: Vec<Solution> = Vec::new();
        for &eps in &self.cfg.epsilons {
            let warm = match out.last() {
                Some(s) => s.clone(),
                None => Solution::far_field(self.mesh, self.cfg, eps)?,
            };
            out.push(self.solve_epsilon(eps, &warm, &Forcing::default())?);
        }
        Ok(out)
    }
}

/// `||a - b||_{L^2}` of two nodal fields (edge-midpoint rule).
pub fn l2_difference(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let d = [a[tri[0]] - b[tri[0]], a[tri[1]] - b[tri[1]], a[tri[2]] - b[tri[2]]];
        let m = [0.5 * (d[0] + d[1]), 0.5 * (d[1] + d[2]), 0.5 * (d[2] + d[0])];
        s += mesh.areas[t] / 3.0 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
    }
    s.sqrt()
}

/// Pairwise `L^2` differences of `(rho, theta)` along a sweep.
pub fn cauchy_differences(mesh: &Mesh, sols: &[Solution]) -> Vec<f64> {
    sols.windows(2)
        .map(|w| l2_difference(mesh, &w[0].rho, &w[1].rho).hypot(l2_difference(mesh, &w[0].theta, &w[1].theta)))
        .collect()
}
