//! Manufactured solution shared by the solver tests and the acceptance run.

use cavlab::chart;
use cavlab::mesh::{DomainSpec, Mesh};
use cavlab::solver::*;

pub fn flat(h: f64) -> Mesh {
    Mesh::build(&DomainSpec { bump_height: 0.0, ..DomainSpec::default() }.with_h(h)).unwrap()
}

pub const EPS_MMS: f64 = 0.5;

fn rho_ex(p: [f64; 2]) -> f64 {
    let r = chart::rho_of_q(0.9).unwrap();
    r * (1.0 + 0.1 * (0.8 * p[0]).sin() * (0.9 * p[1]).cos())
}

fn theta_ex(p: [f64; 2]) -> f64 {
    0.1 * (0.7 * p[0] + 0.5 * p[1]).sin()
}

fn grad(f: &dyn Fn([f64; 2]) -> f64, p: [f64; 2]) -> [f64; 2] {
    let d = 1e-5;
    [
        (f([p[0] + d, p[1]]) - f([p[0] - d, p[1]])) / (2.0 * d),
        (f([p[0], p[1] + d]) - f([p[0], p[1] - d])) / (2.0 * d),
    ]
}

fn lap(f: &dyn Fn([f64; 2]) -> f64, p: [f64; 2]) -> f64 {
    let d = 1e-3;
    (f([p[0] + d, p[1]]) + f([p[0] - d, p[1]]) + f([p[0], p[1] + d]) + f([p[0], p[1] - d]) - 4.0 * f(p)) / (d * d)
}

fn div(f: &dyn Fn([f64; 2]) -> [f64; 2], p: [f64; 2]) -> f64 {
    let d = 1e-5;
    (f([p[0] + d, p[1]])[0] - f([p[0] - d, p[1]])[0] + f([p[0], p[1] + d])[1] - f([p[0], p[1] - d])[1]) / (2.0 * d)
}

fn k_ex(p: [f64; 2]) -> f64 {
    chart::k_of_rho(rho_ex(p)).unwrap()
}

fn riemann_source(p: [f64; 2]) -> [f64; 2] {
    let (rho, th) = (rho_ex(p), theta_ex(p));
    let q = chart::q_clipped(rho);
    let m = (1.0 - 2.0 * rho * rho).sqrt();
    let gk = grad(&k_ex, p);
    let src = EPS_MMS * 2.0 * rho * q * q / m.powi(3) * (gk[0] * gk[0] + gk[1] * gk[1]);
    let mut out = [0.0; 2];
    for (c, sgn) in [(0usize, 1.0), (1usize, -1.0)] {
        let w = move |x: [f64; 2]| theta_ex(x) + sgn * k_ex(x);
        let gw = grad(&w, p);
        let (sn, cs) = th.sin_cos();
        let b = [q * (cs - sgn * rho / m * sn), q * (sn + sgn * rho / m * cs)];
        out[c] = b[0] * gw[0] + b[1] * gw[1] - EPS_MMS * lap(&w, p) + sgn * src;
    }
    out
}

fn poisson_source(p: [f64; 2]) -> [f64; 2] {
    let sigma = |x: [f64; 2]| chart::sigma_of_rho(rho_ex(x));
    let f = |x: [f64; 2]| {
        let (r, t) = (rho_ex(x), theta_ex(x));
        let q = chart::q_clipped(r);
        [r * q * t.cos(), r * q * t.sin()]
    };
    let g = |x: [f64; 2]| {
        let q = chart::q_clipped(rho_ex(x));
        let t = theta_ex(x);
        [q * t.sin(), -q * t.cos()]
    };
    [
        -EPS_MMS * lap(&sigma, p) + div(&f, p),
        -EPS_MMS * lap(&theta_ex, p) + div(&g, p),
    ]
}

pub fn mms_error(scheme: Scheme, h: f64) -> f64 {
    let mesh = flat(h);
    let cfg = SolverConfig { scheme, epsilons: vec![EPS_MMS], ..Default::default() };
    let s = Solver::new(&mesh, &cfg).unwrap();
    let bc = |p: [f64; 2]| (rho_ex(p), theta_ex(p));
    let src: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync) = match scheme {
        Scheme::Riemann => &riemann_source,
        Scheme::Poisson => &poisson_source,
    };
    let forcing = Forcing { dirichlet: Some(&bc), source: Some(src) };
    let warm = Solution::far_field(&mesh, &cfg, EPS_MMS).unwrap();
    let sol = s.solve_epsilon(EPS_MMS, &warm, &forcing).unwrap();
    let er = l2_difference(&mesh, &sol.rho, &mesh.nodal(rho_ex));
    let et = l2_difference(&mesh, &sol.theta, &mesh.nodal(theta_ex));
    er.hypot(et)
}
