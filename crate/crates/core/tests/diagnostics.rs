use std::sync::OnceLock;

use cavlab::chart;
use cavlab::diagnostics::*;
use cavlab::entropy::SpecialGenerator;
use cavlab::mesh::{DomainSpec, Mesh};
use cavlab::solver::*;
use proptest::prelude::*;

struct Run {
    mesh: Mesh,
    cfg: SolverConfig,
    sols: Vec<Solution>,
}

fn run() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let mesh = Mesh::build(&DomainSpec::default()).unwrap();
        let cfg = SolverConfig::default();
        let sols = Solver::new(&mesh, &cfg).unwrap().sweep().unwrap();
        Run { mesh, cfg, sols }
    })
}

fn flat() -> Mesh {
    Mesh::build(&DomainSpec { bump_height: 0.0, ..DomainSpec::default() }).unwrap()
}

fn special(cfg: &SolverConfig) -> SpecialGenerator {
    SpecialGenerator::from_q_inf(cfg.q_inf).unwrap()
}

#[test]
fn constant_flow_has_no_dissipation_or_defects() {
    let mesh = flat();
    let cfg = SolverConfig::default();
    let lat = TestFunctionLattice::default_for(&mesh).unwrap();
    let g = special(&cfg);
    let sols: Vec<Solution> = cfg
        .epsilons
        .iter()
        .map(|&e| Solution::far_field(&mesh, &cfg, e).unwrap())
        .collect();
    let s = &sols[0];
    assert!(dissipation_integral(&mesh, s) < 1e-28);
    let w = weak_residuals(&mesh, s, &lat);
    assert!(w.max_mass() < 1e-14 && w.max_curl() < 1e-14, "{w:?}");
    let d = entropy_dissipation(&mesh, s, Pair::Special(&g), &lat).unwrap();
    assert!(d.iter().all(|v| v.abs() < 1e-14));
    let dec = compactness_decomposition(&mesh, s, &g).unwrap();
    assert!(dec.d1 < 1e-14 && dec.d2_l1 < 1e-28);
    let rep = RunReport::build(&mesh, &cfg, &sols, &[]).unwrap();
    assert!(rep.pass, "{:#?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    assert!(rep.cauchy.differences.iter().all(|&x| x == 0.0));
}

#[test]
fn dissipation_of_linear_angle_is_exact() {
    let mesh = flat();
    let (a, b, eps) = (0.03, -0.02, 0.1);
    let rho = chart::rho_of_q(0.9).unwrap();
    let n = mesh.n_vertices();
    let theta = mesh.nodal(|p| a * p[0] + b * p[1]);
    let s = Solution::from_rho_theta(eps, Scheme::Riemann, vec![rho; n], theta).unwrap();
    let exact = eps * (a * a + b * b) * mesh.total_area();
    assert!((dissipation_integral(&mesh, &s) / exact - 1.0).abs() < 1e-12);
}

#[test]
fn special_d2_reduces_to_dissipation() {
    let r = run();
    let g = special(&r.cfg);
    for s in &r.sols {
        let dec = compactness_decomposition(&r.mesh, s, &g).unwrap();
        let diss = dissipation_integral(&r.mesh, s);
        assert!((dec.d2_l1 / diss - 1.0).abs() < 1e-12);
        assert!(dec.d1 > 0.0);
    }
}

#[test]
fn special_pair_identity_holds_at_large_viscosity() {
    let r = run();
    let g = special(&r.cfg);
    let lat = TestFunctionLattice::default_for(&r.mesh).unwrap();
    let id = special_identity(&r.mesh, &r.sols[0], &g, &lat).unwrap();
    let scale = id.iter().map(|(a, _)| a.abs()).fold(0.0, f64::max);
    for (lhs, rhs) in &id {
        assert!((lhs - rhs).abs() < 0.05 * scale, "{lhs} vs {rhs}");
    }
}

#[test]
fn invariant_margins_hold_on_sweep() {
    let r = run();
    for s in &r.sols {
        let m = invariant_region_report(s, &r.cfg);
        assert!(m.ok, "{m:?}");
        assert!(m.min_rho > 0.0 && m.speed > -m.tol_inv);
    }
}

#[test]
fn diagnostics_are_translation_invariant() {
    let r = run();
    let s = &r.sols[2];
    let shift = 3.25;
    let mut moved = r.mesh.clone();
    for p in moved.vertices.iter_mut() {
        p[0] += shift;
    }
    let lat = TestFunctionLattice::default_for(&r.mesh).unwrap();
    let mut lat_moved = lat.clone();
    for b in lat_moved.bumps.iter_mut() {
        b.center[0] += shift;
    }
    let g = special(&r.cfg);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1e-6 + a.abs().max(b.abs()));
    assert!(close(dissipation_integral(&r.mesh, s), dissipation_integral(&moved, s)));
    let (w0, w1) = (weak_residuals(&r.mesh, s, &lat), weak_residuals(&moved, s, &lat_moved));
    for (a, b) in w0.mass.iter().zip(&w1.mass).chain(w0.curl.iter().zip(&w1.curl)) {
        assert!(close(*a, *b), "{a} {b}");
    }
    let d0 = entropy_dissipation(&r.mesh, s, Pair::Special(&g), &lat).unwrap();
    let d1 = entropy_dissipation(&moved, s, Pair::Special(&g), &lat_moved).unwrap();
    for (a, b) in d0.iter().zip(&d1) {
        assert!(close(*a, *b), "{a} {b}");
    }
}

#[test]
fn lattice_stays_inside_and_rejects_wide_bumps() {
    let mesh = Mesh::build(&DomainSpec::default()).unwrap();
    let lat = TestFunctionLattice::default_for(&mesh).unwrap();
    assert_eq!(lat.bumps.len(), LATTICE_NX * LATTICE_NY);
    for b in &lat.bumps {
        assert!((b.width - 4.0 * mesh.spec.h_mesh).abs() < 1e-15);
        for v in mesh.boundary_edges.iter().flat_map(|e| e.v) {
            assert_eq!(b.value(mesh.vertices[v]), 0.0);
        }
    }
    assert!(TestFunctionLattice::new(&mesh, 5, 3, 0.5).is_err());
    for b in TestFunctionLattice::obstacle(&mesh, OBSTACLE_BUMPS) {
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == cavlab::mesh::BoundaryTag::Farfield) {
            for v in e.v {
                assert_eq!(b.value(mesh.vertices[v]), 0.0);
            }
        }
    }
}

#[test]
fn sqrt_fit_and_ratios() {
    let eps = [0.2, 0.1, 0.05, 0.025];
    let d: Vec<f64> = eps.iter().map(|e: &f64| 0.7 * e.sqrt()).collect();
    let f = SqrtFit::new(&eps, &d);
    assert!((f.c - 0.7).abs() < 1e-14 && f.max_violation.abs() < 1e-13 && f.ok());
    let flat: Vec<f64> = vec![1.0; 4];
    assert!(!SqrtFit::new(&eps, &flat).ok());
    assert_eq!(sweep_ratio(&[2.0, 1.0, 4.0]), 4.0);
    assert_eq!(sweep_ratio(&[0.0, 0.0]), 1.0);
}

#[test]
fn cauchy_of_repeated_solution_vanishes() {
    let r = run();
    let t = cauchy_convergence(&r.mesh, &[r.sols[1].clone(), r.sols[1].clone(), r.sols[1].clone()]);
    assert_eq!(t.differences, vec![0.0, 0.0]);
    assert!(t.monotone);
}

#[test]
fn pair_outside_domain_names_node() {
    let mesh = flat();
    let cfg = SolverConfig::default();
    let mut s = Solution::far_field(&mesh, &cfg, 0.1).unwrap();
    s.rho[7] = 0.9;
    let lat = TestFunctionLattice::default_for(&mesh).unwrap();
    let err = entropy_dissipation(&mesh, &s, Pair::Special(&special(&cfg)), &lat).unwrap_err();
    assert!(err.to_string().contains("node 7"), "{err}");
}

#[test]
fn report_is_deterministic_and_round_trips() {
    let r = run();
    let a = RunReport::build(&r.mesh, &r.cfg, &r.sols, &[]).unwrap();
    let b = RunReport::build(&r.mesh, &r.cfg, &r.sols, &[]).unwrap();
    let (ja, jb) = (a.to_json(), b.to_json());
    assert_eq!(ja, jb);
    let back: RunReport = serde_json::from_str(&ja).unwrap();
    assert_eq!(back.to_json(), ja);
    assert_eq!(a.records.len(), r.cfg.epsilons.len());
    assert!(a.check("invariant_regions").unwrap().pass);
    assert!(a.check("riemann_extremes").unwrap().pass);
    let keys: Vec<&str> = ["\"scheme\"", "\"records\"", "\"cauchy\"", "\"fits\"", "\"checks\"", "\"pass\""].to_vec();
    let pos: Vec<usize> = keys.iter().map(|k| ja.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

proptest! {
    #[test]
    fn bump_gradient_matches_differences(x in -0.3f64..0.3, y in -0.3f64..0.3, w in 0.2f64..0.6) {
        let b = Bump { center: [0.1, -0.05], width: w };
        let p = [x, y];
        let v = b.value(p);
        prop_assert!((0.0..=1.0).contains(&v));
        let h = 1e-6;
        let g = b.grad(p);
        let fx = (b.value([x + h, y]) - b.value([x - h, y])) / (2.0 * h);
        let fy = (b.value([x, y + h]) - b.value([x, y - h])) / (2.0 * h);
        prop_assert!((g[0] - fx).abs() < 1e-6 && (g[1] - fy).abs() < 1e-6);
    }
}
