use std::sync::OnceLock;

use cavlab::linalg::SparsePattern;
use cavlab::mesh::{DomainSpec, Mesh};
use cavlab::solver::*;
use proptest::prelude::*;

mod common;
use common::{flat, mms_error};

fn obstacle_mesh() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| Mesh::build(&DomainSpec::default()).unwrap())
}

fn riemann_sweep() -> &'static Vec<Solution> {
    static S: OnceLock<Vec<Solution>> = OnceLock::new();
    S.get_or_init(|| {
        let cfg = SolverConfig::default();
        Solver::new(obstacle_mesh(), &cfg).unwrap().sweep().unwrap()
    })
}

#[test]
fn uniform_flow_is_a_fixed_point_without_obstacle() {
    let mesh = flat(0.08);
    for scheme in [Scheme::Riemann, Scheme::Poisson] {
        let cfg = SolverConfig { scheme, ..Default::default() };
        let s = Solver::new(&mesh, &cfg).unwrap();
        let start = Solution::far_field(&mesh, &cfg, 0.1).unwrap();
        let (next, rec) = s.picard_step(&start, 0.1, 1.0, &Forcing::default()).unwrap();
        assert!(rec.update < 1e-14 && rec.residual < 1e-14, "{scheme:?} {rec:?}");
        let d = l2_difference(&mesh, &next.rho, &start.rho) + l2_difference(&mesh, &next.theta, &start.theta);
        assert!(d < 1e-14);
    }
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    for scheme in [Scheme::Riemann, Scheme::Poisson] {
        let (e1, e2) = (mms_error(scheme, 0.08), mms_error(scheme, 0.04));
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "{scheme:?}: {e1:.3e} -> {e2:.3e}, order {order:.2}");
        assert!(e2 < 1e-3);
    }
}

#[test]
fn riemann_operators_are_m_matrices() {
    let mesh = obstacle_mesh();
    let cfg = SolverConfig::default();
    let s = Solver::new(mesh, &cfg).unwrap();
    let sol = &riemann_sweep()[4];
    for eps in [0.2, 0.0125, 1e-4] {
        for a in s.riemann_operators(sol, eps).unwrap() {
            assert!(s.pattern().is_m_matrix_pattern(&a));
        }
    }
}

#[test]
fn sweep_converges_and_stays_in_invariant_regions() {
    let cfg = SolverConfig::default();
    let (k_inf, tol) = (cfg.k_inf(), cfg.tol_inv());
    let sols = riemann_sweep();
    assert_eq!(sols.len(), cfg.epsilons.len());
    let mut prev_theta = 0.0;
    for s in sols {
        assert!(s.converged());
        let last = s.history.last().unwrap();
        assert!(last.update < cfg.picard_tol && last.residual < cfg.residual_tol);
        assert!(s.w_plus.iter().all(|&w| w <= k_inf + tol));
        assert!(s.w_minus.iter().all(|&w| w >= -k_inf - tol));
        assert!(s.min_q() >= cfg.q_inf - 1e-9);
        assert_eq!(s.vacuum_clips, 0);
        assert!(s.max_abs_theta() > prev_theta);
        prev_theta = s.max_abs_theta();
    }
    let d = cauchy_differences(obstacle_mesh(), sols);
    assert!(d.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn poisson_scheme_agrees_at_large_viscosity() {
    let mesh = obstacle_mesh();
    let cfg = SolverConfig { scheme: Scheme::Poisson, ..Default::default() };
    let s = Solver::new(mesh, &cfg).unwrap();
    let p = s.solve_epsilon(0.2, &Solution::far_field(mesh, &cfg, 0.2).unwrap(), &Forcing::default()).unwrap();
    let r = &riemann_sweep()[0];
    let diff = l2_difference(mesh, &p.theta, &r.theta);
    let scale = l2_difference(mesh, &r.theta, &vec![0.0; mesh.n_vertices()]);
    assert!(diff < 0.25 * scale, "{diff} vs {scale}");
}

#[test]
fn solve_is_deterministic() {
    let mesh = obstacle_mesh();
    let cfg = SolverConfig::default();
    let s = Solver::new(mesh, &cfg).unwrap();
    let warm = Solution::far_field(mesh, &cfg, 0.2).unwrap();
    let a = s.solve_epsilon(0.2, &warm, &Forcing::default()).unwrap();
    let b = s.solve_epsilon(0.2, &warm, &Forcing::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rho, riemann_sweep()[0].rho);
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        SolverConfig { q_inf: 0.5, ..Default::default() },
        SolverConfig { omega: 0.0, ..Default::default() },
        SolverConfig { epsilons: vec![0.1, 0.2], ..Default::default() },
        SolverConfig { epsilons: vec![], ..Default::default() },
        SolverConfig { max_iters: 0, ..Default::default() },
    ];
    for c in &bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    let mesh = flat(0.08);
    let cfg = SolverConfig::default();
    let s = Solver::new(&mesh, &cfg).unwrap();
    let warm = Solution::far_field(&mesh, &cfg, 0.1).unwrap();
    assert!(s.solve_epsilon(-1.0, &warm, &Forcing::default()).is_err());
}

#[test]
fn iteration_cap_reports_no_convergence() {
    let mesh = obstacle_mesh();
    let cfg = SolverConfig { max_iters: 3, ..Default::default() };
    let s = Solver::new(mesh, &cfg).unwrap();
    let warm = Solution::far_field(mesh, &cfg, 0.2).unwrap();
    match s.solve_epsilon(0.2, &warm, &Forcing::default()) {
        Err(cavlab::CavError::NoConvergence { iters, .. }) => assert_eq!(iters, 3),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #[test]
    fn upwinding_gives_m_matrix_and_keeps_row_sums(seed in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let mesh = flat(0.25);
        let p = SparsePattern::from_mesh(&mesh);
        let mut vals: Vec<f64> = (0..p.nnz()).map(|k| seed[k % seed.len()] * (1.0 + (k % 7) as f64)).collect();
        for i in 0..p.n {
            let off: f64 = p.row(i).filter(|&k| p.col[k] != i).map(|k| vals[k].abs()).sum();
            vals[p.diag[i]] = off + 1.0;
        }
        let before: Vec<f64> = (0..p.n).map(|i| p.row(i).map(|k| vals[k]).sum()).collect();
        p.discrete_upwind(&mut vals);
        prop_assert!(p.is_m_matrix_pattern(&vals));
        for i in 0..p.n {
            let s: f64 = p.row(i).map(|k| vals[k]).sum();
            prop_assert!((s - before[i]).abs() < 1e-12 * (1.0 + before[i].abs()));
        }
    }
}
