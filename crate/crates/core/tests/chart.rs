use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use cavlab::asymptotics::{self, loglog_slope, AsymptoticConstants};
use cavlab::chart::*;
use cavlab::quad;
use proptest::prelude::*;

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn critical_constants() {
    assert_eq!(Q_CR, FRAC_1_SQRT_2);
    assert!((RHO_CR - (1.0 - Q_CR * Q_CR).sqrt()).abs() < 2e-16);
    assert!((NU_CR - (RHO_CR.atanh() - RHO_CR)).abs() < 1e-16);
    assert!((K_CR - (SQRT_2 - 1.0) * PI / 2.0).abs() < 1e-16);
    assert!((SIGMA_CR - sigma_of_rho(RHO_CR)).abs() < 1e-15);
}

#[test]
fn rho_of_q_examples() {
    assert_eq!(rho_of_q(1.0).unwrap(), 0.0);
    assert!((rho_of_q(FRAC_1_SQRT_2).unwrap() - FRAC_1_SQRT_2).abs() < 2e-16);
    assert!((rho_of_q(0.9).unwrap() - 0.19f64.sqrt()).abs() < 1e-16);
    assert!((q_of_rho(rho_of_q(0.9).unwrap()) - 0.9).abs() < 1e-15);
    assert!(rho_of_q(1.1).is_err());
    assert!(rho_of_q(-0.1).is_err());
}

#[test]
fn nu_against_quadrature() {
    for rho in [0.5, RHO_CR, 0.05, 0.2] {
        let oracle = quad::adaptive(|t| t * t / (1.0 - t * t), 0.0, rho, 1e-15).unwrap();
        let nu = nu_of_rho(rho).unwrap();
        assert!((nu - oracle).abs() < 1e-12 * oracle.max(1e-3), "rho {rho}: {nu} vs {oracle}");
    }
    assert_eq!(nu_of_rho(0.0).unwrap(), 0.0);
    assert!(nu_of_rho(1.0).is_err());
}

#[test]
fn nu_series_branch_is_continuous() {
    let x = 0.1 - 1e-12;
    let below = nu_of_rho(x).unwrap();
    assert!((below - (x.atanh() - x)).abs() < 1e-13 * below);
    let above = nu_of_rho(0.1).unwrap();
    assert!((above - (0.1f64.atanh() - 0.1)).abs() == 0.0);
}

#[test]
fn rho_of_nu_examples() {
    assert_eq!(rho_of_nu(0.0).unwrap(), 0.0);
    assert!((rho_of_nu(NU_CR).unwrap() - RHO_CR).abs() < 1e-12);
    let nu = 1e-6;
    let rho = rho_of_nu(nu).unwrap();
    assert!((nu_of_rho(rho).unwrap() - nu).abs() < 1e-12 * nu);
    assert!((rho / (3.0 * nu).cbrt() - 1.0).abs() < 1e-3);
    assert!(rho_of_nu(-1e-3).is_err());
    assert!(rho_of_nu(0.2).is_err());
}

#[test]
fn k_of_q_endpoints_and_quadrature() {
    assert!(k_of_q(1.0).unwrap().abs() < 1e-14);
    assert!((k_of_q(Q_CR).unwrap() - (SQRT_2 - 1.0) * PI / 2.0).abs() < 1e-14);
    // k(0.9) = int_{0.9}^1 -k'(q) dq, with q = 1 - t^2 removing the endpoint singularity
    let tmax = 0.1f64.sqrt();
    let oracle = quad::adaptive(
        |t| {
            let q = 1.0 - t * t;
            2.0 * (2.0 * q * q - 1.0).sqrt() / (q * (1.0 + q).sqrt())
        },
        0.0,
        tmax,
        1e-14,
    )
    .unwrap();
    assert!((k_of_q(0.9).unwrap() - oracle).abs() < 1e-10);
    assert!(k_of_q(0.5).is_err());
}

#[test]
fn k_of_q_agrees_with_arcsin_form() {
    for q in [0.71f64, 0.75, 0.8, 0.9, 0.95, 0.999] {
        let arcsin = (SQRT_2 - 1.0) * PI / 2.0
            - (SQRT_2 * (2.0 * q * q - 1.0).sqrt().asin() - (2.0 - 1.0 / (q * q)).sqrt().asin());
        assert!((k_of_q(q).unwrap() - arcsin).abs() < 1e-13, "q = {q}");
    }
}

#[test]
fn kprime_of_q_examples() {
    assert_eq!(kprime_of_q(Q_CR).unwrap(), 0.0);
    let exact = -(1.0 / 0.8) * (0.28f64 / 0.36).sqrt();
    assert!((kprime_of_q(0.8).unwrap() - exact).abs() < 1e-15);
    let h = 1e-5;
    let fd = (k_of_q(0.8 + h).unwrap() - k_of_q(0.8 - h).unwrap()) / (2.0 * h);
    assert!((fd - exact).abs() < 1e-7);
    assert_eq!(kprime_of_q(1.0).unwrap(), f64::NEG_INFINITY);
    let gaps = log_grid(1e-10, 1e-6, 9);
    let vals: Vec<f64> = gaps.iter().map(|g| kprime_of_q(1.0 - g).unwrap()).collect();
    assert!((loglog_slope(&gaps, &vals) + 0.5).abs() < 1e-3);
}

#[test]
fn k_nu_derivatives_match_mach_identity() {
    for nu in log_grid(1e-8, 0.9 * NU_CR, 200) {
        let rho = rho_of_nu(nu).unwrap();
        let m = q_of_rho(rho) / rho;
        let rhs = (m * m - 1.0) / (rho * rho);
        let kp = kprime_of_nu(nu).unwrap();
        assert!((kp * kp / rhs - 1.0).abs() < 1e-9, "nu = {nu}");
        assert!(kp > 0.0);
        assert!(kdoubleprime_of_nu(nu).unwrap() < 0.0);
    }
    let nu = 0.5 * NU_CR;
    let rho = rho_of_nu(nu).unwrap();
    let kp = kprime_of_nu(nu).unwrap();
    assert!((kp * kp - mach_factor(rho)).abs() < 1e-9);
}

#[test]
fn kdoubleprime_matches_remark_form_and_differences() {
    for nu in [1e-5, 1e-3, 0.05, 0.15] {
        let rho = rho_of_nu(nu).unwrap();
        let m2 = (1.0 - rho * rho) / (rho * rho);
        let remark = -(m2 / (rho * rho * (m2 - 1.0).sqrt())) * (1.0 / (rho * rho) + m2 - 1.0);
        let kpp = kdoubleprime_of_nu(nu).unwrap();
        assert!((kpp / remark - 1.0).abs() < 1e-12);
        let h = 1e-4 * nu;
        let fd = (kprime_of_nu(nu + h).unwrap() - kprime_of_nu(nu - h).unwrap()) / (2.0 * h);
        assert!((fd / kpp - 1.0).abs() < 1e-6, "nu = {nu}");
    }
}

#[test]
fn vacuum_limits_of_k() {
    let nu = 1e-12;
    assert!((k_of_nu(nu).unwrap() / nu.cbrt() - 3f64.cbrt()).abs() < 1e-6);
    let lim = kprime_of_nu(nu).unwrap() * nu.powf(2.0 / 3.0);
    assert!((lim - 3f64.powf(-2.0 / 3.0)).abs() < 1e-6);
    assert_eq!(k_of_nu(0.0).unwrap(), 0.0);
}

#[test]
fn monotonicity_on_grid() {
    let rhos: Vec<f64> = (0..=400).map(|i| RHO_CR * i as f64 / 400.0).collect();
    for w in rhos.windows(2) {
        assert!(nu_of_rho(w[1]).unwrap() > nu_of_rho(w[0]).unwrap());
        assert!(sigma_of_rho(w[1]) > sigma_of_rho(w[0]));
        assert!(k_of_rho(w[1]).unwrap() > k_of_rho(w[0]).unwrap());
    }
    let qs: Vec<f64> = (0..=400).map(|i| Q_CR + (1.0 - Q_CR) * i as f64 / 400.0).collect();
    for w in qs.windows(2) {
        assert!(k_of_q(w[1]).unwrap() < k_of_q(w[0]).unwrap());
    }
}

fn bisect_k(k: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, RHO_CR);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if k_of_rho(m).unwrap() < k {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn riemann_invariant_examples() {
    let (wm, wp) = riemann_invariants(StatePolar::from_speed(1.0, 0.0).unwrap()).unwrap();
    assert_eq!((wm, wp), (0.0, 0.0));
    let (wm, wp) = riemann_invariants(StatePolar::from_speed(Q_CR, 0.0).unwrap()).unwrap();
    assert!((wp - K_CR).abs() < 1e-14 && (wm + K_CR).abs() < 1e-14);
    let s = StatePolar::from_speed(0.85, 0.2).unwrap();
    let (wm, wp) = riemann_invariants(s).unwrap();
    let back = state_from_invariants(wm, wp).unwrap();
    assert!((back.q() - 0.85).abs() < 1e-10);
    assert!((back.theta - 0.2).abs() < 1e-14);
    assert!((back.rho - bisect_k(0.5 * (wp - wm))).abs() < 1e-12);
    assert!(state_from_invariants(0.5, 0.0).is_err());
    assert!(state_from_invariants(-1.0, 1.0).is_err());
    assert_eq!(state_from_invariants(0.3, 0.3).unwrap().rho, 0.0);
}

#[test]
fn conserved_examples() {
    let z = conserved_of_state(StatePolar::from_speed(1.0, 0.0).unwrap());
    assert_eq!((z.z1, z.z2), (0.0, 0.0));
    assert!(matches!(state_of_conserved(z), Err(cavlab::CavError::VacuumInversion)));
    let s = StatePolar::from_speed(0.8, 0.0).unwrap();
    let z = conserved_of_state(s);
    assert!((z.z1 - 0.48).abs() < 1e-15 && z.z2 == 0.0);
    let back = state_of_conserved(z).unwrap();
    assert!((back.rho - 0.6).abs() < 1e-12 && back.theta.abs() < 1e-15);
    let z = conserved_of_state(StatePolar::from_speed(0.8, PI / 2.0).unwrap());
    assert!(z.z1.abs() < 1e-16 && (z.z2 - 0.8).abs() < 1e-15);
}

#[test]
fn eigenstructure_examples() {
    let e = eigenstructure(StatePolar::new(0.0, 0.3)).unwrap();
    assert!((e.lambda_minus - e.lambda_plus).abs() < 1e-14);
    assert!(!e.strictly_hyperbolic);
    let e = eigenstructure(StatePolar::new(0.5, 0.0)).unwrap();
    let q = q_of_rho(0.5);
    let r = (q * q - 0.25f64).sqrt();
    assert!((e.lambda_plus - 0.5 / r).abs() < 1e-14);
    assert!((e.lambda_minus + 0.5 / r).abs() < 1e-14);
    assert!(e.strictly_hyperbolic);
    for i in 0..=20 {
        for j in 0..=12 {
            let rho = RHO_CR * 0.98 * i as f64 / 20.0;
            let theta = -0.6 + 1.2 * j as f64 / 12.0;
            if let Ok(e) = eigenstructure(StatePolar::new(rho, theta)) {
                assert!(e.gn_factor > 0.0);
                assert!(e.gn_plus != 0.0 && e.gn_minus != 0.0);
            }
        }
    }
}

#[test]
fn genuine_nonlinearity_against_finite_differences() {
    // grad_Z Lambda . e by central differences in Z, e from the eigenvector formula
    for (rho, theta) in [(0.3, 0.1), (0.5, -0.2), (0.2, 0.4)] {
        let s = StatePolar::new(rho, theta);
        let e = eigenstructure(s).unwrap();
        let (u, v) = s.velocity();
        let q = s.q();
        let c = rho;
        let norm = (1.0 + rho * rho / (c * c) * (q * q - c * c)).sqrt();
        for (lam, gn) in [(e.lambda_minus, e.gn_minus), (e.lambda_plus, e.gn_plus)] {
            let ev = [rho / (c * c) * (u * v + lam * (c * c - u * u)) / norm, -1.0 / norm];
            let z = conserved_of_state(s);
            let pick = |zz: ConservedState| {
                let st = state_of_conserved(zz).unwrap();
                let es = eigenstructure(st).unwrap();
                if (es.lambda_minus - e.lambda_minus).abs() < (es.lambda_plus - e.lambda_minus).abs()
                    && lam == e.lambda_minus
                {
                    es.lambda_minus
                } else if lam == e.lambda_minus {
                    es.lambda_minus
                } else {
                    es.lambda_plus
                }
            };
            let h = 1e-6;
            let d1 = (pick(ConservedState { z1: z.z1 + h, z2: z.z2 })
                - pick(ConservedState { z1: z.z1 - h, z2: z.z2 }))
                / (2.0 * h);
            let d2 = (pick(ConservedState { z1: z.z1, z2: z.z2 + h })
                - pick(ConservedState { z1: z.z1, z2: z.z2 - h }))
                / (2.0 * h);
            let fd = d1 * ev[0] + d2 * ev[1];
            assert!((fd.abs() / gn.abs() - 1.0).abs() < 1e-5, "fd {fd} vs {gn}");
        }
    }
}

#[test]
fn chart_table_rows() {
    let chart = GasChart::default();
    let rows = chart.table(1e-6, 11).unwrap();
    assert_eq!(rows.len(), 11);
    assert!((rows[10].nu - chart.nu_star).abs() < 1e-15);
    assert!(GasChart::new(0.2).is_err());
}

#[test]
fn series_oracle_matches_frozen_constants() {
    let rep = asymptotics::fit_asymptotic_constants().unwrap();
    assert!((rep.series.c_sharp - 3f64.cbrt()).abs() < 1e-15);
    assert!(rep.frozen_vs_series < 1e-14, "{}", rep.frozen_vs_series);
    assert!((rep.series_next - cavlab::constants::C_NEXT).abs() < 1e-14);
    assert!((rep.fitted.c_flat - rep.series.c_flat).abs() < 1e-6);
    assert!((rep.fitted.c_l / rep.series.c_l - 1.0).abs() < 1e-2);
}

#[test]
fn rho_series_has_negative_linear_term() {
    // rho(nu) = 3^{1/3} x - (3/5) x^3 + ..., checked directly against the inversion
    for nu in [1e-9, 1e-8, 1e-7] {
        let rho = rho_of_nu(nu).unwrap();
        let x = nu.cbrt();
        let lead = 3f64.cbrt() * x;
        let ratio = (rho - lead) / nu;
        assert!((ratio + 0.6).abs() < 1e-2, "nu = {nu}: {ratio}");
    }
}

#[test]
fn remainder_slope_on_vacuum_window() {
    let nus = log_grid(1e-8, 1e-4, 25);
    let ls: Vec<f64> = nus.iter().map(|&n| asymptotics::remainder_l(n).unwrap()).collect();
    let slope = loglog_slope(&nus, &ls);
    assert!(slope >= 7.0 / 3.0 - 0.05, "slope {slope}");
    let ratio = ls[0] / nus[0].powf(7.0 / 3.0);
    assert!((ratio - cavlab::constants::C_NEXT).abs() < 1e-3);
}

#[test]
fn double_double_k_agrees_with_f64() {
    for nu in [1e-8, 1e-6, 1e-4] {
        let dd = asymptotics::k_of_nu_dd(nu).unwrap();
        let f = k_of_nu(nu).unwrap();
        assert!((dd.hi() - f).abs() < 1e-15 * f);
    }
}

#[test]
fn corollary_cancellation_slope() {
    let c = AsymptoticConstants::frozen();
    let nus = log_grid(1e-6, 1e-3, 16);
    let ds: Vec<f64> = nus
        .iter()
        .map(|&n| asymptotics::cancellation_defect(rho_of_nu(n).unwrap(), &c))
        .collect();
    let slope = loglog_slope(&nus, &ds);
    assert!(slope >= 2.0 / 3.0 - 0.05, "slope {slope}");
}

proptest! {
    #[test]
    fn rho_q_round_trip(rho in 0.0..RHO_CR) {
        let q = q_of_rho(rho);
        prop_assert!((rho_of_q(q).unwrap() - rho).abs() < 1e-11);
    }

    #[test]
    fn rho_nu_round_trip(rho in 1e-6..RHO_CR) {
        let back = rho_of_nu(nu_of_rho(rho).unwrap()).unwrap();
        prop_assert!((back - rho).abs() < 1e-11 * rho.max(1e-3));
    }

    #[test]
    fn sigma_round_trip(rho in -0.7..0.7f64) {
        let back = rho_of_sigma(sigma_of_rho(rho)).unwrap();
        prop_assert!((back - rho).abs() < 1e-11);
    }

    #[test]
    fn invariants_round_trip(rho in 1e-4..0.7f64, theta in -1.0..1.0f64) {
        let s = StatePolar::new(rho, theta);
        let (wm, wp) = riemann_invariants(s).unwrap();
        let back = state_from_invariants(wm, wp).unwrap();
        prop_assert!((back.rho - rho).abs() < 1e-10);
        prop_assert!((back.theta - theta).abs() < 1e-13);
    }

    #[test]
    fn conserved_round_trip(rho in 1e-3..0.6f64, theta in -0.5..0.5f64) {
        let s = StatePolar::new(rho, theta);
        prop_assume!(rho < s.q() * theta.cos());
        let back = state_of_conserved(conserved_of_state(s)).unwrap();
        prop_assert!((back.rho - rho).abs() < 1e-12);
        prop_assert!((back.theta - theta).abs() < 1e-12);
    }
}
