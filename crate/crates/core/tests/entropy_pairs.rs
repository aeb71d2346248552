use std::sync::OnceLock;

use cavlab::chart::{self, StatePolar, NU_CR, RHO_CR};
use cavlab::entropy::*;
use cavlab::kernel::smooth::{default_s_max, s_grid};
use cavlab::kernel::{GridSpec, KernelKind, KernelTransform, PhiSpec};
use cavlab::quad;
use cavlab::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Q_INF: f64 = 0.9;

fn special() -> SpecialGenerator {
    SpecialGenerator::from_q_inf(Q_INF).unwrap()
}

/// `a + b nu + c theta + d nu theta`.
struct Bilinear([f64; 4]);

impl Generator for Bilinear {
    fn jet(&self, nu: f64, theta: f64) -> Result<GenJet> {
        let [a, b, c, d] = self.0;
        let rho = chart::rho_of_nu(nu)?;
        let h_nu = b + d * theta;
        Ok(GenJet {
            h: a + b * nu + c * theta + d * nu * theta,
            h_nu,
            rho_h_nu: rho * h_nu,
            h_th: c + d * nu,
            h_nuth: d,
            ..GenJet::default()
        })
    }

    fn name(&self) -> String {
        "bilinear".into()
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> StatePolar {
    StatePolar::new(rng.random_range(1e-3..RHO_CR - 1e-3), rng.random_range(-1.0..1.0))
}

#[test]
fn special_pair_matches_loewner_morawetz() {
    let g = special();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let st = random_state(&mut rng);
        let a = special_pair(&g, st).unwrap();
        let b = loewner_morawetz(&g, st).unwrap();
        assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "{st:?}: {a:?} vs {b:?}");
    }
}

#[test]
fn special_pair_reference_values() {
    let g = special();
    let st = StatePolar::new(g.rho_bar, 0.0);
    let (q1, q2) = special_pair(&g, st).unwrap();
    assert!((q1 + Q_INF).abs() < 1e-14 && q2 == 0.0);
    for rho in [0.0, 0.2, 0.6] {
        assert_eq!(special_pair(&g, StatePolar::new(rho, 0.0)).unwrap().1, 0.0);
    }
    assert!(special_pair(&g, StatePolar::new(0.8, 0.0)).is_err());
}

#[test]
fn n_identities() {
    let g = special();
    assert!(g.n(g.rho_bar).abs() < 1e-15);
    let mut sup = 0.0f64;
    for i in 0..=2000 {
        let rho = RHO_CR * i as f64 / 2000.0;
        sup = sup.max(g.n(rho).abs());
        let j = g.jet(chart::nu_of_rho(rho).unwrap(), 0.3).unwrap();
        assert_eq!(j.h_thth, 1.0);
        assert!((j.rho_h_nu + j.h_thth - rho * g.n(rho)).abs() < 1e-12);
    }
    assert!(sup <= 2f64.sqrt() + 1e-12);
}

#[test]
fn special_generator_matches_double_integral() {
    let g = special();
    for nu in [1e-6, 1e-4, 0.01, 0.05, 0.12, NU_CR] {
        // int_{nu_bar}^{nu} (nu - t) k'(t)^2 dt with t = u^3
        let f = |u: f64| {
            let t = u * u * u;
            let kp = chart::kprime_of_nu(t).unwrap();
            (nu - t) * kp * kp * 3.0 * u * u
        };
        let (a, b) = (g.nu_bar.cbrt(), nu.cbrt());
        let oracle = quad::adaptive(f, a, b, 1e-13).unwrap();
        let expect = 0.125 - nu / g.rho_bar + oracle;
        let got = g.jet(nu, 0.5).unwrap().h;
        assert!((got - expect).abs() < 1e-9 * (1.0 + expect.abs()), "nu {nu}: {got} vs {expect}");
    }
}

#[test]
fn special_generator_equation_by_differences() {
    let g = special();
    for nu in [1e-3, 0.02, 0.1] {
        let h = 1e-3 * nu;
        let v = |x: f64| g.jet(x, 0.2).unwrap().h;
        let hnn = (-v(nu + 2.0 * h) + 16.0 * v(nu + h) - 30.0 * v(nu) + 16.0 * v(nu - h) - v(nu - 2.0 * h)) / (12.0 * h * h);
        assert!((hnn / g.h_nunu(nu).unwrap() - 1.0).abs() < 1e-5);
        let dv = (v(nu + h) - v(nu - h)) / (2.0 * h);
        assert!((dv / g.jet(nu, 0.2).unwrap().h_nu - 1.0).abs() < 1e-6);
    }
}

#[test]
fn special_generator_rejects_bad_nu_bar() {
    assert!(special_generator(0.0).is_err());
    assert!(special_generator(NU_CR).is_err());
    assert!(special_generator(0.05).is_ok());
}

#[test]
fn elementary_generators() {
    let st = StatePolar::new(0.4, 0.7);
    let q = st.q();
    let (q1, q2) = loewner_morawetz(&Bilinear([3.0, 0.0, 0.0, 0.0]), st).unwrap();
    assert_eq!((q1, q2), (0.0, 0.0));
    let (q1, q2) = loewner_morawetz(&Bilinear([0.0, 0.0, 1.0, 0.0]), st).unwrap();
    assert!((q1 + q * 0.7f64.sin()).abs() < 1e-15 && (q2 - q * 0.7f64.cos()).abs() < 1e-15);
}

#[test]
fn convexity_of_special_and_its_negative() {
    let nus: Vec<f64> = (1..=20).map(|i| NU_CR * i as f64 / 21.0).collect();
    let ths: Vec<f64> = (-10..=10).map(|i| 0.1 * i as f64).collect();
    let rep = convexity_check(&special(), &nus, &ths).unwrap();
    assert_eq!(rep.margin1, 1.0);
    assert!(rep.admissible);
    let neg = Combination {
        terms: vec![(-1.0, Box::new(special()))],
    };
    let rep = convexity_check(&neg, &nus, &ths).unwrap();
    assert_eq!(rep.margin1, -1.0);
    assert!(!rep.admissible);
}

#[test]
fn special_compactness_constant() {
    let nus: Vec<f64> = (1..=40).map(|i| NU_CR * i as f64 / 41.0).collect();
    let ths: Vec<f64> = (-5..=5).map(|i| 0.1 * i as f64).collect();
    let rep = compactness_bounds(&special(), &nus, &ths).unwrap();
    assert!(rep.rho_weighted[0] <= 2f64.sqrt());
    assert_eq!(rep.rho_weighted[1], 0.0);
    assert!(rep.bounded.iter().all(|b| b.is_finite()));
}

fn manufactured(x: f64, y: f64) -> StatePolar {
    StatePolar::new(0.4 + 0.1 * x.sin() * (0.7 * y).cos(), 0.3 * (0.5 * x + y).sin())
}

fn d5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// `div_x Q` against `(rho H_nuth - H_th) V2 + (H_nu + H_thth / rho) V1`.
fn dissipation_defect(gen: &dyn Generator, x: f64, y: f64) -> (f64, f64) {
    let h = 1e-3;
    let q = |x: f64, y: f64| loewner_morawetz(gen, manufactured(x, y)).unwrap();
    let div_q = d5(|s| q(s, y).0, x, h) + d5(|s| q(x, s).1, y, h);
    let m = |x: f64, y: f64| {
        let st = manufactured(x, y);
        let (s, c) = st.theta.sin_cos();
        let qs = st.q();
        [st.rho * qs * c, st.rho * qs * s, qs * s, -qs * c]
    };
    let v1 = d5(|s| m(s, y)[0], x, h) + d5(|s| m(x, s)[1], y, h);
    let v2 = d5(|s| m(s, y)[2], x, h) + d5(|s| m(x, s)[3], y, h);
    let st = manufactured(x, y);
    let j = gen.jet(st.nu(), st.theta).unwrap();
    let rhs = (st.rho * j.h_nuth - j.h_th) * v2 + (j.h_nu + j.h_thth / st.rho) * v1;
    (div_q, rhs)
}

#[test]
fn dissipation_identity_on_manufactured_fields() {
    let gens: Vec<Box<dyn Generator>> = vec![
        Box::new(special()),
        Box::new(Bilinear([0.0, 1.0, 0.0, 0.0])),
        Box::new(Bilinear([0.0, 0.0, 1.0, 0.0])),
        Box::new(Bilinear([0.0, 0.3, -0.4, 2.0])),
    ];
    for g in &gens {
        for (x, y) in [(0.1, 0.2), (1.3, -0.4), (2.5, 1.1)] {
            let (l, r) = dissipation_defect(g.as_ref(), x, y);
            assert!((l - r).abs() < 1e-9 * (1.0 + l.abs()), "{}: {l} vs {r}", g.name());
        }
    }
}

#[test]
fn linearity_of_pairs() {
    let a = special();
    let b = Bilinear([1.0, -0.5, 0.2, 0.7]);
    let combo = Combination {
        terms: vec![(2.0, Box::new(a)), (-3.0, Box::new(Bilinear([1.0, -0.5, 0.2, 0.7])))],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let st = random_state(&mut rng);
        let (p1, p2) = loewner_morawetz(&a, st).unwrap();
        let (r1, r2) = loewner_morawetz(&b, st).unwrap();
        let (c1, c2) = loewner_morawetz(&combo, st).unwrap();
        assert!((c1 - 2.0 * p1 + 3.0 * r1).abs() < 1e-12);
        assert!((c2 - 2.0 * p2 + 3.0 * r2).abs() < 1e-12);
    }
}

struct Kernels {
    regular: KernelTransform,
    singular: KernelTransform,
    gen: KernelGenerator,
}

fn kernels() -> &'static Kernels {
    static K: OnceLock<Kernels> = OnceLock::new();
    K.get_or_init(|| {
        let nu_star = NU_CR / 2.0;
        let regular = KernelTransform::build(nu_star, KernelKind::Regular, &GridSpec::default()).unwrap();
        let singular = KernelTransform::build(nu_star, KernelKind::Singular, &GridSpec::default()).unwrap();
        let phi = PhiSpec::default();
        let nus: Vec<f64> = (0..6).map(|i| nu_star * 10f64.powf(-3.0 + 0.6 * i as f64)).collect();
        let s = s_grid(default_s_max(&regular, &phi), 241);
        let gen = KernelGenerator::build(&[(1.0, &regular, phi), (1.0, &singular, phi)], &nus, &s).unwrap();
        Kernels { regular, singular, gen }
    })
}

#[test]
fn kernel_generator_interpolates_nodes_and_rejects_outside() {
    let k = kernels();
    let g = &k.gen;
    let (nus, s) = (g.nu_grid(), g.s_grid());
    for (i, &nu) in nus.iter().enumerate() {
        for i_s in [3, 60, 120, 200] {
            let a = g.jet_at(i, i_s).unwrap();
            let b = g.jet(nu, s[i_s]).unwrap();
            assert!((a.h - b.h).abs() <= 1e-12 * (1.0 + a.h.abs()));
            assert!((a.h_nuth - b.h_nuth).abs() <= 1e-12 * (1.0 + a.h_nuth.abs()));
        }
    }
    assert!(g.jet(nus[0] * 0.5, 0.0).is_err());
    assert!(g.jet(nus[2], s[s.len() - 1] + 0.1).is_err());
}

#[test]
fn kernel_generator_off_node_theta() {
    let k = kernels();
    let g = &k.gen;
    let nu = g.nu_grid()[3];
    let s = g.s_grid();
    let mids: Vec<f64> = (50..60).map(|i| 0.5 * (s[i] + s[i + 1])).collect();
    let direct = KernelGenerator::build(
        &[(1.0, &k.regular, PhiSpec::default()), (1.0, &k.singular, PhiSpec::default())],
        &[nu],
        &mids,
    )
    .unwrap();
    let scale = (0..s.len()).map(|i| g.jet_at(3, i).unwrap().h.abs()).fold(0.0, f64::max);
    for (i, &m) in mids.iter().enumerate() {
        let a = g.jet(nu, m).unwrap().h;
        let b = direct.jet_at(0, i).unwrap().h;
        assert!((a - b).abs() < 1e-4 * scale, "{m}: {a} vs {b}");
    }
}

#[test]
fn kernel_generator_closure() {
    let k = kernels();
    let phi = PhiSpec::default();
    let s = s_grid(default_s_max(&k.regular, &phi), 61);
    for kt in [&k.regular, &k.singular] {
        for nu in [1e-3, 0.02] {
            let r = kernel_generator_residual(kt, phi, nu, &s).unwrap();
            assert!(r < 1e-8, "{:?} nu {nu}: {r:e}", kt.kind);
        }
    }
}

#[test]
fn special_plus_small_kernel_is_admissible() {
    let k = kernels();
    let nus = k.gen.nu_grid().to_vec();
    let ths: Vec<f64> = k.gen.s_grid().iter().step_by(4).copied().collect();
    let kc = compactness_bounds(&k.gen, &nus, &ths).unwrap();
    let kv = convexity_check(&k.gen, &nus, &ths).unwrap();
    // kernel part alone need not be convex
    let c = 0.5 / kc.rho_weighted[1].max(-kv.margin1).max(1.0);
    let combo = Combination {
        terms: vec![(1.0, Box::new(special())), (c, Box::new(k.gen.clone()))],
    };
    let rep = convexity_check(&combo, &nus, &ths).unwrap();
    assert!(rep.admissible, "c = {c}: {} {}", rep.margin1, rep.margin2);
}

#[test]
fn kernel_compactness_stable_under_refinement() {
    let k = kernels();
    let nus = k.gen.nu_grid().to_vec();
    let coarse: Vec<f64> = k.gen.s_grid().iter().step_by(2).copied().collect();
    let fine: Vec<f64> = k.gen.s_grid().to_vec();
    let a = compactness_bounds(&k.gen, &nus, &coarse).unwrap();
    let b = compactness_bounds(&k.gen, &nus, &fine).unwrap();
    for j in 0..3 {
        assert!(b.rho_weighted[j].is_finite() && b.bounded[j].is_finite());
        assert!((a.rho_weighted[j] / b.rho_weighted[j] - 1.0).abs() < 0.05);
        assert!((a.bounded[j] / b.bounded[j] - 1.0).abs() < 0.05);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lm_is_linear_in_jet(rho in 0.0..0.7f64, th in -2.0..2.0f64, a in -3.0..3.0f64) {
        let st = StatePolar::new(rho, th);
        let j = special().jet(st.nu(), th).unwrap();
        let (p, q) = loewner_morawetz_jet(&j, st);
        let (ps, qs) = loewner_morawetz_jet(&j.scale(a), st);
        prop_assert!((ps - a * p).abs() < 1e-12 * (1.0 + p.abs()));
        prop_assert!((qs - a * q).abs() < 1e-12 * (1.0 + q.abs()));
    }

    #[test]
    fn special_pair_speed_bound(rho in 0.0..0.7f64, th in -1.0..1.0f64) {
        let g = special();
        let (q1, q2) = special_pair(&g, StatePolar::new(rho, th)).unwrap();
        let q = chart::q_of_rho(rho);
        prop_assert!(q1.hypot(q2) <= q * (th.abs() + 1.0 + 2f64.sqrt() * rho) + 1e-12);
    }
}
