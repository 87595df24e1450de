use std::f64::consts::PI;
use std::sync::OnceLock;

use fourier_pairs::nodes::gen_power_nodes;
use fourier_pairs::nonuniq::kp::{b_from_beta, beta_from_b, conjugate, default_s};
use fourier_pairs::nonuniq::levin::genus;
use fourier_pairs::nonuniq::{
    build_kp, build_levin_product, construct_nonuniqueness_witness, find_b0, prepare_witness, smooth_ray_zeros, CrossOperator, FamilySide,
    InterpolantFamily, LevinProduct, ResidualState, Target, WitnessConfig,
};
use fourier_pairs::spectral::{point_eval, point_eval_freq};
use fourier_pairs::{Error, C64};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn p2_indicator_masses_and_values() {
    let k = build_kp(2.0, 0.6, 3.0, None).unwrap();
    let alpha = 2.0 * PI * 0.6 / 2.0;
    assert_eq!(k.masses.len(), 4);
    assert!(k.masses.iter().all(|m| (m - 4.0 * alpha).abs() < 1e-12), "{:?}", k.masses);
    // k(θ) = α sin 2θ − β cos 2θ on [0, π/2].
    let t = 0.3;
    assert!((k.eval(t) - (alpha * (2.0 * t).sin() - k.beta * (2.0 * t).cos())).abs() < 1e-12);
    assert!(k.lindelof_residual() <= 1e-10);
    assert!(k.claim_margin() > 0.0);
}

#[test]
fn doubling_for_larger_exponents() {
    let k = build_kp(3.0, 0.5, 4.0, None).unwrap();
    assert!(k.doubling >= 1);
    assert!(k.continuity_defect() <= 1e-12 && k.symmetry_defect() <= 1e-12);
    assert!(k.lindelof_residual() <= 1e-10);
    assert!(k.masses.iter().all(|m| *m > 0.0));
}

#[test]
fn kp_parameter_errors() {
    assert!(matches!(build_kp(1.0, 0.5, 3.0, None), Err(Error::Parameter(_))));
    assert!(matches!(build_kp(2.0, 1.2, 3.0, None), Err(Error::Parameter(_))));
    assert!(matches!(build_kp(2.0, 0.6, 3.0, Some(0.1)), Err(Error::Parameter(_))));
}

#[test]
fn b0_is_a_threshold() {
    let b0 = find_b0(2.0, 0.6, None).unwrap();
    assert!(build_kp(2.0, 0.6, b0 * 1.01, None).unwrap().claim_margin() > 0.0);
    if let Ok(k) = build_kp(2.0, 0.6, b0 * 0.9, None) {
        assert!(k.claim_margin() <= 0.0);
    }
}

#[test]
fn genus_values() {
    assert_eq!(genus(2.0), 1);
    assert_eq!(genus(1.5), 1);
    assert_eq!(genus(2.5), 2);
}

fn product() -> &'static LevinProduct {
    static P: OnceLock<LevinProduct> = OnceLock::new();
    P.get_or_init(|| {
        let k = build_kp(2.0, 0.6, 3.0, None).unwrap();
        let rays = smooth_ray_zeros(&k, 40.0);
        build_levin_product(&k, &rays, 20.0).unwrap()
    })
}

#[test]
fn ray_zero_counts_follow_the_densities() {
    let k = build_kp(2.0, 0.6, 3.0, None).unwrap();
    for ray in smooth_ray_zeros(&k, 20.0) {
        let n = ray.radii.iter().filter(|r| **r <= 10.0).count() as f64;
        assert!((n - ray.density * 100.0).abs() <= 2.0, "{n} vs {}", ray.density * 100.0);
    }
}

#[test]
fn product_vanishes_at_its_zeros_and_cardinals_are_kronecker() {
    let p = product();
    let zs: Vec<C64> = p.zeros().iter().copied().filter(|z| z.norm() < 5.0).collect();
    assert!(zs.len() >= 4);
    for (i, z) in zs.iter().enumerate() {
        let idx = p.zero_index(*z).unwrap();
        assert!((p.cardinal(idx, *z) - 1.0).norm() <= 1e-10);
        for w in zs.iter().skip(i + 1).take(3) {
            assert!(p.cardinal(idx, *w).norm() <= 1e-10);
        }
        // log|S| just off a zero is far below its surroundings.
        let near = z + C64::new(1e-9, 0.0);
        assert!(p.log_abs(near) < p.log_abs(z * 1.05 + C64::new(0.0, 0.37)) - 10.0);
    }
}

#[test]
fn log_modulus_tracks_the_indicator() {
    // log|S(z)| = K(z) + O(1) away from the zero rays, with K(z) = k(θ)r².
    let p = product();
    for r in [6.0, 10.0, 14.0] {
        for t in [0.4, 1.0, 2.2, -0.9] {
            let z = C64::from_polar(r, t);
            assert!((p.indicator(z) - p.kp.eval(t) * r * r).abs() <= 1e-9 * r * r);
            let gap = p.log_abs(z) - p.indicator(z);
            assert!(gap.abs() <= 1.0, "r = {r}, θ = {t}: {gap}");
        }
    }
}

struct Families {
    phi: InterpolantFamily,
    psi: InterpolantFamily,
    cfg: WitnessConfig,
}

fn families() -> &'static Families {
    static F: OnceLock<Families> = OnceLock::new();
    F.get_or_init(|| {
        let nodes = gen_power_nodes(2.0, 1.2, 24300).unwrap();
        let cfg = WitnessConfig::default();
        let setup = prepare_witness(&nodes, &nodes, &cfg).unwrap();
        let (phi, psi) = setup.families(&cfg).unwrap();
        Families { phi, psi, cfg }
    })
}

#[test]
fn families_are_cardinal() {
    let f = families();
    assert!(f.phi.cardinal_error <= 1e-8 && f.psi.cardinal_error <= 1e-8);
    assert!(f.phi.cardinal_error_grid <= 1e-8 && f.psi.cardinal_error_grid <= 1e-8);
    // Grid evaluation error is relative to the sup norm, which is large at the outermost nodes.
    for (j, h) in f.phi.functions.iter().enumerate().take(6) {
        for (i, &v) in f.phi.nodes.iter().enumerate().take(6) {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((point_eval(h, v).unwrap() - want).norm() <= 1e-12 * h.sup_norm().max(1.0));
        }
    }
    for (j, h) in f.psi.functions.iter().enumerate().take(6) {
        for (i, &v) in f.psi.nodes.iter().enumerate().take(6) {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((point_eval_freq(h, v).unwrap() - want).norm() <= 1e-12 * h.sup_norm().max(1.0));
        }
    }
}

#[test]
fn cross_operator_step_is_linear() {
    let f = families();
    let op = CrossOperator::new(&f.phi, &f.psi).unwrap();
    let (n, m) = (f.phi.nodes.len(), f.psi.nodes.len());
    let a = ResidualState {
        alpha: DVector::from_fn(n, |i, _| C64::new((i as f64).sin(), 0.5)),
        beta: DVector::from_fn(m, |i, _| C64::new(0.1, (i as f64).cos())),
        iteration: 0,
    };
    let b = ResidualState { alpha: a.alpha.map(|v| v * C64::new(0.0, 2.0)), beta: a.beta.map(|v| v * 3.0), iteration: 0 };
    let sum = ResidualState { alpha: &a.alpha + &b.alpha, beta: &a.beta + &b.beta, iteration: 0 };
    let (sa, sb, ss) = (op.step(&a), op.step(&b), op.step(&sum));
    assert!((&ss.alpha - &sa.alpha - &sb.alpha).norm() <= 1e-12 * (1.0 + ss.alpha.norm()));
    assert!((&ss.beta - &sa.beta - &sb.beta).norm() <= 1e-12 * (1.0 + ss.beta.norm()));
    assert!(op.weighted_norm(&a) > 0.0);
}

#[test]
fn free_interpolation_contracts_and_scales() {
    let f = families();
    let op = CrossOperator::new(&f.phi, &f.psi).unwrap();
    let node = *f.phi.nodes.iter().find(|v| v.abs() > 4.0).unwrap();
    let t1 = Target { side: FamilySide::Space, node, value: C64::new(1.0, 0.0) };
    let s1 = op.solve(&[t1], f.cfg.l, f.cfg.max_iter).unwrap();
    assert!(s1.converged && s1.max_ratio <= 0.75, "{:?}", s1.ratios);
    assert!(s1.interpolation_error <= 1e-8 * s1.f.sup_norm().max(1.0), "{}", s1.interpolation_error);
    let t2 = Target { value: C64::new(-2.0, 1.0), ..t1 };
    let s2 = op.solve(&[t2], f.cfg.l, f.cfg.max_iter).unwrap();
    for (c1, c2) in s1.coeffs_phi.iter().zip(&s2.coeffs_phi) {
        assert!((c2 - c1 * t2.value).norm() <= 1e-10 * (1.0 + c2.norm()));
    }
}

#[test]
fn free_interpolation_preconditions() {
    let f = families();
    let op = CrossOperator::new(&f.phi, &f.psi).unwrap();
    let off = Target { side: FamilySide::Space, node: 5.55555, value: C64::new(1.0, 0.0) };
    assert!(matches!(op.solve(&[off], f.cfg.l, 10), Err(Error::Precondition(_))));
    assert!(matches!(op.initial_state(&[], 1e6), Err(Error::Precondition(_))));
    assert!(matches!(CrossOperator::new(&f.psi, &f.phi), Err(Error::Parameter(_))));
}

#[test]
fn witness_rejects_unsuitable_pairs() {
    let cfg = WitnessConfig::default();
    let sup = gen_power_nodes(2.0, 0.8, 2000).unwrap();
    assert!(matches!(construct_nonuniqueness_witness(&sup, &sup, &cfg), Err(Error::Classification(_))));
    let l = gen_power_nodes(3.0, 1.2, 500).unwrap();
    let m = gen_power_nodes(1.5, 1.2, 500).unwrap();
    assert!(matches!(construct_nonuniqueness_witness(&l, &m, &cfg), Err(Error::Parameter(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kp_is_continuous_and_symmetric(p in 1.2f64..4.0, sigma in 0.1f64..0.9, factor in 1.0f64..3.0) {
        let b0 = find_b0(p, sigma, None);
        prop_assume!(b0.is_ok());
        let k = build_kp(p, sigma, b0.unwrap() * factor, None);
        prop_assume!(k.is_ok());
        let k = k.unwrap();
        prop_assert!(k.continuity_defect() <= 1e-12);
        prop_assert!(k.symmetry_defect() <= 1e-12);
        prop_assert!(k.masses.iter().all(|m| *m > 0.0));
        let total: f64 = k.ray_densities().iter().map(|(_, d)| d).sum();
        prop_assert!((total * 2.0 * PI * p - k.masses.iter().sum::<f64>()).abs() <= 1e-9 * total.max(1.0));
    }

    #[test]
    fn beta_parametrization_round_trips(p in 1.1f64..5.0, sigma in 0.05f64..0.95, b in 0.5f64..20.0) {
        let s = default_s(p, sigma);
        prop_assert!(s > sigma.powf(conjugate(p)) && s < 1.0);
        let beta = beta_from_b(p, s, b);
        prop_assert!((b_from_beta(p, s, beta) - b).abs() <= 1e-10 * b);
    }
}
