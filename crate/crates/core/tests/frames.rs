use fourier_pairs::frames::{
    build_interpolation_basis, build_sampling_operator, duffin_schaeffer_demo, estimate_frame_bounds, nearest_nodes, reconstruct,
    reconstruct_coeffs, samples_for, squared_weight, FrameModel, Side,
};
use fourier_pairs::nodes::gen_power_nodes;
use fourier_pairs::spectral::{hermite_basis, hspq_norm, Grid, GridFunction, SpaceParams};
use fourier_pairs::{Error, C64};
use proptest::prelude::*;

fn params() -> SpaceParams {
    SpaceParams::new(0.5, 2.0, 2.0).unwrap()
}

fn model(a: f64, m: usize) -> FrameModel {
    let l = gen_power_nodes(2.0, a, 400).unwrap();
    let op = build_sampling_operator(&l, &l, params(), Grid::new(12.0, 4096).unwrap()).unwrap();
    estimate_frame_bounds(&op, m).unwrap()
}

#[test]
fn weights() {
    assert_eq!(squared_weight(3.0, 1.0, 2.0), 64.0);
    assert!((squared_weight(-2.5, 0.5, 2.0) - 3.5).abs() < 1e-15);
}

#[test]
fn zero_function_has_zero_samples() {
    let g = Grid::new(12.0, 4096).unwrap();
    let l = gen_power_nodes(2.0, 0.8, 50).unwrap();
    let op = build_sampling_operator(&l, &l, params(), g).unwrap();
    assert!(op.apply(&GridFunction::zero(g)).unwrap().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn single_function_pencil() {
    let m = model(0.8, 1);
    let h = &m.basis[0];
    let want = m.op.energy(h).unwrap() / hspq_norm(h, &params());
    assert!((m.a_est - want).abs() <= 1e-10 * want && (m.b_est - want).abs() <= 1e-10 * want, "{} {} {want}", m.a_est, m.b_est);
}

#[test]
fn frame_sandwich_on_corpus() {
    let m = model(0.8, 30);
    for h in &m.basis {
        let e = m.op.energy(h).unwrap();
        let n = hspq_norm(h, &params());
        assert!(e >= m.a_est * n * (1.0 - 1e-9) && e <= m.b_est * n * (1.0 + 1e-9));
    }
}

#[test]
fn adding_rows_never_lowers_the_lower_bound() {
    let m = model(0.8, 20);
    let fewer = m.with_inactive(&[0, 5, 17]).unwrap();
    assert!(fewer.a_est <= m.a_est * (1.0 + 1e-10));
    let fewest = fewer.with_inactive(&[40, 41]).unwrap();
    assert!(fewest.a_est <= fewer.a_est * (1.0 + 1e-10));
}

#[test]
fn reconstruction_is_exact_and_idempotent() {
    let m = model(0.8, 40);
    let basis = build_interpolation_basis(&m).unwrap();
    let hs = hermite_basis(5, m.op.grid).unwrap();
    for h in &hs {
        let (l, mu) = samples_for(&basis, h).unwrap();
        let r = reconstruct(&basis, &l, &mu).unwrap();
        let err = (hspq_norm(&r.add(&h.scale(C64::new(-1.0, 0.0))).unwrap(), &params()) / hspq_norm(h, &params())).sqrt();
        assert!(err <= 1e-6, "{err}");
        let (l2, mu2) = samples_for(&basis, &r).unwrap();
        let r2 = reconstruct(&basis, &l2, &mu2).unwrap();
        let d = (hspq_norm(&r2.add(&r.scale(C64::new(-1.0, 0.0))).unwrap(), &params()) / hspq_norm(&r, &params())).sqrt();
        assert!(d <= 1e-9, "{d}");
    }
}

#[test]
fn reconstruction_key_errors() {
    let m = model(0.8, 10);
    let basis = build_interpolation_basis(&m).unwrap();
    assert!(matches!(reconstruct_coeffs(&basis, &[(0.123, C64::new(1.0, 0.0))], &[]), Err(Error::Format(_))));
    let zeros: Vec<(f64, C64)> = basis.nodes.iter().filter(|n| n.side == Side::Space).map(|n| (n.value, C64::new(0.0, 0.0))).collect();
    let zm: Vec<(f64, C64)> = basis.nodes.iter().filter(|n| n.side == Side::Frequency).map(|n| (n.value, C64::new(0.0, 0.0))).collect();
    assert!(reconstruct_coeffs(&basis, &zeros, &zm).unwrap().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn subcritical_lower_bound_collapses() {
    let a: Vec<f64> = [10, 20, 30, 40].iter().map(|&m| model(1.2, m).a_est).collect();
    assert!(a.windows(2).all(|w| w[1] <= 0.9 * w[0]), "{a:?}");
    let sup = model(0.8, 40);
    assert!(sup.a_est >= 1e-4 && sup.b_est / sup.a_est <= 1e4);
}

#[test]
fn degenerate_frame_is_rejected() {
    let m = model(1.2, 40);
    assert!(matches!(build_interpolation_basis(&m), Err(Error::DegenerateFrame(_))));
}

#[test]
fn removing_nodes_keeps_positivity() {
    let m = model(0.8, 40);
    let none = duffin_schaeffer_demo(&m, &[]).unwrap();
    assert_eq!(none.a_after, none.a_before);
    let rep = duffin_schaeffer_demo(&m, &nearest_nodes(&m, 2)).unwrap();
    assert!(rep.complete && rep.a_after > 0.0 && rep.a_after <= rep.a_before * (1.0 + 1e-10));
    assert!(duffin_schaeffer_demo(&m, &nearest_nodes(&m, 6)).is_err());
}

#[test]
fn rank_collapse_is_reported() {
    let l = gen_power_nodes(2.0, 0.8, 3).unwrap();
    let op = build_sampling_operator(&l, &l, params(), Grid::new(12.0, 4096).unwrap()).unwrap();
    let m = estimate_frame_bounds(&op, 12).unwrap();
    let rep = duffin_schaeffer_demo(&m, &nearest_nodes(&m, 1)).unwrap();
    assert!(!rep.complete);
    assert_eq!(rep.a_after, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reconstruction_is_linear(x in prop::collection::vec(-1.0f64..1.0, 4), y in prop::collection::vec(-1.0f64..1.0, 4)) {
        let m = model(0.8, 12);
        let basis = build_interpolation_basis(&m).unwrap();
        let k = basis.nodes.len();
        let sx: Vec<C64> = (0..k).map(|i| C64::new(x[i % 4] * (1.0 + i as f64).recip(), x[(i + 1) % 4])).collect();
        let sy: Vec<C64> = (0..k).map(|i| C64::new(y[i % 4], y[(i + 2) % 4] / (2.0 + i as f64))).collect();
        let split = |s: &[C64]| {
            let mut l = Vec::new();
            let mut mu = Vec::new();
            for (n, v) in basis.nodes.iter().zip(s) {
                if n.side == Side::Space { l.push((n.value, *v)) } else { mu.push((n.value, *v)) }
            }
            (l, mu)
        };
        let sum: Vec<C64> = sx.iter().zip(&sy).map(|(a, b)| a + b).collect();
        let (lx, mx) = split(&sx);
        let (ly, my) = split(&sy);
        let (ls, ms) = split(&sum);
        let cx = reconstruct_coeffs(&basis, &lx, &mx).unwrap();
        let cy = reconstruct_coeffs(&basis, &ly, &my).unwrap();
        let cs = reconstruct_coeffs(&basis, &ls, &ms).unwrap();
        for i in 0..cs.len() {
            prop_assert!((cs[i] - cx[i] - cy[i]).norm() <= 1e-12 * (1.0 + cs[i].norm()));
        }
    }
}
