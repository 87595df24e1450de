use std::f64::consts::PI;

use fourier_pairs::spectral::{
    forward_raw, gelfand_shilov_scan, hermite_basis, hermite_value, inverse_raw, point_eval, point_eval_freq, Grid, GridFunction,
};
use fourier_pairs::{Error, C64};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(12.0, 4096).unwrap()
}

#[test]
fn grid_reciprocity() {
    let g = grid();
    assert!((g.dx() * g.dxi() * g.size() as f64 - 1.0).abs() <= 1e-14);
    assert_eq!(g.x(0), -12.0);
    assert!((g.freq_half_width() - 4096.0 / 48.0).abs() < 1e-12);
}

#[test]
fn gaussian_is_self_dual() {
    let g = grid();
    let f = GridFunction::from_real_fn(g, |x| (-PI * x * x).exp()).unwrap();
    let dev = g.xis().iter().zip(f.freq()).map(|(&xi, v)| (v - C64::new((-PI * xi * xi).exp(), 0.0)).norm()).fold(0.0, f64::max);
    assert!(dev <= 1e-10, "{dev}");
}

#[test]
fn shifted_gaussian_picks_up_modulation() {
    // f(x) = e^{−π(x−1)²} has f̂(ξ) = e^{−2πiξ}e^{−πξ²}.
    let g = grid();
    let f = GridFunction::from_real_fn(g, |x| (-PI * (x - 1.0).powi(2)).exp()).unwrap();
    let dev = g
        .xis()
        .iter()
        .zip(f.freq())
        .map(|(&xi, v)| (v - C64::from_polar((-PI * xi * xi).exp(), -2.0 * PI * xi)).norm())
        .fold(0.0, f64::max);
    assert!(dev <= 1e-10, "{dev}");
}

#[test]
fn hermite_normalization_and_parity() {
    let hs = hermite_basis(20, grid()).unwrap();
    assert!((hs[0].l2_norm_sqr() - 1.0).abs() <= 1e-10);
    assert!(hermite_value(1, 0.0).abs() <= 1e-10);
    assert!((hermite_value(0, 0.0) - 2f64.powf(0.25)).abs() <= 1e-15);
    for (i, a) in hs.iter().enumerate().take(8) {
        for (j, b) in hs.iter().enumerate().take(8) {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((a.inner(b) - want).norm() <= 1e-10);
        }
    }
}

#[test]
fn point_evaluation_matches_closed_form() {
    let g = grid();
    let hs = hermite_basis(6, g).unwrap();
    for x in [-3.3, -0.123, 0.0, 0.77, 2.5] {
        for (n, h) in hs.iter().enumerate() {
            assert!((point_eval(h, x).unwrap() - hermite_value(n, x)).norm() <= 1e-10);
            let want = C64::new(0.0, -1.0).powu(n as u32) * hermite_value(n, x);
            assert!((point_eval_freq(h, x).unwrap() - want).norm() <= 1e-10);
        }
    }
    assert!(matches!(point_eval(&hs[0], 12.5), Err(Error::Range(_))));
}

#[test]
fn aliasing_is_rejected() {
    let g = Grid::new(2.0, 256).unwrap();
    assert!(matches!(GridFunction::from_real_fn(g, |x| (-0.1 * x * x).exp()), Err(Error::Aliasing { .. })));
}

#[test]
fn derivative_of_gaussian() {
    let g = grid();
    let f = GridFunction::from_real_fn(g, |x| (-PI * x * x).exp()).unwrap();
    let d = f.derivative();
    let dev = g.xs().iter().zip(d.space()).map(|(&x, v)| (v - C64::new(-2.0 * PI * x * (-PI * x * x).exp(), 0.0)).norm()).fold(0.0, f64::max);
    assert!(dev <= 1e-9, "{dev}");
}

#[test]
fn gelfand_shilov_of_gaussian() {
    // ∫|e^{−πx²}|²e^{cx²} = √(π/(2π − c)), finite exactly for c < 2π.
    let g = grid();
    let f = GridFunction::from_real_fn(g, |x| (-PI * x * x).exp()).unwrap();
    let (rows, best) = gelfand_shilov_scan(&f, 2.0, 2.0, &[0.1, 0.5, 1.0]).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(best, Some(1.0));
    let expected = (PI / (2.0 * PI - 0.5)).sqrt();
    assert!((rows[1].space_integral - expected).abs() <= 1e-6 * expected, "{}", rows[1].space_integral);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel_and_round_trip(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12)) {
        let g = grid();
        let hs = hermite_basis(coeffs.len() - 1, g).unwrap();
        let terms: Vec<(C64, &GridFunction)> = coeffs.iter().map(|&(a, b)| C64::new(a, b)).zip(hs.iter()).collect();
        let f = GridFunction::combine(g, &terms).unwrap();
        prop_assert!(f.plancherel_defect() <= 1e-10);
        let back = inverse_raw(&g, &forward_raw(&g, f.space()));
        let num: f64 = back.iter().zip(f.space()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = f.space().iter().map(|b| b.norm_sqr()).sum();
        prop_assert!(den == 0.0 || (num / den).sqrt() <= 1e-12);
    }

    #[test]
    fn transform_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, n in 0usize..10, m in 0usize..10) {
        let g = grid();
        let hs = hermite_basis(10, g).unwrap();
        let sum = hs[n].scale(C64::new(a, 0.0)).add(&hs[m].scale(C64::new(0.0, b))).unwrap();
        let direct = forward_raw(&g, sum.space());
        for (k, v) in direct.iter().enumerate() {
            let want = hs[n].freq()[k] * a + hs[m].freq()[k] * C64::new(0.0, b);
            prop_assert!((v - want).norm() <= 1e-12);
        }
    }
}
