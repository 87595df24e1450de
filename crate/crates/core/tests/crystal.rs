use fourier_pairs::crystal::{build_crystalline_measure, counting_check, measures_after_removal, verify_pairing, weight_span_rank, DiscreteMeasure};
use fourier_pairs::frames::{build_interpolation_basis, build_sampling_operator, estimate_frame_bounds, InterpolationBasis};
use fourier_pairs::nodes::gen_power_nodes;
use fourier_pairs::spectral::{hermite_basis, Grid, GridFunction, SpaceParams};
use fourier_pairs::C64;

fn setup() -> (Grid, SpaceParams) {
    (Grid::new(12.0, 4096).unwrap(), SpaceParams::new(0.5, 2.0, 2.0).unwrap())
}

fn basis() -> InterpolationBasis {
    let (g, p) = setup();
    let l = gen_power_nodes(2.0, 0.8, 400).unwrap();
    let op = build_sampling_operator(&l, &l, p, g).unwrap();
    build_interpolation_basis(&estimate_frame_bounds(&op, 40).unwrap()).unwrap()
}

#[test]
fn pairing_after_removing_the_innermost_node() {
    let (g, p) = setup();
    let l = gen_power_nodes(2.0, 0.8, 400).unwrap();
    let x = l.positives().next().unwrap();
    let (nu, nu_hat) = measures_after_removal(&l, &l, p, g, 40, &[x]).unwrap().remove(0);
    assert!(nu.l1_norm() >= 1e-8);
    assert!(nu_hat.support().contains(&x));
    for h in hermite_basis(20, g).unwrap() {
        let pr = verify_pairing(&nu, &nu_hat, &h).unwrap();
        assert!(pr.holds(1e-5), "{pr:?}");
    }
}

#[test]
fn pairing_at_a_point_between_nodes() {
    let b = basis();
    let (nu, nu_hat) = build_crystalline_measure(&b, 2.9).unwrap();
    for h in hermite_basis(8, b.grid).unwrap() {
        assert!(verify_pairing(&nu, &nu_hat, &h).unwrap().holds(1e-5));
    }
}

#[test]
fn node_that_was_not_removed_is_rejected() {
    let b = basis();
    let x = b.nodes[3].value;
    assert!(build_crystalline_measure(&b, x).is_err());
}

#[test]
fn pairing_is_linear_and_vanishes_on_zero() {
    let b = basis();
    let (nu, nu_hat) = build_crystalline_measure(&b, 0.3).unwrap();
    let z = verify_pairing(&nu, &nu_hat, &GridFunction::zero(b.grid)).unwrap();
    assert_eq!((z.lhs, z.rhs), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    let hs = hermite_basis(3, b.grid).unwrap();
    let g = hs[0].add(&hs[3].scale(C64::new(0.0, 1.0))).unwrap();
    let p0 = verify_pairing(&nu, &nu_hat, &hs[0]).unwrap();
    let p3 = verify_pairing(&nu, &nu_hat, &hs[3]).unwrap();
    let pg = verify_pairing(&nu, &nu_hat, &g).unwrap();
    let i = C64::new(0.0, 1.0);
    assert!((pg.lhs - p0.lhs - i * p3.lhs).norm() <= 1e-12 * (1.0 + pg.lhs.norm()));
    assert!((pg.rhs - p0.rhs - i * p3.rhs).norm() <= 1e-12 * (1.0 + pg.rhs.norm()));
}

#[test]
fn measures_round_trip_through_files() {
    let one = C64::new(1.0, -2.0);
    let m = DiscreteMeasure::new(vec![(0.5, one), (-1.0, one * 2.0)], "ν").unwrap();
    let back = DiscreteMeasure::from_file(&m.to_file()).unwrap();
    assert_eq!(m, back);
    assert!((m.l1_norm() - 3.0 * 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn removed_points_give_independent_measures() {
    let (g, p) = setup();
    let l = gen_power_nodes(2.0, 0.8, 400).unwrap();
    let removed: Vec<f64> = l.positives().take(3).collect();
    let ms = measures_after_removal(&l, &l, p, g, 40, &removed).unwrap();
    let nus: Vec<DiscreteMeasure> = ms.into_iter().map(|(nu, _)| nu).collect();
    assert_eq!(weight_span_rank(&nus), 3);
}

#[test]
fn counting_inequality_on_supercritical_pairs() {
    for a in [0.5, 0.8, 0.95] {
        let l = gen_power_nodes(2.0, a, 400).unwrap();
        let r = counting_check(&l, &l, 1.0, 8.0, 15).unwrap();
        assert!(r.fitted_c <= 50.0, "{a}: {r:?}");
    }
}
