//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use fourier_pairs::crystal::{counting_check, measures_after_removal, verify_pairing};
use fourier_pairs::frames::{
    build_interpolation_basis, build_sampling_operator, estimate_frame_bounds, reconstruct_coeffs, FrameModel, InterpolationBasis, Side,
};
use fourier_pairs::nodes::{classify_pair, gen_power_nodes, NodeSequence, Verdict};
use fourier_pairs::nonuniq::{build_kp, build_levin_product, construct_nonuniqueness_witness, smooth_ray_zeros, truncation_stability, verify_levin_bounds, LevinCheckConfig, WitnessConfig};
use fourier_pairs::spectral::{hermite_basis, hermite_value, inverse_raw, forward_raw, Grid, GridFunction, SpaceParams};
use fourier_pairs::wirtinger::{default_corpus, pw_terms, run_suite, testfn, Prepared, SuiteConfig};
use fourier_pairs::{Result, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn spectral_core() -> Result<Outcome> {
    let t0 = Instant::now();
    let grid = Grid::new(12.0, 4096)?;
    let hs = hermite_basis(20, grid)?;
    let plancherel = hs.iter().map(|h| h.plancherel_defect()).fold(0.0, f64::max);
    let round_trip = hs
        .iter()
        .map(|h| rel_l2(&inverse_raw(&grid, &forward_raw(&grid, h.space())), h.space()))
        .fold(0.0, f64::max);
    // ĥ_n = (−i)ⁿ h_n, with h_n from the closed-form recurrence on the frequency grid.
    let eigen = hs
        .iter()
        .enumerate()
        .map(|(n, h)| {
            let phase = C64::new(0.0, -1.0).powu(n as u32);
            let want: Vec<C64> = grid.xis().iter().map(|&xi| phase * hermite_value(n, xi)).collect();
            let d: f64 = h.freq().iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * grid.dxi();
            d.sqrt()
        })
        .fold(0.0, f64::max);
    let gauss = GridFunction::from_real_fn(grid, |x| (-PI * x * x).exp())?;
    let gauss_dev = grid
        .xis()
        .iter()
        .zip(gauss.freq())
        .map(|(&xi, v)| (v - C64::new((-PI * xi * xi).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    let pass = plancherel <= 1e-10 && round_trip <= 1e-12 && eigen <= 1e-8 && gauss_dev <= 1e-10 && secs < 5.0;
    outcome(pass, format!("plancherel {plancherel:.1e}, round trip {round_trip:.1e}, eigenrelation {eigen:.1e}, gaussian {gauss_dev:.1e}, {secs:.2}s"))
}

fn wirtinger_suite() -> Result<Outcome> {
    let t0 = Instant::now();
    let cfg = SuiteConfig::default();
    let corpus = default_corpus(&cfg)?;
    let rep = run_suite(&corpus, &cfg)?;
    let damaged = SuiteConfig { constant_scale: 0.5, ..cfg.clone() };
    let neg = run_suite(&corpus, &damaged)?;
    let cases: usize = rep.reports.iter().map(|r| r.cases_run).sum();
    let secs = t0.elapsed().as_secs_f64();
    let pass = rep.passed() && rep.errors.is_empty() && neg.total_violations() >= 1 && secs < 60.0;
    outcome(
        pass,
        format!(
            "{cases} cases, {} violations, {} case errors; damaged constants: {} violations; {secs:.1}s",
            rep.total_violations(),
            rep.errors.len(),
            neg.total_violations()
        ),
    )
}

fn pw_sharpness() -> Result<Outcome> {
    let grid = Grid::new(12.0, 8192)?;
    let (a, b) = (-1.3, 2.1);
    let f = testfn::pw_extremal(grid, a, b, 1.0)?;
    let t = pw_terms(&Prepared::new(f), a, b)?;
    let slack = (t.derivative_term - t.lhs).abs() / t.lhs;
    outcome(slack <= 1e-3, format!("∫|f|² = {:.8}, ((b−a)/π)²∫|f′|² = {:.8}, slack {slack:.1e}", t.lhs, t.derivative_term))
}

fn model(a: f64, m: usize, count: usize) -> Result<FrameModel> {
    let lambda = gen_power_nodes(2.0, a, count)?;
    let op = build_sampling_operator(&lambda, &lambda, SpaceParams::new(0.5, 2.0, 2.0)?, Grid::new(12.0, 4096)?)?;
    estimate_frame_bounds(&op, m)
}

fn frames() -> Result<Outcome> {
    let t0 = Instant::now();
    let sup = model(0.8, 40, 400)?;
    let a_est: Vec<f64> = [10, 20, 30, 40].iter().map(|&m| model(1.2, m, 400).map(|x| x.a_est)).collect::<Result<_>>()?;
    let ratios: Vec<f64> = a_est.windows(2).map(|w| w[1] / w[0]).collect();
    let secs = t0.elapsed().as_secs_f64();
    let pass = sup.a_est >= 1e-4 && sup.b_est / sup.a_est <= 1e4 && ratios.iter().all(|&r| r <= 0.9) && secs < 120.0;
    outcome(
        pass,
        format!(
            "a = 0.8: A = {:.3e}, B/A = {:.1}; a = 1.2: A over m = 10..40 [{}], ratios {ratios:.3?}; {secs:.1}s",
            sup.a_est,
            sup.b_est / sup.a_est,
            a_est.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Least-squares oracle: weighted samples of the closed-form Hermite functions, solved by SVD.
fn oracle_coeffs(basis: &InterpolationBasis, model: &FrameModel, n: usize) -> DVector<C64> {
    let p = &basis.params;
    let weight = |side: Side, v: f64| {
        let e = if side == Side::Space { p.p } else { p.q };
        (1.0 + v.abs()).powf((2.0 * p.s - 1.0) * e + 1.0).sqrt()
    };
    let value = |side: Side, j: usize, v: f64| match side {
        Side::Space => C64::new(hermite_value(j, v), 0.0),
        Side::Frequency => C64::new(0.0, -1.0).powu(j as u32) * hermite_value(j, v),
    };
    let rows = basis.nodes.len();
    let a = DMatrix::from_fn(rows, model.m, |r, j| value(basis.nodes[r].side, j, basis.nodes[r].value) * weight(basis.nodes[r].side, basis.nodes[r].value));
    let y = DVector::from_fn(rows, |r, _| value(basis.nodes[r].side, n, basis.nodes[r].value) * weight(basis.nodes[r].side, basis.nodes[r].value));
    a.svd(true, true).solve(&y, 1e-14).expect("svd solve")
}

fn interpolation() -> Result<Outcome> {
    let model = model(0.8, 40, 400)?;
    let basis = build_interpolation_basis(&model)?;
    let mut worst_oracle = 0.0f64;
    let mut worst_exact = 0.0f64;
    for n in 0..3 {
        let mut lam = Vec::new();
        let mut mu = Vec::new();
        for node in &basis.nodes {
            match node.side {
                Side::Space => lam.push((node.value, C64::new(hermite_value(n, node.value), 0.0))),
                Side::Frequency => mu.push((node.value, C64::new(0.0, -1.0).powu(n as u32) * hermite_value(n, node.value))),
            }
        }
        let c: Vec<C64> = reconstruct_coeffs(&basis, &lam, &mu)?;
        let oracle = oracle_coeffs(&basis, &model, n);
        let diff: Vec<C64> = c.iter().zip(oracle.iter()).map(|(x, y)| x - y).collect();
        let o: Vec<C64> = oracle.iter().copied().collect();
        worst_oracle = worst_oracle.max((model.coeff_norm_sqr(&diff) / model.coeff_norm_sqr(&o)).sqrt());
        let mut exact = vec![C64::new(0.0, 0.0); model.m];
        exact[n] = C64::new(1.0, 0.0);
        let diff: Vec<C64> = c.iter().zip(&exact).map(|(x, y)| x - y).collect();
        worst_exact = worst_exact.max((model.coeff_norm_sqr(&diff) / model.coeff_norm_sqr(&exact)).sqrt());
    }
    let slope = basis.growth_slope(Side::Space, 2.0, 8.0)?;
    let bound = basis.growth_exponent(Side::Space) + 0.1;
    let pass = worst_oracle <= 1e-6 && worst_exact <= 1e-6 && slope <= bound;
    outcome(pass, format!("h_0..h_2: error vs oracle {worst_oracle:.1e}, vs exact {worst_exact:.1e}; growth slope {slope:.3} (bound {bound:.2})"))
}

fn witness() -> Result<Outcome> {
    let t0 = Instant::now();
    let nodes = gen_power_nodes(2.0, 1.2, 24300)?;
    let cfg = WitnessConfig::default();
    let w = construct_nonuniqueness_witness(&nodes, &nodes, &cfg)?;
    let f = &w.f;
    let g = *f.grid();
    // Independent band-limited sums at the original nodes inside the grid.
    let at_space = |x: f64| -> C64 { g.xis().iter().zip(f.freq()).map(|(&xi, v)| v * C64::from_polar(1.0, 2.0 * PI * xi * x)).sum::<C64>() * g.dxi() };
    let at_freq = |xi: f64| -> C64 { g.xs().iter().zip(f.space()).map(|(&x, v)| v * C64::from_polar(1.0, -2.0 * PI * xi * x)).sum::<C64>() * g.dx() };
    let lam: Vec<f64> = nodes.points().iter().copied().filter(|v| v.abs() <= g.half_width()).collect();
    let mu: Vec<f64> = nodes.points().iter().copied().filter(|v| v.abs() <= 0.5 * g.freq_half_width()).collect();
    let van_l = lam.iter().map(|&v| at_space(v).norm()).fold(0.0, f64::max) / f.sup_norm();
    let van_m = mu.iter().map(|&v| at_freq(v).norm()).fold(0.0, f64::max) / f.freq_sup_norm();
    let r = &w.report;
    let every_step = r.candidates.iter().filter(|c| c.accepted).all(|c| c.max_ratio <= 0.75);
    let secs = t0.elapsed().as_secs_f64();
    let pass = f.l2_norm_sqr() > 0.0 && van_l <= 1e-6 && van_m <= 1e-6 && r.gs_best_c.is_some() && every_step && r.max_contraction <= 0.75 && secs < 600.0;
    outcome(
        pass,
        format!(
            "‖f‖₂ = {:.3}; max|f(λ)|/‖f‖∞ = {van_l:.1e} ({} nodes), max|f̂(μ)|/‖f̂‖∞ = {van_m:.1e} ({} nodes); GS finite up to c = {:?}; contraction {:.3} (reference 0.5); {secs:.1}s",
            r.l2_norm,
            lam.len(),
            mu.len(),
            r.gs_best_c,
            r.max_contraction
        ),
    )
}

fn levin() -> Result<Outcome> {
    let t0 = Instant::now();
    let kp = build_kp(2.0, 0.6, 3.0, None)?;
    let rays = smooth_ray_zeros(&kp, 60.0);
    let prod = build_levin_product(&kp, &rays, 30.0)?;
    let cfg = LevinCheckConfig { eps: 0.1, ..LevinCheckConfig::default() };
    let rep = verify_levin_bounds(&prod, &cfg)?;
    let stab = truncation_stability(&kp, &rays, 30.0, &cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    let pass = rep.bounds_hold() && stab <= 0.05;
    outcome(pass, format!("{} zeros; bounds hold: {}; truncation stability {stab:.1e}; {secs:.1}s", prod.zeros().len(), rep.bounds_hold()))
}

fn crystal() -> Result<Outcome> {
    let lambda = gen_power_nodes(2.0, 0.8, 400)?;
    let params = SpaceParams::new(0.5, 2.0, 2.0)?;
    let grid = Grid::new(12.0, 4096)?;
    let removed = lambda.points().iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let (nu, nu_hat) = measures_after_removal(&lambda, &lambda, params, grid, 40, &[removed])?.swap_remove(0);
    let worst = hermite_basis(20, grid)?
        .iter()
        .map(|h| verify_pairing(&nu, &nu_hat, h).map(|p| p.relative_gap()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let counting = counting_check(&lambda, &lambda, 1.0, 8.0, 15)?;
    let pass = worst <= 1e-5 && nu.l1_norm() >= 1e-8 && counting.fitted_c <= 50.0;
    outcome(pass, format!("worst pairing gap {worst:.1e}; ‖ν‖₁ = {:.3}; counting C = {:.3}", nu.l1_norm(), counting.fitted_c))
}

fn classification() -> Result<Outcome> {
    let verdict = |a: f64| -> Result<(Verdict, f64)> {
        let s = gen_power_nodes(2.0, a, 2000)?;
        let c = classify_pair(&s, &s, 0.25)?;
        Ok((c.verdict, c.combined))
    };
    let (critical, c1) = verdict(1.0)?;
    let (sup, _) = verdict(0.9)?;
    let (sub, _) = verdict(1.1)?;
    let s = gen_power_nodes(2.0, 1.0, 2000)?;
    let dilation = [0.3, 2.0, 7.5]
        .iter()
        .map(|&t| -> Result<f64> {
            let l: NodeSequence = s.dilate(t)?;
            let m = s.dilate(1.0 / t)?;
            let c = classify_pair(&l, &m, 0.25)?;
            Ok(if c.verdict == critical { (c.combined - c1).abs() } else { f64::INFINITY })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let pass = matches!(critical, Verdict::Critical | Verdict::Indeterminate) && sup == Verdict::Supercritical && sub == Verdict::Subcritical && dilation <= 1e-10;
    outcome(pass, format!("a = 1: {critical:?}, a = 0.9: {sup:?}, a = 1.1: {sub:?}; dilation change {dilation:.1e}"))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Result<Outcome>); 9] = [
        ("spectral core", spectral_core),
        ("inequality suite", wirtinger_suite),
        ("interval inequality sharpness", pw_sharpness),
        ("frame bounds", frames),
        ("interpolation formula", interpolation),
        ("non-uniqueness witness", witness),
        ("Levin product bounds", levin),
        ("crystalline pairing", crystal),
        ("classification", classification),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {}. {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!pass);
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
