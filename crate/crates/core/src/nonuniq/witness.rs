//! End-to-end construction of a nonzero `f` with `f|_Λ = 0` and `f̂|_M = 0` for a
//! subcritical pair with `p = q = 2`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{build_interpolant_family, FamilyConstants, FamilySide, InterpolantFamily};
use super::iteration::{CrossOperator, Target};
use super::kp::{b_from_beta, build_kp, default_s, KpFunction};
use super::levin::{build_levin_product_with, Correction, LevinProduct, RayZeros};
use crate::nodes::{classify_pair, smooth_enlarge, NodeSequence, PairClassification, Verdict};
use crate::spectral::{gelfand_shilov_scan, point_eval, point_eval_freq, Grid, GridFunction, GsDiagnostic};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessConfig {
    /// Density of the enlarged node sets (`D = σ`).
    pub sigma: f64,
    pub beta: f64,
    /// Defaults to the midpoint of `(σ², 1)`.
    pub s: Option<f64>,
    /// Interpolation window: nodes with `|ν| ≤ L` become linear constraints.
    pub l: f64,
    /// Nodes beyond this radius are left to the Gaussian decay of the interpolants.
    pub node_max: f64,
    /// Weight exponent `a` of the residual norm.
    pub weight_a: f64,
    pub family_eps: f64,
    /// Enlargement-added nodes with `|ν|` above this are tried as free-interpolation targets.
    pub target_min_abs: f64,
    pub grid_x: f64,
    pub grid_n: usize,
    pub truncation_radius: f64,
    pub max_iter: usize,
    pub contraction_max: f64,
    pub witness_tol: f64,
    pub tail_fraction: f64,
    pub gs_ladder: Vec<f64>,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            sigma: 0.9,
            beta: 0.5,
            s: None,
            l: 1.5,
            node_max: 7.2,
            weight_a: 0.6,
            family_eps: 0.05,
            target_min_abs: 5.0,
            grid_x: 12.0,
            grid_n: 8192,
            truncation_radius: 30.0,
            max_iter: 80,
            contraction_max: 0.75,
            witness_tol: 1e-6,
            tail_fraction: 0.25,
            gs_ladder: vec![0.05, 0.1, 0.2, 0.3, 0.4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub side: FamilySide,
    pub node: f64,
    pub steps: usize,
    pub max_ratio: f64,
    pub converged: bool,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub config: WitnessConfig,
    pub classification: PairClassification,
    pub kp_beta: f64,
    pub kp_b: f64,
    pub kp_s: f64,
    pub kp_bound_margin: f64,
    pub phi_nodes: usize,
    pub psi_nodes: usize,
    pub phi_constants: FamilyConstants,
    pub psi_constants: FamilyConstants,
    pub phi_cardinal_error: f64,
    pub phi_cardinal_error_grid: f64,
    pub psi_cardinal_error: f64,
    pub psi_cardinal_error_grid: f64,
    pub candidates: Vec<CandidateReport>,
    pub solutions: usize,
    pub constraints: usize,
    pub singular_values: Vec<f64>,
    /// `max |f(λ)|/‖f‖∞` over `Λ` inside the grid.
    pub vanishing_lambda: f64,
    /// `max |f̂(μ)|/‖f̂‖∞` over `M` inside the frequency grid.
    pub vanishing_mu: f64,
    pub lambda_checked: usize,
    pub mu_checked: usize,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub gs: Vec<GsDiagnostic>,
    pub gs_best_c: Option<f64>,
    /// Largest per-step residual ratio over the accepted solutions.
    pub max_contraction: f64,
    /// `Σ_{|ν|>L} e^{−(a′−a)|ν|^p}` over both enlarged sets; `None` when `a′ ≤ a`.
    pub tail_sum: Option<f64>,
    /// `1/(4C)` for the measured family constant.
    pub tail_delta: f64,
    pub tail_bound_ok: bool,
    pub vanishing_ok: bool,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub f: GridFunction,
    pub report: WitnessReport,
}

struct Enlarged {
    nodes: Vec<f64>,
    added: Vec<f64>,
    rays_pos: Vec<f64>,
    rays_neg: Vec<f64>,
}

fn enlarge(seq: &NodeSequence, sigma: f64, r: f64) -> Result<Enlarged> {
    let p = seq.exponent();
    let pos = NodeSequence::new(seq.positives().filter(|v| *v <= r).collect(), p, Some(r))?;
    let neg = NodeSequence::new(seq.negatives().rev().map(|v| -v).filter(|v| *v <= r).collect(), p, Some(r))?;
    let ep = smooth_enlarge(&pos, sigma)?;
    let en = smooth_enlarge(&neg, sigma)?;
    if !(ep.density_condition && en.density_condition) {
        return Err(Error::Configuration(format!(
            "σ = {sigma} does not exceed 1/(p·δ) for δ = {:.4}",
            ep.liminf_stat.min(en.liminf_stat)
        )));
    }
    let mut nodes: Vec<f64> = en.nodes.points().iter().rev().map(|v| -v).collect();
    nodes.extend(ep.nodes.points());
    let mut added: Vec<f64> = en.added.iter().map(|v| -v).collect();
    added.extend(&ep.added);
    Ok(Enlarged { nodes, added, rays_pos: ep.nodes.points().to_vec(), rays_neg: en.nodes.points().to_vec() })
}

fn product_for(kp: &KpFunction, e: &Enlarged, r: f64, beta: f64) -> Result<LevinProduct> {
    let rays: Vec<RayZeros> = kp
        .ray_densities()
        .into_iter()
        .map(|(theta, density)| {
            // Real rays carry the enlarged set; the imaginary rays copy it so the product
            // has no spurious quadratic term.
            let radii = if theta.sin() >= -1e-12 && theta.cos() > -0.5 { &e.rays_pos } else { &e.rays_neg };
            RayZeros { theta, density, radii: radii.clone() }
        })
        .collect();
    build_levin_product_with(kp, &rays, r, Correction::Fixed(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-beta, 0.0)]))
}

fn window_nodes(nodes: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    nodes.iter().copied().filter(|v| v.abs() > lo && v.abs() < hi).collect()
}

/// Enlarged node sets, products and grid shared by the witness stages.
#[derive(Debug, Clone)]
pub struct WitnessSetup {
    pub classification: PairClassification,
    pub kp: KpFunction,
    /// `Λ′`, two-sided and sorted.
    pub lambda_enlarged: Vec<f64>,
    pub lambda_added: Vec<f64>,
    pub mu_enlarged: Vec<f64>,
    pub mu_added: Vec<f64>,
    pub prod_lambda: LevinProduct,
    pub prod_mu: LevinProduct,
    pub grid: Grid,
}

/// Classifies the pair (refusing anything but subcritical), enlarges both sets and builds
/// the two products.
pub fn prepare_witness(lambda: &NodeSequence, mu: &NodeSequence, cfg: &WitnessConfig) -> Result<WitnessSetup> {
    if lambda.exponent() != 2.0 || mu.exponent() != 2.0 {
        return Err(Error::Parameter("the witness construction is implemented for p = q = 2".into()));
    }
    if !(cfg.l > 0.0 && cfg.node_max > cfg.l && cfg.target_min_abs < cfg.node_max) {
        return Err(Error::Parameter("need 0 < L < node_max and target_min_abs < node_max".into()));
    }
    let classification = classify_pair(lambda, mu, cfg.tail_fraction)?;
    if classification.verdict != Verdict::Subcritical {
        return Err(Error::Classification(format!(
            "pair is {:?} (combined statistic {:.4}); a witness needs a subcritical pair",
            classification.verdict, classification.combined
        )));
    }
    let r = cfg.truncation_radius;
    for (name, s) in [("Λ", lambda), ("M", mu)] {
        if s.truncation_radius() < r {
            return Err(Error::Precondition(format!("{name} is represented only up to {}, need R = {r}", s.truncation_radius())));
        }
    }
    let s = cfg.s.unwrap_or_else(|| default_s(2.0, cfg.sigma));
    let kp = build_kp(2.0, cfg.sigma, b_from_beta(2.0, s, cfg.beta), Some(s))?;
    let el = enlarge(lambda, cfg.sigma, r)?;
    let em = enlarge(mu, cfg.sigma, r)?;
    let prod_lambda = product_for(&kp, &el, r, cfg.beta)?;
    let prod_mu = if em.rays_pos == el.rays_pos && em.rays_neg == el.rays_neg { prod_lambda.clone() } else { product_for(&kp, &em, r, cfg.beta)? };
    let grid = Grid::new(cfg.grid_x, cfg.grid_n)?;
    Ok(WitnessSetup {
        classification,
        kp,
        lambda_enlarged: el.nodes,
        lambda_added: el.added,
        mu_enlarged: em.nodes,
        mu_added: em.added,
        prod_lambda,
        prod_mu,
        grid,
    })
}

impl WitnessSetup {
    /// The Φ family on `Λ′ ∩ (L, node_max)` and the Ψ family on `M′ ∩ (L, node_max)`.
    pub fn families(&self, cfg: &WitnessConfig) -> Result<(InterpolantFamily, InterpolantFamily)> {
        let phi = build_interpolant_family(
            &self.prod_lambda,
            &window_nodes(&self.lambda_enlarged, cfg.l, cfg.node_max),
            self.grid,
            FamilySide::Space,
            cfg.weight_a,
            cfg.family_eps,
        )?;
        let psi = build_interpolant_family(
            &self.prod_mu,
            &window_nodes(&self.mu_enlarged, cfg.l, cfg.node_max),
            self.grid,
            FamilySide::Frequency,
            cfg.weight_a,
            cfg.family_eps,
        )?;
        Ok((phi, psi))
    }
}

/// Builds the witness; refuses pairs not classified subcritical.
pub fn construct_nonuniqueness_witness(lambda: &NodeSequence, mu: &NodeSequence, cfg: &WitnessConfig) -> Result<Witness> {
    let setup = prepare_witness(lambda, mu, cfg)?;
    let (phi, psi) = setup.families(cfg)?;
    let grid = setup.grid;
    let kp = &setup.kp;
    let op = CrossOperator::new(&phi, &psi)?;

    let targets: Vec<(FamilySide, f64)> = window_nodes(&setup.lambda_added, cfg.target_min_abs, cfg.node_max)
        .into_iter()
        .map(|v| (FamilySide::Space, v))
        .chain(window_nodes(&setup.mu_added, cfg.target_min_abs, cfg.node_max).into_iter().map(|v| (FamilySide::Frequency, v)))
        .collect();
    let runs: Vec<(CandidateReport, Option<GridFunction>)> = targets
        .par_iter()
        .map(|&(side, node)| {
            let t = [Target { side, node, value: C64::new(1.0, 0.0) }];
            match op.solve(&t, cfg.l, cfg.max_iter) {
                Ok(sol) => {
                    let accepted = sol.converged && sol.max_ratio <= cfg.contraction_max;
                    let rep = CandidateReport { side, node, steps: sol.ratios.len(), max_ratio: sol.max_ratio, converged: sol.converged, accepted };
                    Ok((rep, accepted.then_some(sol.f)))
                }
                Err(Error::Divergence(_)) => {
                    Ok((CandidateReport { side, node, steps: 0, max_ratio: f64::INFINITY, converged: false, accepted: false }, None))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let max_contraction = runs.iter().filter(|(c, _)| c.accepted).map(|(c, _)| c.max_ratio).fold(0.0, f64::max);
    let candidates: Vec<CandidateReport> = runs.iter().map(|(c, _)| *c).collect();
    let solutions: Vec<GridFunction> = runs.into_iter().filter_map(|(_, f)| f).collect();

    let c_lambda: Vec<f64> = lambda.points().iter().copied().filter(|v| v.abs() <= cfg.l).collect();
    let c_mu: Vec<f64> = mu.points().iter().copied().filter(|v| v.abs() <= cfg.l).collect();
    let constraints = c_lambda.len() + c_mu.len();
    if solutions.len() <= constraints {
        return Err(Error::Configuration(format!(
            "{} contracting free solutions cannot satisfy {constraints} window constraints",
            solutions.len()
        )));
    }
    let scales: Vec<f64> = solutions.iter().map(|f| f.sup_norm()).collect();
    let rows: Vec<Vec<C64>> = solutions
        .par_iter()
        .zip(&scales)
        .map(|(f, sc)| -> Result<Vec<C64>> {
            let mut col: Vec<C64> = c_lambda.iter().map(|&v| point_eval(f, v)).collect::<Result<_>>()?;
            col.extend(c_mu.iter().map(|&v| point_eval_freq(f, v)).collect::<Result<Vec<_>>>()?);
            Ok(col.into_iter().map(|x| x / sc).collect())
        })
        .collect::<Result<_>>()?;
    let n = solutions.len();
    let a = DMatrix::from_fn(n, n, |i, j| if i < constraints { rows[j][i] } else { C64::new(0.0, 0.0) });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Conditioning("SVD did not return V".into()))?;
    let k = (0..n).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap_or(0);
    let coeffs: Vec<C64> = (0..n).map(|j| v_t[(k, j)].conj() / scales[j]).collect();
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|x, y| y.total_cmp(x));
    singular_values.truncate(constraints.min(n));
    singular_values.push(svd.singular_values[k]);
    let terms: Vec<(C64, &GridFunction)> = coeffs.iter().copied().zip(&solutions).collect();
    let raw = GridFunction::combine(grid, &terms)?;
    let peak = raw.space().iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap_or(C64::new(1.0, 0.0));
    if peak.norm() == 0.0 {
        return Err(Error::Conditioning("null combination vanished identically".into()));
    }
    let f = raw.scale(peak.inv());

    let lam_pts: Vec<f64> = lambda.points().iter().copied().filter(|v| v.abs() <= grid.half_width()).collect();
    let mu_pts: Vec<f64> = mu.points().iter().copied().filter(|v| v.abs() <= grid.freq_half_width()).collect();
    let sup = f.sup_norm();
    let fsup = f.freq_sup_norm();
    let vanishing_lambda = lam_pts.par_iter().map(|&v| point_eval(&f, v).map(|x| x.norm() / sup)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let vanishing_mu = mu_pts.par_iter().map(|&v| point_eval_freq(&f, v).map(|x| x.norm() / fsup)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let l2_norm = f.l2_norm_sqr().sqrt();
    let (gs, gs_best_c) = gelfand_shilov_scan(&f, 2.0, 2.0, &cfg.gs_ladder)?;

    let c_fam = phi.constants.c.max(psi.constants.c);
    let a_prime = phi.constants.a_prime.min(psi.constants.a_prime);
    let gap = a_prime - cfg.weight_a;
    let tail_sum = (gap > 0.0).then(|| setup.lambda_enlarged.iter().chain(&setup.mu_enlarged).filter(|v| v.abs() > cfg.l).map(|v| (-gap * v * v).exp()).sum::<f64>());
    let tail_delta = 1.0 / (4.0 * c_fam);
    let report = WitnessReport {
        config: cfg.clone(),
        classification: setup.classification,
        kp_beta: kp.beta,
        kp_b: kp.b,
        kp_s: kp.s,
        kp_bound_margin: kp.claim_margin(),
        phi_nodes: phi.nodes.len(),
        psi_nodes: psi.nodes.len(),
        phi_constants: phi.constants,
        psi_constants: psi.constants,
        phi_cardinal_error: phi.cardinal_error,
        phi_cardinal_error_grid: phi.cardinal_error_grid,
        psi_cardinal_error: psi.cardinal_error,
        psi_cardinal_error_grid: psi.cardinal_error_grid,
        candidates,
        solutions: n,
        constraints,
        singular_values,
        vanishing_lambda,
        vanishing_mu,
        lambda_checked: lam_pts.len(),
        mu_checked: mu_pts.len(),
        sup_norm: sup,
        l2_norm,
        gs,
        gs_best_c,
        max_contraction,
        tail_sum,
        tail_delta,
        tail_bound_ok: tail_sum.is_some_and(|t| t < tail_delta),
        vanishing_ok: vanishing_lambda <= cfg.witness_tol && vanishing_mu <= cfg.witness_tol,
    };
    Ok(Witness { f, report })
}
