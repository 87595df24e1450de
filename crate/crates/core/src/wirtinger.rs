//! Numerical checks of the Poincaré–Wirtinger-type and trace inequalities on grid
//! functions, and a suite runner that aggregates them over a corpus.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nodes::{is_l_dense, NodeSequence};
use crate::quad;
use crate::spectral::{hermite_basis, point_eval, Grid, GridFunction};
use crate::{Error, Result, C64};

/// Frozen constants assembled from the proofs.
pub mod constants {
    use std::f64::consts::PI;

    /// Summed trace constant `max(2, (2/3)(2π)²) = 8π²/3`.
    pub const TRACE_SUM: f64 = 8.0 * PI * PI / 3.0;
    /// Constant of the generalized trace bound: twice [`TRACE_SUM`], which also covers `θ > 1`.
    pub const TRACE_GENERAL: f64 = 2.0 * TRACE_SUM;

    /// `C_ε = (1 + 1/ε)(1 − ε)`: cell-wise stable PW bound summed over a `(1−ε)/(2t)`-dense set,
    /// then lifted to convex `Φ` through `Φ(ξ²) ≥ Φ(t²) + Φ′(t²)(ξ² − t²)`.
    pub fn wirt2(eps: f64) -> f64 {
        (1.0 + 1.0 / eps) * (1.0 - eps)
    }
}

/// Relative round-off of `|f(x)|²` from band-limited point evaluation, in units of `‖f‖∞²`.
pub const POINT_ROUNDOFF: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    /// Absolute round-off level of the two sides; differences below it are not resolved.
    #[serde(default)]
    pub noise: f64,
}

impl Comparison {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, noise: 0.0 }
    }

    /// `(rhs − lhs)/max(|lhs|, |rhs|, noise)`, zero when all vanish.
    pub fn relative_slack(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(self.noise);
        if scale == 0.0 {
            0.0
        } else {
            (self.rhs - self.lhs) / scale
        }
    }

    /// `lhs > rhs` by more than `tol` relative and the round-off level.
    pub fn violated(&self, tol: f64) -> bool {
        self.rhs - self.lhs < -(tol * self.lhs.abs().max(self.rhs.abs()) + self.noise)
    }

    /// Whether either side is above the round-off level.
    pub fn resolved(&self) -> bool {
        self.lhs.abs().max(self.rhs.abs()) > self.noise
    }

    /// Multiplies the right-hand side, as for a scaled constant.
    pub fn scaled(self, c: f64) -> Self {
        Self { rhs: c * self.rhs, ..self }
    }
}

/// A function prepared for repeated checks: samples of `|f|²`, `|f′|²` and the derivative.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub f: GridFunction,
    pub df: GridFunction,
    abs2: Vec<f64>,
    dabs2: Vec<f64>,
}

impl Prepared {
    pub fn new(f: GridFunction) -> Self {
        let df = f.derivative();
        let abs2 = f.space().iter().map(|v| v.norm_sqr()).collect();
        let dabs2 = df.space().iter().map(|v| v.norm_sqr()).collect();
        Self { f, df, abs2, dabs2 }
    }

    fn grid(&self) -> Grid {
        *self.f.grid()
    }
}

fn check_interval(g: &Grid, a: f64, b: f64) -> Result<()> {
    if !(a < b) {
        return Err(Error::Parameter(format!("interval needs a < b, got [{a}, {b}]")));
    }
    if a < -g.half_width() || b > g.half_width() {
        return Err(Error::Range(format!("[{a}, {b}] is not inside the grid [−{0}, {0}]", g.half_width())));
    }
    Ok(())
}

/// Trapezoid rule on the grid points inside `[a, b]` plus partial end cells.
pub fn restricted_integral(g: &Grid, samples: &[f64], a: f64, b: f64, at_a: f64, at_b: f64) -> f64 {
    let dx = g.dx();
    let x0 = g.half_width();
    let k0 = ((a + x0) / dx).ceil().max(0.0) as usize;
    let k1 = (((b + x0) / dx).floor() as usize).min(g.size() - 1);
    if k0 > k1 {
        return (b - a) * (at_a + at_b) / 2.0;
    }
    let inner = if k1 > k0 {
        quad::sum((k0..k1).map(|k| (samples[k] + samples[k + 1]) / 2.0)) * dx
    } else {
        0.0
    };
    let left = (g.x(k0) - a) * (at_a + samples[k0]) / 2.0;
    let right = (b - g.x(k1)) * (samples[k1] + at_b) / 2.0;
    inner + left + right
}

/// `∫ₐᵇ|f|²`, `∫ₐᵇ|f′|²`, `|f(a)|²`, `|f(b)|²`.
fn interval_pieces(p: &Prepared, a: f64, b: f64) -> Result<[f64; 4]> {
    let g = p.grid();
    check_interval(&g, a, b)?;
    let fa = point_eval(&p.f, a)?.norm_sqr();
    let fb = point_eval(&p.f, b)?.norm_sqr();
    let da = point_eval(&p.df, a)?.norm_sqr();
    let db = point_eval(&p.df, b)?.norm_sqr();
    Ok([
        restricted_integral(&g, &p.abs2, a, b, fa, fb),
        restricted_integral(&g, &p.dabs2, a, b, da, db),
        fa,
        fb,
    ])
}

/// Interval Wirtinger pieces: `lhs = ∫ₐᵇ|f|²`, derivative term `((b−a)/π)²∫ₐᵇ|f′|²`,
/// boundary term `(b−a)(|f(a)|² + |f(b)|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwTerms {
    pub lhs: f64,
    pub derivative_term: f64,
    pub boundary_term: f64,
}

impl PwTerms {
    pub fn rhs(&self, eps: f64) -> f64 {
        (1.0 + eps) * self.derivative_term + (1.0 + 1.0 / eps) * self.boundary_term
    }
}

pub fn pw_terms(p: &Prepared, a: f64, b: f64) -> Result<PwTerms> {
    let [i0, i1, fa, fb] = interval_pieces(p, a, b)?;
    let h = b - a;
    Ok(PwTerms { lhs: i0, derivative_term: (h / PI).powi(2) * i1, boundary_term: h * (fa + fb) })
}

/// `∫ₐᵇ|f|² ≤ (1+ε)((b−a)/π)²∫ₐᵇ|f′|² + (1+ε⁻¹)(b−a)(|f(a)|²+|f(b)|²)`.
pub fn check_pw_stable(f: &GridFunction, a: f64, b: f64, eps: f64) -> Result<Comparison> {
    pw_stable(&Prepared::new(f.clone()), a, b, eps)
}

pub fn pw_stable(p: &Prepared, a: f64, b: f64, eps: f64) -> Result<Comparison> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("ε must be positive, got {eps}")));
    }
    let t = pw_terms(p, a, b)?;
    let noise = POINT_ROUNDOFF * p.f.sup_norm().powi(2) * (b - a) * (1.0 + 1.0 / eps);
    Ok(Comparison { lhs: t.lhs, rhs: t.rhs(eps), noise })
}

/// `(b−a)⁻¹|f(a)|² ≤ 2(b−a)⁻²∫ₐᵇ|f|² + (2/3)∫ₐᵇ|f′|²`.
pub fn check_trace(f: &GridFunction, a: f64, b: f64) -> Result<Comparison> {
    trace(&Prepared::new(f.clone()), a, b)
}

pub fn trace(p: &Prepared, a: f64, b: f64) -> Result<Comparison> {
    let [i0, i1, fa, _] = interval_pieces(p, a, b)?;
    let h = b - a;
    let noise = POINT_ROUNDOFF * p.f.sup_norm().powi(2) / h;
    Ok(Comparison { lhs: fa / h, rhs: 2.0 / (h * h) * i0 + 2.0 / 3.0 * i1, noise })
}

/// `δΣ_γ|f(γ)|² ≤ C[∫|f|² + δ^{2θ}∫|ξ|^{2θ}|f̂|²]` with `C = 16π²/3`.
pub fn check_trace_general(f: &GridFunction, gamma: &NodeSequence, delta: f64, theta: f64) -> Result<Comparison> {
    trace_general(f, gamma, delta, theta, constants::TRACE_GENERAL)
}

pub fn trace_general(f: &GridFunction, gamma: &NodeSequence, delta: f64, theta: f64, c: f64) -> Result<Comparison> {
    if !(delta > 0.0) || !(theta >= 1.0) {
        return Err(Error::Parameter(format!("need δ > 0 and θ ≥ 1, got δ = {delta}, θ = {theta}")));
    }
    if let Some(w) = gamma.points().windows(2).find(|w| w[1] - w[0] < delta * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!("gap [{}, {}] shorter than δ = {delta}", w[0], w[1])));
    }
    let g = f.grid();
    let samples = gamma
        .points()
        .iter()
        .map(|&x| point_eval(f, x).map(|v| v.norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    let lhs = delta * quad::sum(samples);
    let moment = quad::sum(f.freq().iter().enumerate().map(|(m, v)| g.xi(m).abs().powf(2.0 * theta) * v.norm_sqr())) * g.dxi();
    Ok(Comparison::new(lhs, c * (f.l2_norm_sqr() + delta.powf(2.0 * theta) * moment)))
}

/// Weighted uncertainty inequality with `Φ(u) = u^θ`: `Φ(t²)∫|f|² ≤ ∫Φ(ξ²)|f̂|² + C_ε tΦ′(t²)Σ_γ|f(γ)|²`,
/// or without the sum when `f` vanishes on a `(2t)⁻¹`-dense `Γ`.
pub fn check_wirt2(f: &GridFunction, gamma: &NodeSequence, t: f64, eps: f64, theta: f64, vanishing: bool) -> Result<Comparison> {
    wirt2(f, gamma, t, eps, theta, vanishing, constants::wirt2(eps))
}

pub fn wirt2(f: &GridFunction, gamma: &NodeSequence, t: f64, eps: f64, theta: f64, vanishing: bool, c_eps: f64) -> Result<Comparison> {
    if !(t > 0.0) || !(eps > 0.0 && eps < 1.0) || !(theta >= 1.0) {
        return Err(Error::Parameter(format!("need t > 0, ε ∈ (0,1), θ ≥ 1; got t = {t}, ε = {eps}, θ = {theta}")));
    }
    let pts = gamma.points();
    if pts.len() < 2 {
        return Err(Error::Precondition("Γ needs at least 2 points".into()));
    }
    let sup = f.sup_norm();
    if sup > 0.0 {
        // Window: where f is above round-off.
        let g = f.grid();
        let big: Vec<f64> = (0..g.size()).filter(|&k| f.space()[k].norm() > 1e-13 * sup).map(|k| g.x(k)).collect();
        let (lo, hi) = (big[0], big[big.len() - 1]);
        if lo < pts[0] || hi > pts[pts.len() - 1] {
            return Err(Error::Precondition(format!("f is not negligible on [{lo:.3}, {hi:.3}], outside Γ's range")));
        }
        let l = if vanishing { 1.0 / (2.0 * t) } else { (1.0 - eps) / (2.0 * t) };
        if !is_l_dense(gamma, l, (lo, hi))? {
            return Err(Error::Precondition(format!("Γ is not {l:.4}-dense on [{lo:.3}, {hi:.3}]")));
        }
    }
    let vals = pts.iter().map(|&x| point_eval(f, x).map(|v| v.norm_sqr())).collect::<Result<Vec<_>>>()?;
    if vanishing && vals.iter().any(|v| v.sqrt() > 1e-9 * sup) {
        return Err(Error::Precondition("f does not vanish on Γ to 1e−9·‖f‖∞".into()));
    }
    let g = f.grid();
    let lhs = t.powf(2.0 * theta) * f.l2_norm_sqr();
    let moment = quad::sum(f.freq().iter().enumerate().map(|(m, v)| g.xi(m).abs().powf(2.0 * theta) * v.norm_sqr())) * g.dxi();
    let rhs = if vanishing {
        moment
    } else {
        moment + c_eps * t * theta * t.powf(2.0 * (theta - 1.0)) * quad::sum(vals)
    };
    Ok(Comparison::new(lhs, rhs))
}

/// Builders for the smooth test functions used by the checks.
pub mod testfn {
    use super::*;

    fn smoothstep(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            let a = (-1.0 / t).exp();
            let b = (-1.0 / (1.0 - t)).exp();
            a / (a + b)
        }
    }

    /// C^∞ plateau: 1 on `[a, b]`, 0 outside `[a − w, b + w]`.
    pub fn plateau(x: f64, a: f64, b: f64, w: f64) -> f64 {
        smoothstep((x - (a - w)) / w) * smoothstep(((b + w) - x) / w)
    }

    /// `g(x)·plateau(x; a, b, w)` on the grid.
    pub fn plateaued(grid: Grid, a: f64, b: f64, w: f64, g: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::from_real_fn(grid, |x| g(x) * plateau(x, a, b, w))
    }

    /// `sin(π(x−a)/(b−a))` on `[a, b]`, the extremal case of the stable PW bound.
    pub fn pw_extremal(grid: Grid, a: f64, b: f64, w: f64) -> Result<GridFunction> {
        plateaued(grid, a, b, w, |x| (PI * (x - a) / (b - a)).sin())
    }
}

/// One failed case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub case_id: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Aggregate over the cases of one inequality. `worst_slack` is relative, `(rhs − lhs)/max(|lhs|,|rhs|)`,
/// over the cases resolved above round-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub cases_run: usize,
    /// Cases where both sides are below the round-off level.
    pub unresolved: usize,
    pub worst_slack: f64,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

impl InequalityReport {
    fn from_cases(name: &str, mut cases: Vec<(String, Comparison)>, tolerance: f64) -> Self {
        cases.sort_by(|a, b| a.0.cmp(&b.0));
        let worst_slack = cases.iter().filter(|(_, c)| c.resolved()).map(|(_, c)| c.relative_slack()).fold(f64::INFINITY, f64::min);
        let unresolved = cases.iter().filter(|(_, c)| !c.resolved()).count();
        let violations = cases
            .iter()
            .filter(|(_, c)| c.violated(tolerance))
            .map(|(id, c)| Violation { case_id: id.clone(), lhs: c.lhs, rhs: c.rhs })
            .collect();
        Self {
            name: name.into(),
            cases_run: cases.len(),
            unresolved,
            worst_slack: if worst_slack.is_finite() { worst_slack } else { 0.0 },
            violations,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseError {
    pub case_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<InequalityReport>,
    pub errors: Vec<CaseError>,
    /// Smallest second difference of the interval right-hand side sampled in ε.
    pub convexity_min_second_difference: f64,
    pub convexity_ok: bool,
}

impl SuiteReport {
    pub fn total_violations(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0 && self.convexity_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub grid_x: f64,
    pub grid_n: usize,
    /// Hermite corpus `h_0..h_{hermite_max}`.
    pub hermite_max: usize,
    pub intervals: Vec<(f64, f64)>,
    pub eps_list: Vec<f64>,
    pub trace_deltas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub wirt2_eps: Vec<f64>,
    pub wirt2_t: Vec<f64>,
    pub tolerance: f64,
    /// Multiplies the frozen constants; values below 1 serve as a negative control.
    pub constant_scale: f64,
    /// When set, each interval is shifted by a uniform fraction in `[−jitter, jitter]` of its length.
    pub seed: Option<u64>,
    pub jitter: f64,
}

impl SuiteConfig {
    /// The configured intervals, jittered when a seed is set.
    pub fn effective_intervals(&self) -> Vec<(f64, f64)> {
        let Some(seed) = self.seed else {
            return self.intervals.clone();
        };
        let mut rng = StdRng::seed_from_u64(seed);
        self.intervals
            .iter()
            .map(|&(a, b)| {
                let shift = rng.random_range(-1.0..=1.0) * self.jitter * (b - a);
                (a + shift, b + shift)
            })
            .collect()
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let mut intervals = Vec::new();
        for c in [-6.0, -2.5, -0.7, 0.0, 0.4, 1.3, 3.0, 5.5] {
            for len in [0.1, 0.35, 1.0, 2.0, 4.0] {
                let a: f64 = c - len / 2.0;
                let b: f64 = c + len / 2.0;
                if a >= -8.0 && b <= 8.0 {
                    intervals.push((a, b));
                }
            }
        }
        Self {
            grid_x: 12.0,
            grid_n: 4096,
            hermite_max: 20,
            intervals,
            eps_list: vec![0.1, 1.0, 10.0],
            trace_deltas: vec![0.25, 0.5, 1.0],
            thetas: vec![1.0, 2.0],
            wirt2_eps: vec![0.1, 0.5, 0.9],
            wirt2_t: vec![1.0, 2.0, 4.0],
            tolerance: 1e-9,
            constant_scale: 1.0,
            seed: None,
            jitter: 0.05,
        }
    }
}

/// Standard corpus: Hermite functions `h_0..h_{n_max}` on the configured grid.
pub fn default_corpus(cfg: &SuiteConfig) -> Result<Vec<GridFunction>> {
    hermite_basis(cfg.hermite_max, Grid::new(cfg.grid_x, cfg.grid_n)?)
}

fn integer_lattice(h: f64, r: f64, p: f64) -> Result<NodeSequence> {
    let k = (r / h).floor() as i64;
    NodeSequence::new((-k..=k).map(|j| j as f64 * h).collect(), p, Some(r))
}

/// Runs every inequality over `corpus` × the configured intervals, node sets and parameters.
/// The sampled variant runs on `sin(2πtx)·f(x)`, which vanishes on `(2t)⁻¹ℤ`.
pub fn run_suite(corpus: &[GridFunction], cfg: &SuiteConfig) -> Result<SuiteReport> {
    if corpus.is_empty() {
        return Err(Error::InsufficientData("suite corpus is empty".into()));
    }
    let intervals = cfg.effective_intervals();
    let prepared: Vec<Prepared> = corpus.par_iter().map(|f| Prepared::new(f.clone())).collect();
    let mut errors = Vec::new();
    let mut collect = |name: &str, results: Vec<(String, Result<Comparison>)>| {
        let mut ok = Vec::new();
        for (id, r) in results {
            match r {
                Ok(c) => ok.push((id, c)),
                Err(e) => errors.push(CaseError { case_id: format!("{name}/{id}"), message: e.to_string() }),
            }
        }
        InequalityReport::from_cases(name, ok, cfg.tolerance)
    };

    let mut reports = Vec::new();

    let pw: Vec<(String, Result<Comparison>)> = prepared
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| {
            intervals.iter().flat_map(move |&(a, b)| {
                cfg.eps_list.iter().map(move |&e| (format!("f{i:02}/[{a:.3},{b:.3}]/eps={e}"), pw_stable(p, a, b, e).map(|c| c.scaled(cfg.constant_scale))))
            })
        })
        .collect();
    reports.push(collect("pw_stable", pw));

    let tr: Vec<(String, Result<Comparison>)> = prepared
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| intervals.iter().map(move |&(a, b)| (format!("f{i:02}/[{a:.3},{b:.3}]"), trace(p, a, b).map(|c| c.scaled(cfg.constant_scale)))))
        .collect();
    reports.push(collect("trace", tr));

    let grid = *corpus[0].grid();
    let reach = 0.8 * grid.half_width();
    let mut gammas = Vec::new();
    for &d in &cfg.trace_deltas {
        gammas.push((format!("lattice{d}"), d, integer_lattice(d, reach, 2.0)?));
        // Irregular set: δ-spaced with a stretch every third gap.
        let mut pts = vec![-reach];
        let mut i = 0;
        while *pts.last().unwrap() + d * 1.6 <= reach {
            let step = if i % 3 == 2 { 1.6 * d } else { d };
            pts.push(pts.last().unwrap() + step);
            i += 1;
        }
        gammas.push((format!("irregular{d}"), d, NodeSequence::new(pts, 2.0, Some(reach))?));
    }
    let c_trace = constants::TRACE_GENERAL * cfg.constant_scale;
    let tg: Vec<(String, Result<Comparison>)> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, f)| {
            gammas.iter().flat_map(move |(gid, d, g)| {
                cfg.thetas.iter().map(move |&th| (format!("f{i:02}/{gid}/theta={th}"), trace_general(f, g, *d, th, c_trace)))
            })
        })
        .collect();
    reports.push(collect("trace_general", tg));

    let mut w2 = Vec::new();
    let mut w2v = Vec::new();
    for &t in &cfg.wirt2_t {
        let lattice_v = integer_lattice(1.0 / (2.0 * t), reach, 2.0)?;
        let vanishing: Vec<GridFunction> = corpus
            .iter()
            .map(|f| {
                let s: Vec<C64> = f.space().iter().enumerate().map(|(k, v)| v * (2.0 * PI * t * grid.x(k)).sin()).collect();
                GridFunction::from_space(grid, s)
            })
            .collect::<Result<_>>()?;
        for &e in &cfg.wirt2_eps {
            let h = (1.0 - e) / (2.0 * t);
            let lattice = integer_lattice(h, reach, 2.0)?;
            let c_eps = constants::wirt2(e) * cfg.constant_scale;
            for &th in &cfg.thetas {
                let part: Vec<(String, Result<Comparison>)> = corpus
                    .par_iter()
                    .enumerate()
                    .map(|(i, f)| (format!("f{i:02}/t={t}/eps={e}/theta={th}"), wirt2(f, &lattice, t, e, th, false, c_eps)))
                    .collect();
                w2.extend(part);
            }
        }
        for &th in &cfg.thetas {
            let part: Vec<(String, Result<Comparison>)> = vanishing
                .par_iter()
                .enumerate()
                .map(|(i, f)| (format!("sin*f{i:02}/t={t}/theta={th}"), wirt2(f, &lattice_v, t, 0.5, th, true, 0.0)))
                .collect();
            w2v.extend(part);
        }
    }
    reports.push(collect("wirt2_sampled", w2));
    reports.push(collect("wirt2_vanishing", w2v));

    // Convexity of ε ↦ (1+ε)D + (1+1/ε)B on a uniform ε grid.
    let eps_grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
    let mut min_d2 = f64::INFINITY;
    for p in prepared.iter().take(4) {
        for &(a, b) in intervals.iter().take(10) {
            if let Ok(t) = pw_terms(p, a, b) {
                let v: Vec<f64> = eps_grid.iter().map(|&e| t.rhs(e)).collect();
                for w in v.windows(3) {
                    let scale = w[1].abs().max(1e-300);
                    min_d2 = min_d2.min((w[0] - 2.0 * w[1] + w[2]) / scale);
                }
            }
        }
    }
    if !min_d2.is_finite() {
        min_d2 = 0.0;
    }
    Ok(SuiteReport { reports, errors, convexity_min_second_difference: min_d2, convexity_ok: min_d2 >= -1e-9 })
}
