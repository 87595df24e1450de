//! Crystalline-measure sections `ν_x = Σ b_μ(x)δ_μ`, `ν̂_x = δ_x − Σ a_λ(x)δ_λ` built from
//! an interpolation basis, and the pairing check `⟨ν, ĝ⟩ = ⟨ν̂, g⟩`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frames::{build_interpolation_basis, build_sampling_operator, estimate_frame_bounds, InterpolationBasis, Side};
use crate::io::MeasureFile;
use crate::nodes::NodeSequence;
use crate::quad;
use crate::spectral::{point_eval, point_eval_freq, Grid, GridFunction, SpaceParams};
use crate::{Error, Result, C64};

pub const PAIRING_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    support: Vec<f64>,
    weights: Vec<C64>,
    pub label: String,
}

impl DiscreteMeasure {
    /// Sorts by support; rejects repeated points and length mismatch.
    pub fn new(mut atoms: Vec<(f64, C64)>, label: impl Into<String>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = atoms.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::Parameter(format!("repeated support point {}", w[0].0)));
        }
        let (support, weights) = atoms.into_iter().unzip();
        Ok(Self { support, weights, label: label.into() })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn l1_norm(&self) -> f64 {
        quad::sum(self.weights.iter().map(|w| w.norm()))
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            support: self.support.clone(),
            weights_re: self.weights.iter().map(|w| w.re).collect(),
            weights_im: self.weights.iter().map(|w| w.im).collect(),
            label: self.label.clone(),
        }
    }

    pub fn from_file(f: &MeasureFile) -> Result<Self> {
        let w = f.weights()?;
        Self::new(f.support.iter().copied().zip(w).collect(), f.label.clone())
    }
}

/// `(ν_x, ν̂_x)`; `x` must not be a space-side node of the basis.
pub fn build_crystalline_measure(basis: &InterpolationBasis, x: f64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let g = basis.grid;
    if !(x.abs() <= g.half_width()) {
        return Err(Error::Range(format!("x = {x} outside the grid")));
    }
    if basis.nodes.iter().any(|n| n.side == Side::Space && (n.value - x).abs() <= 1e-12 * (1.0 + x.abs())) {
        return Err(Error::Configuration(format!("x = {x} is a node of Λ; build the basis with it removed")));
    }
    let vals = basis.values_at(x)?;
    let mut nu = Vec::new();
    let mut nu_hat = vec![(x, C64::new(1.0, 0.0))];
    for (n, v) in basis.nodes.iter().zip(vals) {
        match n.side {
            Side::Frequency => nu.push((n.value, v)),
            Side::Space => nu_hat.push((n.value, -v)),
        }
    }
    let nu = DiscreteMeasure::new(nu, format!("nu_x={x}"))?;
    let nu_hat = DiscreteMeasure::new(nu_hat, format!("nu_hat_x={x}"))?;
    if nu.l1_norm() < 1e-8 {
        return Err(Error::DegenerateFrame(format!("‖ν‖₁ = {:.3e} below 1e−8", nu.l1_norm())));
    }
    Ok((nu, nu_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    /// `Σ ν(μ) ĝ(μ)`.
    pub lhs: C64,
    /// `Σ ν̂(λ) g(λ)`.
    pub rhs: C64,
}

impl Pairing {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).norm() / (1.0 + self.lhs.norm())
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.relative_gap() <= tol
    }
}

pub fn verify_pairing(nu: &DiscreteMeasure, nu_hat: &DiscreteMeasure, g: &GridFunction) -> Result<Pairing> {
    let lhs: Vec<C64> = nu
        .support
        .par_iter()
        .zip(&nu.weights)
        .map(|(&m, w)| point_eval_freq(g, m).map(|v| w * v))
        .collect::<Result<_>>()?;
    let rhs: Vec<C64> = nu_hat
        .support
        .par_iter()
        .zip(&nu_hat.weights)
        .map(|(&l, w)| point_eval(g, l).map(|v| w * v))
        .collect::<Result<_>>()?;
    Ok(Pairing { lhs: quad::csum(lhs), rhs: quad::csum(rhs) })
}

/// Builds the basis on `Λ ∖ removed` and returns the measures for each removed point.
pub fn measures_after_removal(
    lambda: &NodeSequence,
    mu: &NodeSequence,
    params: SpaceParams,
    grid: Grid,
    m: usize,
    removed: &[f64],
) -> Result<Vec<(DiscreteMeasure, DiscreteMeasure)>> {
    let reduced = lambda.without(removed);
    let op = build_sampling_operator(&reduced, mu, params, grid)?;
    let model = estimate_frame_bounds(&op, m)?;
    let basis = build_interpolation_basis(&model)?;
    removed.iter().map(|&x| build_crystalline_measure(&basis, x)).collect()
}

/// Numerical rank of the `ν` weight vectors (relative singular-value cutoff 1e−8).
pub fn weight_span_rank(measures: &[DiscreteMeasure]) -> usize {
    if measures.is_empty() {
        return 0;
    }
    let n = measures[0].weights.len();
    let a = DMatrix::from_fn(n, measures.len(), |r, c| measures[c].weights.get(r).copied().unwrap_or_default());
    let sv = a.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&v| v > 1e-8 * top).count()
}

/// Ranks of the span as the first 1, 2, … of `removed` are taken out of Λ.
pub fn span_growth(
    lambda: &NodeSequence,
    mu: &NodeSequence,
    params: SpaceParams,
    grid: Grid,
    m: usize,
    removed: &[f64],
) -> Result<Vec<usize>> {
    (1..=removed.len())
        .map(|k| {
            let ms = measures_after_removal(lambda, mu, params, grid, m, &removed[..k])?;
            let nus: Vec<DiscreteMeasure> = ms.into_iter().map(|(nu, _)| nu).collect();
            Ok(weight_span_rank(&nus))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    /// Smallest `C` with `|Λ∩[−T,T]| + |M∩[−W,W]| ≥ 4WT − C log²(4WT)` on the sample.
    pub fitted_c: f64,
    pub samples: usize,
    pub worst: (f64, f64),
}

/// Scans `(T, W)` on a `steps × steps` grid over `[lo, hi]²`.
pub fn counting_check(lambda: &NodeSequence, mu: &NodeSequence, lo: f64, hi: f64, steps: usize) -> Result<CountingReport> {
    if steps < 2 || !(lo > 0.0 && hi > lo) {
        return Err(Error::Parameter("need steps ≥ 2 and 0 < lo < hi".into()));
    }
    let count = |s: &NodeSequence, r: f64| s.points().iter().filter(|v| v.abs() <= r).count() as f64;
    let mut fitted_c = 0.0f64;
    let mut worst = (lo, lo);
    for i in 0..steps {
        let t = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let w = lo + (hi - lo) * j as f64 / (steps - 1) as f64;
            let area = 4.0 * w * t;
            let need = (area - count(lambda, t) - count(mu, w)) / area.ln().powi(2);
            if need > fitted_c {
                fitted_c = need;
                worst = (t, w);
            }
        }
    }
    Ok(CountingReport { fitted_c, samples: steps * steps, worst })
}
