//! Alternating correction scheme for free interpolation: Φ-corrections fix the space
//! residual, Ψ-corrections the frequency residual, and each disturbs the other side.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{FamilySide, InterpolantFamily};
use crate::spectral::{point_eval, point_eval_freq, GridFunction};
use crate::{Error, Result, C64};

/// Prescribed value at a node of one of the families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub side: FamilySide,
    pub node: f64,
    pub value: C64,
}

/// Outstanding residuals `α` at the Φ-nodes and `β` at the Ψ-nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualState {
    pub alpha: DVector<C64>,
    pub beta: DVector<C64>,
    pub iteration: usize,
}

/// `f(λ) = Σ Ψ_μ(λ)β_μ` couplings (`p`) and `f̂(μ) = Σ Φ̂_λ(μ)α_λ` couplings (`q`).
#[derive(Debug, Clone)]
pub struct CrossOperator<'a> {
    pub phi: &'a InterpolantFamily,
    pub psi: &'a InterpolantFamily,
    pub p: DMatrix<C64>,
    pub q: DMatrix<C64>,
    weights_phi: Vec<f64>,
    weights_psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FreeSolution {
    pub f: GridFunction,
    /// Weighted residual norm before each step.
    pub history: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub converged: bool,
    /// `max |f(ν) − target(ν)|` over family nodes inside the grid, by band-limited evaluation.
    pub interpolation_error: f64,
    pub coeffs_phi: Vec<C64>,
    pub coeffs_psi: Vec<C64>,
}

/// Relative residual at which the iteration stops.
pub const STOP_RATIO: f64 = 1e-14;

impl<'a> CrossOperator<'a> {
    pub fn new(phi: &'a InterpolantFamily, psi: &'a InterpolantFamily) -> Result<Self> {
        if phi.side != FamilySide::Space || psi.side != FamilySide::Frequency {
            return Err(Error::Parameter("expected a space-side Φ family and a frequency-side Ψ family".into()));
        }
        let g = phi.functions[0].grid();
        let space_ok = |v: &f64| v.abs() <= g.half_width();
        let freq_ok = |v: &f64| v.abs() <= g.freq_half_width();
        if !phi.nodes.iter().all(space_ok) || !psi.nodes.iter().all(freq_ok) {
            return Err(Error::Range("family nodes must lie inside the grid".into()));
        }
        let p_cols: Vec<Vec<C64>> = psi
            .functions
            .par_iter()
            .map(|f| phi.nodes.iter().map(|&l| point_eval(f, l)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let q_cols: Vec<Vec<C64>> = phi
            .functions
            .par_iter()
            .map(|f| psi.nodes.iter().map(|&m| point_eval_freq(f, m)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let p = DMatrix::from_fn(phi.nodes.len(), psi.nodes.len(), |i, j| p_cols[j][i]);
        let q = DMatrix::from_fn(psi.nodes.len(), phi.nodes.len(), |i, j| q_cols[j][i]);
        let a = phi.constants.a;
        let weights_phi = phi.nodes.iter().map(|v| a * v.abs().powf(phi.exponent)).collect();
        let weights_psi = psi.nodes.iter().map(|v| a * v.abs().powf(psi.exponent)).collect();
        Ok(Self { phi, psi, p, q, weights_phi, weights_psi })
    }

    /// `Σ|α_λ|e^{a|λ|^p} + Σ|β_μ|e^{a|μ|^q}`.
    pub fn weighted_norm(&self, state: &ResidualState) -> f64 {
        let side = |v: &DVector<C64>, w: &[f64]| v.iter().zip(w).map(|(c, e)| c.norm() * e.exp()).sum::<f64>();
        side(&state.alpha, &self.weights_phi) + side(&state.beta, &self.weights_psi)
    }

    pub fn initial_state(&self, targets: &[Target], l: f64) -> Result<ResidualState> {
        if let Some(v) = self.phi.nodes.iter().chain(&self.psi.nodes).find(|v| v.abs() <= l) {
            return Err(Error::Precondition(format!("family node {v} lies inside [−L, L] with L = {l}")));
        }
        let mut alpha = DVector::from_element(self.phi.nodes.len(), C64::new(0.0, 0.0));
        let mut beta = DVector::from_element(self.psi.nodes.len(), C64::new(0.0, 0.0));
        for t in targets {
            let (nodes, slot) = match t.side {
                FamilySide::Space => (&self.phi.nodes, &mut alpha),
                FamilySide::Frequency => (&self.psi.nodes, &mut beta),
            };
            let i = nodes
                .iter()
                .position(|v| (v - t.node).abs() <= 1e-12 * (1.0 + v.abs()))
                .ok_or_else(|| Error::Precondition(format!("target node {} is not a family node with |ν| > L", t.node)))?;
            slot[i] += t.value;
        }
        Ok(ResidualState { alpha, beta, iteration: 0 })
    }

    /// One correction: returns the residual left after adding `Σαφ + Σβψ`.
    pub fn step(&self, state: &ResidualState) -> ResidualState {
        ResidualState { alpha: -(&self.p * &state.beta), beta: -(&self.q * &state.alpha), iteration: state.iteration + 1 }
    }

    pub fn solve(&self, targets: &[Target], l: f64, max_iter: usize) -> Result<FreeSolution> {
        let mut state = self.initial_state(targets, l)?;
        let mut cp = DVector::from_element(self.phi.nodes.len(), C64::new(0.0, 0.0));
        let mut cq = DVector::from_element(self.psi.nodes.len(), C64::new(0.0, 0.0));
        let h0 = self.weighted_norm(&state);
        let mut history = vec![h0];
        let mut ratios = Vec::new();
        let mut converged = h0 == 0.0;
        let mut rising = 0;
        while !converged && state.iteration < max_iter {
            cp += &state.alpha;
            cq += &state.beta;
            state = self.step(&state);
            let h = self.weighted_norm(&state);
            let ratio = h / history[history.len() - 1];
            ratios.push(ratio);
            history.push(h);
            rising = if ratio >= 1.0 { rising + 1 } else { 0 };
            if rising >= 3 {
                return Err(Error::Divergence(format!("weighted residual grew for 3 consecutive steps (last ratio {ratio:.3})")));
            }
            converged = h <= STOP_RATIO * h0;
        }
        let grid = *self.phi.functions[0].grid();
        let terms: Vec<(C64, &GridFunction)> = cp
            .iter()
            .zip(&self.phi.functions)
            .chain(cq.iter().zip(&self.psi.functions))
            .filter(|(c, _)| c.norm() > 0.0)
            .map(|(c, f)| (*c, f))
            .collect();
        let f = GridFunction::combine(grid, &terms)?;
        let want = |side: FamilySide, v: f64| {
            targets
                .iter()
                .filter(|t| t.side == side && (t.node - v).abs() <= 1e-12 * (1.0 + v.abs()))
                .map(|t| t.value)
                .sum::<C64>()
        };
        let err_phi = self
            .phi
            .nodes
            .par_iter()
            .map(|&v| point_eval(&f, v).map(|x| (x - want(FamilySide::Space, v)).norm()))
            .collect::<Result<Vec<_>>>()?;
        let err_psi = self
            .psi
            .nodes
            .par_iter()
            .map(|&v| point_eval_freq(&f, v).map(|x| (x - want(FamilySide::Frequency, v)).norm()))
            .collect::<Result<Vec<_>>>()?;
        let interpolation_error = err_phi.into_iter().chain(err_psi).fold(0.0, f64::max);
        Ok(FreeSolution {
            f,
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            history,
            ratios,
            converged,
            interpolation_error,
            coeffs_phi: cp.iter().copied().collect(),
            coeffs_psi: cq.iter().copied().collect(),
        })
    }
}

/// Builds the coupling matrices and runs the iteration for `targets`.
pub fn solve_free_interpolation(
    phi: &InterpolantFamily,
    psi: &InterpolantFamily,
    targets: &[Target],
    l: f64,
    max_iter: usize,
) -> Result<FreeSolution> {
    CrossOperator::new(phi, psi)?.solve(targets, l, max_iter)
}
