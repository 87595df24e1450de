//! Weighted sampling operator `f ↦ ((f(λ)), (f̂(μ)))`, frame-bound estimates on a
//! Hermite subspace, the interpolation basis `(a_λ, b_μ)` and reconstruction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nodes::{is_p_separated, NodeSequence};
use crate::quad;
use crate::spectral::{hermite_basis, hspq_inner, hspq_norm, point_eval, point_eval_freq, Grid, GridFunction, SpaceParams};
use crate::{Error, Result, C64};

/// Nodes beyond this fraction of the grid half-width are dropped (both sides).
pub const CLIP_FRACTION: f64 = 0.8;
/// Hermite subspace dimension limit.
pub const MAX_BASIS: usize = 60;
/// Relative eigenvalue cutoff of the pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Which side a sample row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Space,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub side: Side,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOperator {
    pub lambda: NodeSequence,
    pub mu: NodeSequence,
    pub params: SpaceParams,
    pub grid: Grid,
    /// Square roots of `(1+|λ|)^{(2s−1)p+1}`.
    pub lambda_weights: Vec<f64>,
    /// Square roots of `(1+|μ|)^{(2s−1)q+1}`.
    pub mu_weights: Vec<f64>,
    pub clipped: usize,
}

/// Squared weight `(1+|x|)^{(2s−1)e+1}`.
pub fn squared_weight(x: f64, s: f64, e: f64) -> f64 {
    (1.0 + x.abs()).powf((2.0 * s - 1.0) * e + 1.0)
}

pub fn build_sampling_operator(lambda: &NodeSequence, mu: &NodeSequence, params: SpaceParams, grid: Grid) -> Result<SamplingOperator> {
    if !params.frame_admissible() {
        return Err(Error::Parameter(format!("s·min(p,q) = {} < 1", params.s * params.p.min(params.q))));
    }
    let l = lambda.clip(CLIP_FRACTION * grid.half_width());
    let m = mu.clip(CLIP_FRACTION * grid.half_width().min(grid.freq_half_width()));
    if l.is_empty() || m.is_empty() {
        return Err(Error::Configuration("no nodes left after clipping to the grid".into()));
    }
    let clipped = lambda.len() + mu.len() - l.len() - m.len();
    let lambda_weights = l.points().iter().map(|&x| squared_weight(x, params.s, params.p).sqrt()).collect();
    let mu_weights = m.points().iter().map(|&x| squared_weight(x, params.s, params.q).sqrt()).collect();
    Ok(SamplingOperator { lambda: l, mu: m, params, grid, lambda_weights, mu_weights, clipped })
}

impl SamplingOperator {
    pub fn rows(&self) -> usize {
        self.lambda.len() + self.mu.len()
    }

    /// Row order: Λ ascending, then M ascending.
    pub fn nodes(&self) -> Vec<Node> {
        let l = self.lambda.points().iter().map(|&value| Node { side: Side::Space, value });
        let m = self.mu.points().iter().map(|&value| Node { side: Side::Frequency, value });
        l.chain(m).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.lambda_weights.iter().chain(&self.mu_weights).copied().collect()
    }

    /// Unweighted samples `f(λ)`, `f̂(μ)` in row order.
    pub fn raw_samples(&self, f: &GridFunction) -> Result<Vec<C64>> {
        let mut out: Vec<C64> = self.lambda.points().par_iter().map(|&x| point_eval(f, x)).collect::<Result<_>>()?;
        let fr: Vec<C64> = self.mu.points().par_iter().map(|&x| point_eval_freq(f, x)).collect::<Result<_>>()?;
        out.extend(fr);
        Ok(out)
    }

    /// Weighted samples `Tf`.
    pub fn apply(&self, f: &GridFunction) -> Result<Vec<C64>> {
        let raw = self.raw_samples(f)?;
        Ok(raw.into_iter().zip(self.weights()).map(|(v, w)| v * w).collect())
    }

    /// `‖Tf‖² = Σ w_λ²|f(λ)|² + Σ w_μ²|f̂(μ)|²`.
    pub fn energy(&self, f: &GridFunction) -> Result<f64> {
        Ok(quad::sum(self.apply(f)?.iter().map(|v| v.norm_sqr())))
    }
}

/// Frame model on the Hermite subspace `span{h_0..h_{m−1}}`. `a_est`, `b_est` are
/// subspace-restricted lower/upper frame constants.
#[derive(Debug, Clone)]
pub struct FrameModel {
    pub op: SamplingOperator,
    pub m: usize,
    pub a_est: f64,
    pub b_est: f64,
    pub basis: Vec<GridFunction>,
    pub gram: DMatrix<C64>,
    pub sample_matrix: DMatrix<C64>,
    /// Active rows of `sample_matrix` (all by default).
    pub active: Vec<bool>,
    chol_l: DMatrix<C64>,
    eig_vectors: DMatrix<C64>,
    eig_values: DVector<f64>,
    /// `L⁻¹S*` restricted to active rows.
    whitened: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub params: SpaceParams,
    pub m: usize,
    pub rows: usize,
    pub clipped_nodes: usize,
    /// Restricted lower frame constant.
    pub a_est: f64,
    /// Restricted upper frame constant.
    pub b_est: f64,
    pub condition: f64,
    pub gram_condition: f64,
}

/// Generalized extremal eigenvalues of the pencil `(S*S, G)` on `span{h_0..h_{m−1}}`.
pub fn estimate_frame_bounds(op: &SamplingOperator, m: usize) -> Result<FrameModel> {
    if m == 0 || m > MAX_BASIS {
        return Err(Error::Parameter(format!("basis dimension must lie in 1..={MAX_BASIS}, got {m}")));
    }
    let basis = hermite_basis(m - 1, op.grid)?;
    let weights = op.weights();
    let columns: Vec<Vec<C64>> = basis.par_iter().map(|h| op.raw_samples(h)).collect::<Result<_>>()?;
    let rows = op.rows();
    let sample_matrix = DMatrix::from_fn(rows, m, |r, j| columns[j][r] * weights[r]);
    let mut gram = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for i in 0..m {
        for j in 0..=i {
            let v = hspq_inner(&basis[i], &basis[j], &op.params);
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
    }
    FrameModel::assemble(op.clone(), basis, gram, sample_matrix, vec![true; rows])
}

impl FrameModel {
    fn assemble(
        op: SamplingOperator,
        basis: Vec<GridFunction>,
        gram: DMatrix<C64>,
        sample_matrix: DMatrix<C64>,
        active: Vec<bool>,
    ) -> Result<Self> {
        let m = basis.len();
        let chol = gram.clone().cholesky().ok_or_else(|| {
            let n = (1..=m).find(|&k| gram.view((0, 0), (k, k)).clone_owned().cholesky().is_none()).unwrap_or(m);
            Error::Conditioning(format!("Gram matrix not positive definite at n = {}", n - 1))
        })?;
        let chol_l = chol.l();
        let idx: Vec<usize> = (0..active.len()).filter(|&r| active[r]).collect();
        let s_act = DMatrix::from_fn(idx.len(), m, |r, j| sample_matrix[(idx[r], j)]);
        let whitened = chol_l
            .solve_lower_triangular(&s_act.adjoint())
            .ok_or_else(|| Error::Conditioning("triangular solve failed".into()))?;
        let pencil = &whitened * whitened.adjoint();
        let eig = SymmetricEigen::new(pencil);
        let a_est = eig.eigenvalues.min();
        let b_est = eig.eigenvalues.max();
        Ok(Self {
            op,
            m,
            a_est,
            b_est,
            basis,
            gram,
            sample_matrix,
            active,
            chol_l,
            eig_vectors: eig.eigenvectors,
            eig_values: eig.eigenvalues,
            whitened,
        })
    }

    /// The same model with the given rows switched off.
    pub fn with_inactive(&self, rows: &[usize]) -> Result<Self> {
        let mut active = self.active.clone();
        for &r in rows {
            if r >= active.len() {
                return Err(Error::Parameter(format!("row {r} out of range")));
            }
            active[r] = false;
        }
        Self::assemble(self.op.clone(), self.basis.clone(), self.gram.clone(), self.sample_matrix.clone(), active)
    }

    pub fn active_rows(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Numerical rank of the whitened sample matrix.
    pub fn rank(&self) -> usize {
        let top = self.eig_values.max().max(0.0);
        self.eig_values.iter().filter(|&&v| v > PINV_CUTOFF * top).count()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig_values.iter().copied().collect()
    }

    /// Generalized eigenvector of the pencil for eigenvalue index `k`, in basis coefficients.
    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        let u = self.eig_vectors.column(k).clone_owned();
        self.chol_l.adjoint().solve_upper_triangular(&u).unwrap_or(u)
    }

    /// Basis coefficients of `Σ_j c_j h_j`.
    pub fn function(&self, coeffs: &[C64]) -> Result<GridFunction> {
        let terms: Vec<(C64, &GridFunction)> = coeffs.iter().copied().zip(self.basis.iter()).collect();
        GridFunction::combine(self.op.grid, &terms)
    }

    /// `c*Gc`, the squared `H_{s,p,q}` norm of a coefficient vector.
    pub fn coeff_norm_sqr(&self, c: &[C64]) -> f64 {
        let v = DVector::from_column_slice(c);
        (v.adjoint() * &self.gram * &v)[(0, 0)].re
    }

    /// `G`-orthonormal pseudo-inverse `T⁺` as an `m × active_rows` matrix.
    fn pinv(&self) -> DMatrix<C64> {
        let top = self.eig_values.max().max(0.0);
        let inv = self.eig_values.map(|v| if v > PINV_CUTOFF * top { 1.0 / v } else { 0.0 });
        let u = &self.eig_vectors;
        let mut scaled = u.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::new(inv[k], 0.0);
        }
        let d = scaled * u.adjoint() * &self.whitened;
        self.chol_l.adjoint().solve_upper_triangular(&d).unwrap_or(d)
    }

    /// Least-squares coefficients of the function whose weighted samples best match `y`.
    pub fn solve(&self, weighted_samples: &[C64]) -> Result<Vec<C64>> {
        let n = self.active_rows();
        if weighted_samples.len() != n {
            return Err(Error::Format(format!("expected {n} samples, got {}", weighted_samples.len())));
        }
        let y = DVector::from_column_slice(weighted_samples);
        Ok((self.pinv() * y).iter().copied().collect())
    }

    pub fn report(&self) -> FrameReport {
        let g = SymmetricEigen::new(self.gram.clone()).eigenvalues;
        FrameReport {
            params: self.op.params,
            m: self.m,
            rows: self.active_rows(),
            clipped_nodes: self.op.clipped,
            a_est: self.a_est,
            b_est: self.b_est,
            condition: self.b_est / self.a_est,
            gram_condition: g.max() / g.min(),
        }
    }
}

/// `a_λ`, `b_μ` as coefficient vectors on the Hermite subspace of the model.
#[derive(Debug, Clone)]
pub struct InterpolationBasis {
    pub nodes: Vec<Node>,
    pub params: SpaceParams,
    /// Column `r` holds the coefficients of the function attached to `nodes[r]`.
    pub coeffs: DMatrix<C64>,
    pub basis: Vec<GridFunction>,
    pub grid: Grid,
    /// `1/√A_est`.
    pub constant: f64,
    /// `‖T(a_r) − e_r‖` restricted to the range of `T`.
    pub residual_norms: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Builds `a_λ = T⁺e_λ`, `b_μ = T⁺e_μ` with unweighted unit samples.
pub fn build_interpolation_basis(model: &FrameModel) -> Result<InterpolationBasis> {
    if !(model.a_est >= 1e-8) {
        return Err(Error::DegenerateFrame(format!("A_est = {:.3e} below 1e−8", model.a_est)));
    }
    let all_nodes = model.op.nodes();
    let all_w = model.op.weights();
    let idx: Vec<usize> = (0..all_nodes.len()).filter(|&r| model.active[r]).collect();
    let pinv = model.pinv();
    let mut coeffs = pinv.clone();
    for (c, &r) in idx.iter().enumerate() {
        coeffs.column_mut(c).scale_mut(all_w[r]);
    }
    // Projection residual: T a_r against the weighted unit vector.
    let s_act = DMatrix::from_fn(idx.len(), model.m, |r, j| model.sample_matrix[(idx[r], j)]);
    let proj = &s_act * &coeffs;
    let residual_norms = (0..idx.len())
        .map(|c| {
            let col = proj.column(c);
            let w = all_w[idx[c]];
            // P e_r = T T⁺ e_r; the residual vs e_r is the component outside range(T).
            quad::sum(col.iter().enumerate().map(|(r, v)| (v - if r == c { C64::new(w, 0.0) } else { C64::new(0.0, 0.0) }).norm_sqr())).sqrt()
        })
        .collect();
    let norms = (0..idx.len())
        .map(|c| {
            let v: Vec<C64> = coeffs.column(c).iter().copied().collect();
            model.coeff_norm_sqr(&v).max(0.0).sqrt()
        })
        .collect();
    Ok(InterpolationBasis {
        nodes: idx.iter().map(|&r| all_nodes[r]).collect(),
        params: model.op.params,
        coeffs,
        basis: model.basis.clone(),
        grid: model.op.grid,
        constant: 1.0 / model.a_est.sqrt(),
        residual_norms,
        norms,
    })
}

impl InterpolationBasis {
    pub fn position(&self, node: Node) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.side == node.side && (n.value - node.value).abs() <= 1e-12 * (1.0 + node.value.abs()))
    }

    /// The grid function `a_λ` or `b_μ` of row `r`.
    pub fn function(&self, r: usize) -> Result<GridFunction> {
        let terms: Vec<(C64, &GridFunction)> = self.coeffs.column(r).iter().copied().zip(self.basis.iter()).collect();
        GridFunction::combine(self.grid, &terms)
    }

    /// Values of every basis function at `x` (space side), in row order.
    pub fn values_at(&self, x: f64) -> Result<Vec<C64>> {
        let h: Vec<C64> = self.basis.iter().map(|b| point_eval(b, x)).collect::<Result<_>>()?;
        let hv = DVector::from_vec(h);
        Ok((self.coeffs.transpose() * hv).iter().copied().collect())
    }

    /// Basis-growth bound exponent `(s−½)e+½` for the side's exponent `e`.
    pub fn growth_exponent(&self, side: Side) -> f64 {
        let e = match side {
            Side::Space => self.params.p,
            Side::Frequency => self.params.q,
        };
        (self.params.s - 0.5) * e + 0.5
    }

    /// Least-squares slope of `log‖a_λ‖` against `log(1+|λ|)` over `lo ≤ |λ| ≤ hi` on one side.
    pub fn growth_slope(&self, side: Side, lo: f64, hi: f64) -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .nodes
            .iter()
            .zip(&self.norms)
            .filter(|(n, nr)| n.side == side && n.value.abs() >= lo && n.value.abs() <= hi && **nr > 0.0)
            .map(|(n, nr)| ((1.0 + n.value.abs()).ln(), nr.ln()))
            .unzip();
        if x.len() < 3 {
            return Err(Error::InsufficientData(format!("only {} nodes in [{lo}, {hi}]", x.len())));
        }
        Ok(quad::linear_fit(&x, &y).0)
    }

    /// Largest `‖a_r‖/(1+|node|)^{growth}` over all rows.
    pub fn fitted_norm_constant(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.norms)
            .map(|(n, nr)| nr / (1.0 + n.value.abs()).powf(self.growth_exponent(n.side)))
            .fold(0.0, f64::max)
    }
}

/// `Σ f(λ)a_λ + Σ f̂(μ)b_μ`. Keys must match the basis nodes exactly.
pub fn reconstruct(basis: &InterpolationBasis, samples_lambda: &[(f64, C64)], samples_mu: &[(f64, C64)]) -> Result<GridFunction> {
    let coeffs = reconstruct_coeffs(basis, samples_lambda, samples_mu)?;
    let terms: Vec<(C64, &GridFunction)> = coeffs.iter().copied().zip(basis.basis.iter()).collect();
    GridFunction::combine(basis.grid, &terms)
}

pub fn reconstruct_coeffs(basis: &InterpolationBasis, samples_lambda: &[(f64, C64)], samples_mu: &[(f64, C64)]) -> Result<Vec<C64>> {
    let expected = basis.nodes.len();
    if samples_lambda.len() + samples_mu.len() != expected {
        return Err(Error::Format(format!("expected {expected} samples, got {}", samples_lambda.len() + samples_mu.len())));
    }
    let mut y = DVector::from_element(expected, C64::new(0.0, 0.0));
    let mut seen = vec![false; expected];
    let all = samples_lambda
        .iter()
        .map(|&(v, s)| (Node { side: Side::Space, value: v }, s))
        .chain(samples_mu.iter().map(|&(v, s)| (Node { side: Side::Frequency, value: v }, s)));
    for (node, s) in all {
        let r = basis
            .position(node)
            .ok_or_else(|| Error::Format(format!("sample key {:?} {} is not a basis node", node.side, node.value)))?;
        if seen[r] {
            return Err(Error::Format(format!("duplicate sample key {}", node.value)));
        }
        seen[r] = true;
        y[r] = s;
    }
    Ok((&basis.coeffs * y).iter().copied().collect())
}

/// Samples of `f` keyed by the basis nodes.
pub fn samples_for(basis: &InterpolationBasis, f: &GridFunction) -> Result<(Vec<(f64, C64)>, Vec<(f64, C64)>)> {
    let mut l = Vec::new();
    let mut m = Vec::new();
    for n in &basis.nodes {
        match n.side {
            Side::Space => l.push((n.value, point_eval(f, n.value)?)),
            Side::Frequency => m.push((n.value, point_eval_freq(f, n.value)?)),
        }
    }
    Ok((l, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsReport {
    pub a_before: f64,
    pub a_after: f64,
    pub removed: Vec<Node>,
    pub rows_after: usize,
    pub rank_after: usize,
    /// False when the remaining rows no longer span the subspace.
    pub complete: bool,
}

/// Removes up to 5 nodes and recomputes the lower constant.
pub fn duffin_schaeffer_demo(model: &FrameModel, removed: &[Node]) -> Result<DsReport> {
    if removed.len() > 5 {
        return Err(Error::Parameter(format!("at most 5 nodes may be removed, got {}", removed.len())));
    }
    let nodes = model.op.nodes();
    let rows: Vec<usize> = removed
        .iter()
        .map(|n| {
            nodes
                .iter()
                .position(|k| k.side == n.side && (k.value - n.value).abs() <= 1e-12 * (1.0 + n.value.abs()))
                .ok_or_else(|| Error::Format(format!("node {} is not in the model", n.value)))
        })
        .collect::<Result<_>>()?;
    let after = model.with_inactive(&rows)?;
    let rank_after = after.rank();
    let complete = after.active_rows() >= model.m && rank_after == model.m;
    Ok(DsReport {
        a_before: model.a_est,
        a_after: if complete { after.a_est } else { 0.0 },
        removed: removed.to_vec(),
        rows_after: after.active_rows(),
        rank_after,
        complete,
    })
}

/// The `k` nodes nearest 0 across both sides.
pub fn nearest_nodes(model: &FrameModel, k: usize) -> Vec<Node> {
    let mut nodes = model.op.nodes();
    nodes.sort_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
    nodes.truncate(k);
    nodes
}

/// Upper constant for `Σ(1+|λ|)|f(λ)|² + Σ(1+|μ|)|f̂(μ)|² ≤ B‖f‖²_𝓗` on separated nodes
/// (p = q = 2): the trace bound on cells of length `c/(1+|λ|)` pointing away from 0 gives
/// `(4/c_Λ)∫(1+x²)|f|² + (8π²c_Λ/3)∫ξ²|f̂|²`, and symmetrically for M.
pub fn upper_frame_constant(lambda: &NodeSequence, mu: &NodeSequence) -> Result<f64> {
    let (_, cl) = is_p_separated(lambda)?;
    let (_, cm) = is_p_separated(mu)?;
    let k = 8.0 * PI * PI / 3.0;
    Ok((4.0 / cl + k * cm).max(4.0 / cm + k * cl))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub r: f64,
    pub slope_lambda: f64,
    pub slope_mu: f64,
    pub decays: bool,
    pub hspq_norm: f64,
    /// Share of the weighted norm carried by the outer 20% of either grid.
    pub edge_share: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub degenerate: bool,
    pub fits: Vec<DecayFit>,
}

const DECAY_NOISE: f64 = 1e-13;

/// Slope of `log sup_{|ν|≥|x|}|v(ν)|` against `log|x|` over nodes with `1 ≤ |x| ≤ reach`.
/// Returns `−∞` when the values fall below round-off before 8 nodes are collected.
fn tail_slope(nodes: &[f64], values: &[f64], reach: f64, scale: f64) -> Result<f64> {
    let mut pairs: Vec<(f64, f64)> = nodes
        .iter()
        .zip(values)
        .filter(|(x, _)| x.abs() >= 1.0 && x.abs() <= reach)
        .map(|(x, v)| (x.abs(), *v))
        .collect();
    if pairs.len() < 8 {
        return Err(Error::InsufficientData(format!("{} nodes in [1, {reach:.2}], need 8", pairs.len())));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut run = 0.0f64;
    let mut env: Vec<(f64, f64)> = pairs
        .into_iter()
        .map(|(x, v)| {
            run = run.max(v);
            (x, run)
        })
        .filter(|(_, v)| *v > DECAY_NOISE * scale)
        .collect();
    env.reverse();
    if env.len() < 8 {
        return Ok(f64::NEG_INFINITY);
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = env.iter().map(|(x, v)| (x.ln(), v.ln())).unzip();
    Ok(quad::linear_fit(&lx, &ly).0)
}

fn weighted_edge_share(f: &GridFunction, params: &SpaceParams) -> f64 {
    let g = f.grid();
    let n = g.size();
    let ef = 2.0 * params.p * params.s;
    let es = 2.0 * params.q * params.s;
    let outer = |k: usize| k < n / 10 || k >= n - n / 10;
    let sp: Vec<f64> = (0..n).map(|k| (1.0 + g.x(k).abs().powf(es)) * f.space()[k].norm_sqr() * g.dx()).collect();
    let fr: Vec<f64> = (0..n).map(|m| (1.0 + g.xi(m).abs().powf(ef)) * f.freq()[m].norm_sqr() * g.dxi()).collect();
    let total = quad::sum(sp.iter().chain(&fr).copied());
    if total == 0.0 {
        return 0.0;
    }
    quad::sum((0..n).filter(|&k| outer(k)).map(|k| sp[k] + fr[k])) / total
}

/// Empirical `|f(λ)| = O(|λ|^{−r})`, `|f̂(μ)| = O(|μ|^{−r})` against the weighted norm at `s = r/min(p,q)`.
pub fn decay_to_schwartz_check(f: &GridFunction, lambda: &NodeSequence, mu: &NodeSequence, r_list: &[f64]) -> Result<DecayReport> {
    let g = f.grid();
    let scale = f.sup_norm().max(f.freq_sup_norm());
    if scale == 0.0 {
        let fits = r_list
            .iter()
            .map(|&r| DecayFit {
                r,
                slope_lambda: f64::NEG_INFINITY,
                slope_mu: f64::NEG_INFINITY,
                decays: true,
                hspq_norm: 0.0,
                edge_share: 0.0,
                consistent: true,
            })
            .collect();
        return Ok(DecayReport { degenerate: true, fits });
    }
    let lr = CLIP_FRACTION * g.half_width();
    let mr = CLIP_FRACTION * g.half_width().min(g.freq_half_width());
    let lp: Vec<f64> = lambda.points().iter().copied().filter(|x| x.abs() <= lr).collect();
    let mp: Vec<f64> = mu.points().iter().copied().filter(|x| x.abs() <= mr).collect();
    let lv: Vec<f64> = lp.par_iter().map(|&x| point_eval(f, x).map(|v| v.norm())).collect::<Result<_>>()?;
    let mv: Vec<f64> = mp.par_iter().map(|&x| point_eval_freq(f, x).map(|v| v.norm())).collect::<Result<_>>()?;
    let slope_lambda = tail_slope(&lp, &lv, lr, scale)?;
    let slope_mu = tail_slope(&mp, &mv, mr, scale)?;
    let (p, q) = (lambda.exponent(), mu.exponent());
    r_list
        .iter()
        .map(|&r| {
            let params = SpaceParams::new(r / p.min(q), p, q)?;
            let norm = hspq_norm(f, &params);
            let edge_share = weighted_edge_share(f, &params);
            let decays = slope_lambda <= -r && slope_mu <= -r;
            Ok(DecayFit {
                r,
                slope_lambda,
                slope_mu,
                decays,
                hspq_norm: norm,
                edge_share,
                consistent: decays == (norm.is_finite() && edge_share <= 1e-3),
            })
        })
        .collect::<Result<_>>()
        .map(|fits| DecayReport { degenerate: false, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::gen_power_nodes;

    #[test]
    fn weights_follow_exponent() {
        assert_eq!(squared_weight(3.0, 1.0, 2.0), 64.0);
        assert!((squared_weight(3.0, 0.5, 2.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_function_has_zero_samples() {
        let l = gen_power_nodes(2.0, 0.8, 20).unwrap();
        let op = build_sampling_operator(&l, &l, SpaceParams::standard(), Grid::standard()).unwrap();
        let z = GridFunction::zero(Grid::standard());
        assert!(op.apply(&z).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn inadmissible_params_rejected() {
        let l = gen_power_nodes(2.0, 0.8, 20).unwrap();
        let p = SpaceParams::new(0.4, 2.0, 2.0).unwrap();
        assert!(build_sampling_operator(&l, &l, p, Grid::standard()).is_err());
    }
}
