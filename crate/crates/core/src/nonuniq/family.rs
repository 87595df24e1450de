//! Cardinal interpolants `Φ_λ = S/(S′(λ)(· − λ))` sampled on the grid, with measured
//! decay constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kp::conjugate;
use super::levin::LevinProduct;
use crate::quad;
use crate::spectral::{point_eval, point_eval_freq, Grid, GridFunction};
use crate::{Error, Result, C64};

/// Which side the cardinal property lives on: `Φ_λ` interpolate in space, `Ψ_μ` in frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilySide {
    Space,
    Frequency,
}

/// `|Φ_λ(x)| ≤ C e^{a|λ|^p − a″|x|^p}`, `|Φ̂_λ(ξ)| ≤ C e^{a|λ|^p − a′|ξ|^q}` on the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConstants {
    pub c: f64,
    pub a: f64,
    pub a_prime: f64,
    pub a_dprime: f64,
    /// `β/s`, the exponent the contour-shift bound predicts for `a′`.
    pub predicted_a_prime: f64,
    /// `a′ > a > a″`.
    pub ordering_ok: bool,
}

#[derive(Debug, Clone)]
pub struct InterpolantFamily {
    pub side: FamilySide,
    /// Exponent on the cardinal side (`p` for Φ, `q` for Ψ).
    pub exponent: f64,
    pub nodes: Vec<f64>,
    pub functions: Vec<GridFunction>,
    pub constants: FamilyConstants,
    /// `max |Φ_λ(λ′) − δ_{λλ′}|` from the product formula.
    pub cardinal_error: f64,
    /// Same from band-limited grid evaluation, relative to `max(1, ‖Φ_λ‖∞)`.
    pub cardinal_error_grid: f64,
}

/// Relative noise level below which samples are ignored in the constant fits.
const NOISE: f64 = 1e-13;

fn own_and_dual(f: &GridFunction, side: FamilySide) -> (&[C64], &[C64]) {
    match side {
        FamilySide::Space => (f.space(), f.freq()),
        FamilySide::Frequency => (f.freq(), f.space()),
    }
}

/// Slope of the binned upper envelope of `log|v|` against `|c|^e`, negated.
fn envelope_rate(values: &[C64], coords: &[f64], e: f64) -> Option<f64> {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let width = 2.0;
    let mut bins: Vec<(usize, f64)> = Vec::new();
    for (v, c) in values.iter().zip(coords) {
        let m = v.norm();
        if m <= NOISE * peak || c.abs() < 1.0 {
            continue;
        }
        let b = (c.abs().powf(e) / width) as usize;
        let l = m.ln();
        match bins.iter_mut().find(|(k, _)| *k == b) {
            Some(slot) => slot.1 = slot.1.max(l),
            None => bins.push((b, l)),
        }
    }
    if bins.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = bins.iter().map(|(k, _)| (*k as f64 + 0.5) * width).collect();
    let ys: Vec<f64> = bins.iter().map(|(_, l)| *l).collect();
    Some(-quad::linear_fit(&xs, &ys).0)
}

fn weighted_sup(values: &[C64], coords: &[f64], e: f64, rate: f64) -> f64 {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    values
        .iter()
        .zip(coords)
        .filter(|(v, _)| v.norm() > NOISE * peak)
        .map(|(v, c)| v.norm().ln() + rate * c.abs().powf(e))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Samples `Φ_ν` for every node `ν` (a real zero of `prod`) on the `side` coordinate of `grid`.
pub fn build_interpolant_family(
    prod: &LevinProduct,
    nodes: &[f64],
    grid: Grid,
    side: FamilySide,
    a: f64,
    eps: f64,
) -> Result<InterpolantFamily> {
    if nodes.is_empty() {
        return Err(Error::InsufficientData("interpolant family needs at least one node".into()));
    }
    if !(a > 0.0 && eps > 0.0) {
        return Err(Error::Parameter(format!("need a > 0 and ε > 0, got a = {a}, ε = {eps}")));
    }
    let p = prod.kp.p;
    let q = conjugate(p);
    let (e_own, e_dual) = match side {
        FamilySide::Space => (p, q),
        FamilySide::Frequency => (q, p),
    };
    let a_dprime = prod.kp.beta - eps;
    if !(a_dprime > 0.0) {
        return Err(Error::Parameter(format!("β − ε = {a_dprime} must be positive")));
    }
    let (coords, dual_coords) = match side {
        FamilySide::Space => (grid.xs(), grid.xis()),
        FamilySide::Frequency => (grid.xis(), grid.xs()),
    };
    let extent = coords.last().copied().unwrap_or(0.0);
    if (-a_dprime * extent.powf(e_own)).exp() > 1e-12 {
        return Err(Error::Precondition(format!("grid half-width {extent} too small: e^{{−a″X^p}} > 1e−12")));
    }
    let cutoff = prod.valid_radius();
    let idx: Vec<usize> = nodes
        .iter()
        .map(|&v| prod.zero_index(C64::new(v, 0.0)).ok_or_else(|| Error::Precondition(format!("node {v} is not a zero of the product"))))
        .collect::<Result<_>>()?;
    let log_s: Vec<Option<C64>> = coords.par_iter().map(|&x| (x.abs() < cutoff).then(|| prod.log_eval(C64::new(x, 0.0)))).collect();
    let log_d: Vec<C64> = idx.par_iter().map(|&i| prod.log_derivative_at_zero(i)).collect();
    let functions: Vec<GridFunction> = idx
        .par_iter()
        .zip(&log_d)
        .map(|(&i, &ld)| {
            let vals: Vec<C64> = coords
                .iter()
                .zip(&log_s)
                .map(|(&x, ls)| ls.map_or(C64::new(0.0, 0.0), |ls| prod.cardinal_with(i, C64::new(x, 0.0), ls, ld)))
                .collect();
            if extent >= cutoff {
                let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let edge = vals
                    .iter()
                    .zip(&coords)
                    .filter(|(_, x)| x.abs() >= 0.9 * cutoff)
                    .map(|(v, _)| v.norm())
                    .fold(0.0, f64::max);
                if edge > 1e-16 * peak {
                    return Err(Error::Precondition(format!(
                        "interpolant is {:.3e} of its peak at the truncation cutoff {cutoff:.3}; raise R",
                        edge / peak
                    )));
                }
            }
            match side {
                FamilySide::Space => GridFunction::from_space(grid, vals),
                FamilySide::Frequency => GridFunction::from_freq(grid, vals),
            }
        })
        .collect::<Result<_>>()?;
    let log_at_nodes: Vec<C64> = nodes.par_iter().map(|&v| prod.log_eval(C64::new(v, 0.0))).collect();
    let cardinal_error = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            (0..nodes.len())
                .map(|j| {
                    let v = prod.cardinal_with(idx[i], C64::new(nodes[j], 0.0), log_at_nodes[j], log_d[i]);
                    (v - if i == j { 1.0 } else { 0.0 }).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let half = match side {
        FamilySide::Space => grid.half_width(),
        FamilySide::Frequency => grid.freq_half_width(),
    };
    let cardinal_error_grid = functions
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<f64> {
            let scale = own_and_dual(f, side).0.iter().map(|v| v.norm()).fold(1.0, f64::max);
            let mut worst = 0.0f64;
            for (j, &v) in nodes.iter().enumerate().filter(|(_, v)| v.abs() <= half) {
                let val = match side {
                    FamilySide::Space => point_eval(f, v)?,
                    FamilySide::Frequency => point_eval_freq(f, v)?,
                };
                worst = worst.max((val - if i == j { 1.0 } else { 0.0 }).norm() / scale);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let a_prime = functions
        .iter()
        .map(|f| envelope_rate(own_and_dual(f, side).1, &dual_coords, e_dual).unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    if !a_prime.is_finite() {
        return Err(Error::InsufficientData("dual-side decay could not be fitted".into()));
    }
    let log_c = functions
        .iter()
        .zip(nodes)
        .map(|(f, v)| {
            let (own, dual) = own_and_dual(f, side);
            let shift = a * v.abs().powf(e_own);
            (weighted_sup(own, &coords, e_own, a_dprime) - shift).max(weighted_sup(dual, &dual_coords, e_dual, a_prime) - shift)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let constants = FamilyConstants {
        c: log_c.exp(),
        a,
        a_prime,
        a_dprime,
        predicted_a_prime: prod.kp.beta / prod.kp.s,
        ordering_ok: a_prime > a && a > a_dprime,
    };
    Ok(InterpolantFamily { side, exponent: e_own, nodes: nodes.to_vec(), functions, constants, cardinal_error, cardinal_error_grid })
}
