//! Piecewise p-trigonometric indicator functions `k_p` of the class K_p.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `k(θ) = a cos pθ + b sin pθ` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpFunction {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// `s ∈ (σ^q, 1)` linking `b` and `β`.
    pub s: f64,
    /// `b` with `β = 2πs·b^{−q}/q`.
    pub b: f64,
    /// `p = 2ⁿp′` with `1 < p′ ≤ 2`.
    pub doubling: u32,
    pub arcs: Vec<Arc>,
    pub jump_angles: Vec<f64>,
    pub masses: Vec<f64>,
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `β = 2πs·b^{−q}/q`.
pub fn beta_from_b(p: f64, s: f64, b: f64) -> f64 {
    let q = conjugate(p);
    2.0 * PI * s * b.powf(-q) / q
}

/// Inverse of [`beta_from_b`].
pub fn b_from_beta(p: f64, s: f64, beta: f64) -> f64 {
    let q = conjugate(p);
    (2.0 * PI * s / (q * beta)).powf(1.0 / q)
}

/// Default `s`: midpoint of `(σ^q, 1)`.
pub fn default_s(p: f64, sigma: f64) -> f64 {
    (sigma.powf(conjugate(p)) + 1.0) / 2.0
}

fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

/// Arcs of the base function on `[−π, π]` for `1 < p ≤ 2`.
fn base_arcs(p: f64, alpha: f64, beta: f64) -> [Arc; 4] {
    let (sp, cp) = (p * PI).sin_cos();
    let a2 = alpha * sp - beta * cp;
    let b2 = -alpha * cp - beta * sp;
    [
        Arc { start: -PI, end: -PI / 2.0, a: a2, b: -b2 },
        Arc { start: -PI / 2.0, end: 0.0, a: -beta, b: -alpha },
        Arc { start: 0.0, end: PI / 2.0, a: -beta, b: alpha },
        Arc { start: PI / 2.0, end: PI, a: a2, b: b2 },
    ]
}

/// Builds `k_p` with `α = 2πσ/p` and `β = 2πs·b^{−q}/q`. For `p > 2`, `k_p(θ) = k_{p′}(2ⁿθ)`.
pub fn build_kp(p: f64, sigma: f64, b: f64, s: Option<f64>) -> Result<KpFunction> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("σ must lie in (0, 1), got {sigma}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Parameter(format!("b must be positive, got {b}")));
    }
    let q = conjugate(p);
    let s = s.unwrap_or_else(|| default_s(p, sigma));
    if !(s > sigma.powf(q) && s < 1.0) {
        return Err(Error::Parameter(format!("s = {s} outside (σ^q, 1) = ({}, 1)", sigma.powf(q))));
    }
    let alpha = 2.0 * PI * sigma / p;
    let beta = beta_from_b(p, s, b);
    let mut doubling = 0u32;
    let mut base_p = p;
    while base_p > 2.0 {
        base_p /= 2.0;
        doubling += 1;
    }
    if base_p < 2.0 {
        let bound = alpha * (PI * base_p / 2.0).tan().recip().abs();
        if !(beta < bound) {
            return Err(Error::Parameter(format!("β = {beta:.6} must be below α|cot(πp′/2)| = {bound:.6}")));
        }
    }
    let base = base_arcs(base_p, alpha, beta);
    let scale = 2f64.powi(doubling as i32);
    let half = 2i64.pow(doubling) / 2;
    let mut arcs = Vec::new();
    // θ = (φ + 2πk)/2ⁿ; the coefficients pick up the phase 2πp′k.
    for k in -half..=half {
        let c = 2.0 * PI * base_p * k as f64;
        let (sc, cc) = c.sin_cos();
        for arc in &base {
            let start = ((arc.start + 2.0 * PI * k as f64) / scale).max(-PI);
            let end = ((arc.end + 2.0 * PI * k as f64) / scale).min(PI);
            if end - start > 1e-15 {
                arcs.push(Arc { start, end, a: arc.a * cc - arc.b * sc, b: arc.a * sc + arc.b * cc });
            }
        }
    }
    arcs.sort_by(|x, y| x.start.total_cmp(&y.start));
    let mut k = KpFunction { p, alpha, beta, sigma, s, b, doubling, arcs, jump_angles: Vec::new(), masses: Vec::new() };
    let n = k.arcs.len();
    for i in 0..n {
        let left = k.arcs[i];
        let right = k.arcs[(i + 1) % n];
        let theta = if i + 1 == n { PI } else { left.end };
        let d_left = arc_derivative(&left, p, left.end);
        let d_right = arc_derivative(&right, p, if i + 1 == n { right.start } else { theta });
        k.jump_angles.push(theta);
        k.masses.push(d_right - d_left);
    }
    if let Some(bad) = k.masses.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::Parameter(format!("jump at θ = {} has mass {} ≤ 0", k.jump_angles[bad], k.masses[bad])));
    }
    if p.fract() == 0.0 {
        let r = k.lindelof_residual();
        if r > 1e-10 {
            return Err(Error::Parameter(format!("Lindelöf residual {r:.3e} exceeds 1e−10")));
        }
    }
    Ok(k)
}

fn arc_value(arc: &Arc, p: f64, theta: f64) -> f64 {
    arc.a * (p * theta).cos() + arc.b * (p * theta).sin()
}

fn arc_derivative(arc: &Arc, p: f64, theta: f64) -> f64 {
    p * (-arc.a * (p * theta).sin() + arc.b * (p * theta).cos())
}

impl KpFunction {
    fn arc_for(&self, theta: f64) -> &Arc {
        let t = wrap(theta);
        self.arcs.iter().find(|a| t >= a.start && t <= a.end).unwrap_or(&self.arcs[self.arcs.len() - 1])
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let t = wrap(theta);
        arc_value(self.arc_for(t), self.p, t)
    }

    /// Largest mismatch of adjacent arcs at their common endpoint.
    pub fn continuity_defect(&self) -> f64 {
        let n = self.arcs.len();
        (0..n)
            .map(|i| {
                let l = &self.arcs[i];
                let r = &self.arcs[(i + 1) % n];
                let tr = if i + 1 == n { r.start } else { l.end };
                (arc_value(l, self.p, l.end) - arc_value(r, self.p, tr)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|k(θ) − k(−θ)|`, `|k(θ) − k(π−θ)|` over a sample of angles.
    pub fn symmetry_defect(&self) -> f64 {
        (0..=720)
            .map(|i| {
                let t = -PI + 2.0 * PI * i as f64 / 720.0;
                let v = self.eval(t);
                (v - self.eval(-t)).abs().max((v - self.eval(PI - t.abs())).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `|Σ m_j e^{−ipθ_j}|`.
    pub fn lindelof_residual(&self) -> f64 {
        let (re, im) = self
            .jump_angles
            .iter()
            .zip(&self.masses)
            .fold((0.0, 0.0), |(re, im), (t, m)| (re + m * (self.p * t).cos(), im - m * (self.p * t).sin()));
        re.hypot(im)
    }

    /// Ray densities `D_j = m_j/(2πp)`.
    pub fn ray_densities(&self) -> Vec<(f64, f64)> {
        self.jump_angles.iter().zip(&self.masses).map(|(t, m)| (*t, m / (2.0 * PI * self.p))).collect()
    }

    /// `min over 512 angles in [0, π/2] of 2π(b^p/p)sin^pθ − k(θ)`; positive iff the bound holds.
    pub fn claim_margin(&self) -> f64 {
        (0..512)
            .map(|i| {
                let t = PI / 2.0 * i as f64 / 511.0;
                2.0 * PI * self.b.powf(self.p) / self.p * t.sin().powf(self.p) - self.eval(t)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest `b` (to relative precision 1e−9) for which `k_p(θ) < 2π(b^p/p)sin^pθ` holds at
/// 512 angles, found by bisection on rebuilt `k_p`.
pub fn find_b0(p: f64, sigma: f64, s: Option<f64>) -> Result<f64> {
    let holds = |b: f64| -> Result<bool> {
        match build_kp(p, sigma, b, s) {
            Ok(k) => Ok(k.claim_margin() > 0.0),
            Err(Error::Parameter(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let mut hi = 1.0;
    while !holds(hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Divergence("no b ≤ 1e6 satisfies the inequality".into()));
        }
    }
    let mut lo = hi / 2.0;
    while holds(lo)? && lo > 1e-6 {
        hi = lo;
        lo /= 2.0;
    }
    while (hi - lo) > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
