//! Levin-type canonical products over zero sets spread along the rays of a `k_p` indicator.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kp::KpFunction;
use crate::nodes::counting_deviation;
use crate::{Error, Result, C64};

/// Zeros `r·e^{iθ}` on one ray, with the ray's density `D = m/(2πp)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayZeros {
    pub theta: f64,
    pub density: f64,
    pub radii: Vec<f64>,
}

/// Genus `s` with `s < p ≤ s + 1`.
pub fn genus(p: f64) -> usize {
    (p.ceil() as usize).saturating_sub(1)
}

/// Unit vector `e^{iθ}` with axis directions snapped to exact values.
pub fn direction(theta: f64) -> C64 {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let (s, c) = theta.sin_cos();
    C64::new(snap(c), snap(s))
}

/// One zero per cell `[k/D, (k+1)/D)` of `u = r^p`, placed at the cell centre, up to `r_max`.
pub fn smooth_ray_zeros(kp: &KpFunction, r_max: f64) -> Vec<RayZeros> {
    kp.ray_densities()
        .into_iter()
        .map(|(theta, d)| {
            let n = (d * r_max.powf(kp.p)).ceil() as usize;
            let radii = (0..n).map(|k| ((k as f64 + 0.5) / d).powf(1.0 / kp.p)).collect();
            RayZeros { theta, density: d, radii }
        })
        .collect()
}

/// How the polynomial factor `e^{P(z)}` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    /// Least-squares fit of `Re P` to `K − log|Π·e^T|` away from the rays.
    Fit,
    /// Coefficients of `z⁰, z¹, …`.
    Fixed(Vec<C64>),
}

/// `S(z) = e^{P(z)+T(z)} Π_{|ζ|≤R} E_s(z/ζ)`, where `T` replaces the zeros beyond `R` by their
/// continuous density along each ray.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevinProduct {
    pub kp: KpFunction,
    pub genus: usize,
    pub truncation_radius: f64,
    pub rays: Vec<RayZeros>,
    pub correction: Vec<C64>,
    /// `R_c = (n/D)^{1/p}` per ray, where the continuous tail starts.
    pub tail_radii: Vec<f64>,
    /// Exclusion-disk constant: disks `D(ζ, d(1+|ζ|)^{1−p})` are pairwise disjoint.
    pub disk_d: f64,
    zeros: Vec<C64>,
}

fn log_e(w: C64, s: usize) -> C64 {
    let mut acc = (C64::new(1.0, 0.0) - w).ln();
    let mut pw = C64::new(1.0, 0.0);
    for k in 1..=s {
        pw *= w;
        acc += pw / k as f64;
    }
    acc
}

fn harmonic(s: usize) -> f64 {
    (1..=s).map(|k| 1.0 / k as f64).sum()
}

fn distance_to_ray(z: C64, theta: f64) -> f64 {
    let r = z.norm();
    let delta = (z.arg() - theta + PI).rem_euclid(2.0 * PI) - PI;
    if delta.abs() >= PI / 2.0 {
        r
    } else {
        r * delta.sin().abs()
    }
}

pub fn build_levin_product(kp: &KpFunction, rays: &[RayZeros], r: f64) -> Result<LevinProduct> {
    build_levin_product_with(kp, rays, r, Correction::Fit)
}

pub fn build_levin_product_with(kp: &KpFunction, rays: &[RayZeros], r: f64, correction: Correction) -> Result<LevinProduct> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("truncation radius must be positive, got {r}")));
    }
    let dens = kp.ray_densities();
    if rays.len() != dens.len() {
        return Err(Error::Precondition(format!("{} rays given, k_p has {} jumps", rays.len(), dens.len())));
    }
    let p = kp.p;
    let mut kept = Vec::with_capacity(rays.len());
    for (ray, (theta, d)) in rays.iter().zip(&dens) {
        if (ray.theta - theta).abs() > 1e-12 || (ray.density - d).abs() > 1e-9 * d {
            return Err(Error::Precondition(format!("ray at θ = {} does not match the jump at θ = {theta}", ray.theta)));
        }
        if ray.radii.windows(2).any(|w| w[1] <= w[0]) || ray.radii.first().is_some_and(|v| *v <= 0.0) {
            return Err(Error::Precondition(format!("radii on ray θ = {theta} must be positive and increasing")));
        }
        let radii: Vec<f64> = ray.radii.iter().copied().filter(|v| *v <= r).collect();
        let dev = counting_deviation(&radii, *d, p, 0.25 * r, 0.75 * r);
        if dev > 2.0 {
            return Err(Error::Precondition(format!("zeros on ray θ = {theta} are not k-smooth: counting deviation {dev:.3} > 2")));
        }
        if radii.is_empty() {
            return Err(Error::Precondition(format!("no zeros within R on ray θ = {theta}")));
        }
        kept.push(RayZeros { theta: *theta, density: *d, radii });
    }
    let zeros: Vec<C64> = kept.iter().flat_map(|ray| ray.radii.iter().map(move |&t| direction(ray.theta) * t)).collect();
    let tail_radii = kept.iter().map(|ray| (ray.radii.len() as f64 / ray.density).powf(1.0 / p)).collect();
    let mut prod = LevinProduct {
        kp: kp.clone(),
        genus: genus(p),
        truncation_radius: r,
        rays: kept,
        correction: Vec::new(),
        tail_radii,
        disk_d: 0.0,
        zeros,
    };
    prod.disk_d = 0.45 * prod.max_disk_constant();
    prod.correction = match correction {
        Correction::Fixed(c) => c,
        Correction::Fit => prod.fit_correction()?,
    };
    Ok(prod)
}

impl LevinProduct {
    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    /// Radius inside which the tail series is used (`0.95·min R_c`).
    pub fn valid_radius(&self) -> f64 {
        0.95 * self.tail_radii.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `K(z) = k(arg z)|z|^p`.
    pub fn indicator(&self, z: C64) -> f64 {
        self.kp.eval(z.arg()) * z.norm().powf(self.kp.p)
    }

    fn poly(&self, z: C64) -> C64 {
        self.correction.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    fn tail(&self, z: C64) -> C64 {
        let p = self.kp.p;
        let integer_p = p.fract() == 0.0;
        let first = self.genus + 1;
        let mut total = C64::new(0.0, 0.0);
        for (ray, &rc) in self.rays.iter().zip(&self.tail_radii) {
            let w = z * direction(-ray.theta) / rc;
            let aw = w.norm();
            if aw == 0.0 {
                continue;
            }
            let n_max = if aw < 1.0 { ((1e-17f64).ln() / aw.ln()).ceil().clamp(first as f64 + 1.0, 4000.0) as usize } else { 4000 };
            let mut pw = w.powu(first as u32 - 1);
            let mut series = C64::new(0.0, 0.0);
            for n in first..=n_max {
                pw *= w;
                let nf = n as f64;
                if integer_p && n == p as usize {
                    total += pw * ray.density * rc.ln() * rc.powf(p);
                } else {
                    series += pw / (nf * (nf - p));
                }
            }
            total -= series * ray.density * p * rc.powf(p);
        }
        total
    }

    fn log_product(&self, z: C64, skip: Option<usize>) -> C64 {
        self.zeros
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .fold(C64::new(0.0, 0.0), |acc, (_, zeta)| acc + log_e(z / zeta, self.genus))
    }

    /// A branch of `log S(z)`.
    pub fn log_eval(&self, z: C64) -> C64 {
        self.log_product(z, None) + self.poly(z) + self.tail(z)
    }

    pub fn log_abs(&self, z: C64) -> f64 {
        self.log_eval(z).re
    }

    /// `log S(z)` without the factor of zero `idx`.
    pub fn log_eval_skip(&self, z: C64, idx: usize) -> C64 {
        self.log_product(z, Some(idx)) + self.poly(z) + self.tail(z)
    }

    /// A branch of `log S′(ζ_idx)`.
    pub fn log_derivative_at_zero(&self, idx: usize) -> C64 {
        let zeta = self.zeros[idx];
        (-zeta.inv()).ln() + harmonic(self.genus) + self.log_eval_skip(zeta, idx)
    }

    /// Index of the zero at `z`, if any.
    pub fn zero_index(&self, z: C64) -> Option<usize> {
        self.zeros.iter().position(|zeta| (zeta - z).norm() <= 1e-12 * (1.0 + z.norm()))
    }

    /// `S(z)/(S′(ζ)(z − ζ))` for the zero `ζ = ζ_idx`.
    pub fn cardinal(&self, idx: usize, z: C64) -> C64 {
        let log_d = self.log_derivative_at_zero(idx);
        self.cardinal_with(idx, z, self.log_eval(z), log_d)
    }

    /// [`Self::cardinal`] from a precomputed `log S(z)` and `log S′(ζ)`.
    pub fn cardinal_with(&self, idx: usize, z: C64, log_s: C64, log_d: C64) -> C64 {
        let zeta = self.zeros[idx];
        if (z - zeta).norm() > 1e-9 * (1.0 + zeta.norm()) {
            return (log_s - log_d).exp() / (z - zeta);
        }
        let w = z / zeta;
        let poly_w: C64 = (1..=self.genus).map(|k| w.powu(k as u32) / k as f64).sum();
        let log_skip_z = self.log_eval_skip(z, idx);
        let log_skip_zeta = log_d - (-zeta.inv()).ln() - harmonic(self.genus);
        (log_skip_z - log_skip_zeta + poly_w - harmonic(self.genus)).exp()
    }

    /// Distance from `z` to the union of the rays.
    pub fn distance_to_rays(&self, z: C64) -> f64 {
        self.rays.iter().map(|ray| distance_to_ray(z, ray.theta)).fold(f64::INFINITY, f64::min)
    }

    fn disk_radius(&self, d: f64, zeta_abs: f64) -> f64 {
        d * (1.0 + zeta_abs).powf(1.0 - self.kp.p)
    }

    fn max_disk_constant(&self) -> f64 {
        let mut best = f64::INFINITY;
        for ray in &self.rays {
            for w in ray.radii.windows(2) {
                let rho = self.disk_radius(1.0, w[0]) + self.disk_radius(1.0, w[1]);
                best = best.min((w[1] - w[0]) / rho);
            }
        }
        let near: Vec<C64> = self.zeros.iter().copied().filter(|z| z.norm() <= 3.0).collect();
        for (i, a) in near.iter().enumerate() {
            for b in &near[i + 1..] {
                let rho = self.disk_radius(1.0, a.norm()) + self.disk_radius(1.0, b.norm());
                best = best.min((a - b).norm() / rho);
            }
        }
        best.min(0.5)
    }

    /// Whether `z` lies in some exclusion disk `D(ζ, d(1+|ζ|)^{1−p})`.
    pub fn in_exclusion(&self, z: C64) -> bool {
        self.rays.iter().any(|ray| {
            let along = (z * direction(-ray.theta)).re;
            if along < -1.0 {
                return false;
            }
            let k = ray.radii.partition_point(|&t| t < along);
            [k.wrapping_sub(1), k].iter().filter_map(|&i| ray.radii.get(i)).any(|&t| {
                (z - direction(ray.theta) * t).norm() < self.disk_radius(self.disk_d, t)
            })
        })
    }

    fn fit_correction(&self) -> Result<Vec<C64>> {
        let deg = self.kp.p.floor() as usize;
        let r_eval = 0.8 * self.truncation_radius.min(self.valid_radius());
        let pts: Vec<C64> = polar_samples(r_eval, 32, 96)
            .into_iter()
            .filter(|z| self.distance_to_rays(*z) >= 0.05 * z.norm())
            .collect();
        if pts.len() < 4 * deg {
            return Err(Error::InsufficientData("too few fit points for the correction polynomial".into()));
        }
        let rows: Vec<(Vec<f64>, f64)> = pts
            .par_iter()
            .map(|&z| {
                let base = self.log_product(z, None) + self.tail(z);
                let cols = (1..=deg)
                    .flat_map(|k| {
                        let zk = z.powu(k as u32);
                        [zk.re, -zk.im]
                    })
                    .collect();
                (cols, self.indicator(z) - base.re)
            })
            .collect();
        let a = DMatrix::from_fn(rows.len(), 2 * deg, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Conditioning(e.to_string()))?;
        let mut c = vec![C64::new(0.0, 0.0)];
        c.extend((0..deg).map(|k| C64::new(sol[2 * k], sol[2 * k + 1])));
        Ok(c)
    }
}

/// Points `r e^{iθ}` with `r = r_max(i+1)/nr`, `θ = −π + 2πk/na`.
pub fn polar_samples(r_max: f64, nr: usize, na: usize) -> Vec<C64> {
    (0..nr)
        .flat_map(|i| {
            let r = r_max * (i + 1) as f64 / nr as f64;
            (0..na).map(move |k| C64::from_polar(r, -PI + 2.0 * PI * k as f64 / na as f64))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevinCheckConfig {
    pub eps: f64,
    /// Radius of the checked disk as a fraction of `R`.
    pub eval_fraction: f64,
    /// Radius of the constant-fitting disk as a fraction of the checked radius.
    pub fit_fraction: f64,
    pub radial: usize,
    pub angular: usize,
}

impl Default for LevinCheckConfig {
    fn default() -> Self {
        Self { eps: 0.1, eval_fraction: 0.8, fit_fraction: 0.4, radial: 64, angular: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSample {
    pub theta: f64,
    pub k: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevinReport {
    pub eps: f64,
    pub eval_radius: f64,
    pub samples: usize,
    /// `log C_ε` in `log|S| ≤ log C_ε + (k+ε)r^p`.
    pub log_c_upper: f64,
    pub upper_violations: usize,
    pub upper_worst_excess: f64,
    /// `log c_ε` in `log|S| ≥ log c_ε + (k−ε)r^p` outside the exclusion disks.
    pub log_c_lower: f64,
    pub lower_violations: usize,
    pub lower_worst_deficit: f64,
    pub derivative_checked: usize,
    pub derivative_violations: usize,
    pub derivative_worst_deficit: f64,
    /// Smallest `C` with `|log|S| − K| ≤ C[log(2+|z|) + log(1+1/d(z))]` on the sample.
    pub estimate_constant: f64,
    pub indicator: Vec<IndicatorSample>,
    pub indicator_max_error: f64,
    pub disk_d: f64,
    pub correction: Vec<C64>,
}

impl LevinReport {
    pub fn bounds_hold(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == 0 && self.derivative_violations == 0
    }
}

fn sample_points(prod: &LevinProduct, r_eval: f64, cfg: &LevinCheckConfig) -> Vec<C64> {
    let mut pts: Vec<C64> = polar_samples(r_eval, cfg.radial, cfg.angular);
    for ray in &prod.rays {
        let dir = direction(ray.theta);
        pts.extend(ray.radii.windows(2).filter(|w| w[1] <= r_eval).map(|w| dir * (0.5 * (w[0] + w[1]))));
    }
    pts.retain(|z| !prod.in_exclusion(*z));
    pts
}

/// Checks the upper, lower and derivative bounds, the log-estimate against `K` and the indicator.
pub fn verify_levin_bounds(prod: &LevinProduct, cfg: &LevinCheckConfig) -> Result<LevinReport> {
    if !(cfg.eps > 0.0) || !(cfg.eval_fraction > 0.0 && cfg.eval_fraction < 1.0) || !(cfg.fit_fraction > 0.0 && cfg.fit_fraction <= 1.0) {
        return Err(Error::Parameter("need ε > 0, eval fraction in (0, 1), fit fraction in (0, 1]".into()));
    }
    let p = prod.kp.p;
    let eps = cfg.eps;
    let r_eval = cfg.eval_fraction * prod.truncation_radius.min(prod.valid_radius());
    let r_fit = cfg.fit_fraction * r_eval;
    let pts = sample_points(prod, r_eval, cfg);
    let vals: Vec<(C64, f64, f64)> = pts.par_iter().map(|&z| (z, prod.log_abs(z), prod.kp.eval(z.arg()))).collect();
    let inner = vals.iter().filter(|(z, _, _)| z.norm() <= r_fit);
    let log_c_upper = inner.clone().map(|(z, l, k)| l - (k + eps) * z.norm().powf(p)).fold(f64::NEG_INFINITY, f64::max);
    let log_c_lower = inner.map(|(z, l, k)| l - (k - eps) * z.norm().powf(p)).fold(f64::INFINITY, f64::min);
    let tol = |l: f64| 1e-9 * (1.0 + l.abs());
    let mut upper_violations = 0;
    let mut upper_worst_excess = f64::NEG_INFINITY;
    let mut lower_violations = 0;
    let mut lower_worst_deficit = f64::NEG_INFINITY;
    let mut estimate_constant = 0.0f64;
    for (z, l, k) in &vals {
        let rp = z.norm().powf(p);
        let excess = l - (log_c_upper + (k + eps) * rp);
        upper_worst_excess = upper_worst_excess.max(excess);
        if excess > tol(*l) {
            upper_violations += 1;
        }
        let deficit = log_c_lower + (k - eps) * rp - l;
        lower_worst_deficit = lower_worst_deficit.max(deficit);
        if deficit > tol(*l) {
            lower_violations += 1;
        }
        let d = prod.distance_to_rays(*z);
        if d > 0.0 {
            let scale = (2.0 + z.norm()).ln() + (1.0 + 1.0 / d).ln();
            estimate_constant = estimate_constant.max((l - k * rp).abs() / scale);
        }
    }
    let zero_idx: Vec<usize> = (0..prod.zeros.len()).filter(|&i| prod.zeros[i].norm() <= r_eval).collect();
    let derivs: Vec<f64> = zero_idx
        .par_iter()
        .map(|&i| {
            let z = prod.zeros[i];
            let l = prod.log_derivative_at_zero(i).re;
            log_c_lower + (prod.kp.eval(z.arg()) - 2.0 * eps) * z.norm().powf(p) - l
        })
        .collect();
    let derivative_violations = derivs.iter().filter(|d| **d > 1e-9).count();
    let derivative_worst_deficit = derivs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut angles: Vec<f64> = prod.rays.iter().map(|r| r.theta).collect();
    angles.extend((0..8).map(|k| -PI + PI / 8.0 + 2.0 * PI * k as f64 / 8.0));
    let indicator: Vec<IndicatorSample> = angles
        .par_iter()
        .map(|&theta| {
            let estimate = (0..=10)
                .map(|i| C64::from_polar(r_eval * (0.9 + 0.01 * i as f64), theta))
                .filter(|z| !prod.in_exclusion(*z))
                .map(|z| prod.log_abs(z) / z.norm().powf(p))
                .fold(f64::NEG_INFINITY, f64::max);
            IndicatorSample { theta, k: prod.kp.eval(theta), estimate }
        })
        .collect();
    let indicator_max_error = indicator.iter().map(|s| (s.estimate - s.k).abs()).fold(0.0, f64::max);
    Ok(LevinReport {
        eps,
        eval_radius: r_eval,
        samples: vals.len(),
        log_c_upper,
        upper_violations,
        upper_worst_excess,
        log_c_lower,
        lower_violations,
        lower_worst_deficit,
        derivative_checked: zero_idx.len(),
        derivative_violations,
        derivative_worst_deficit,
        estimate_constant,
        indicator,
        indicator_max_error,
        disk_d: prod.disk_d,
        correction: prod.correction.clone(),
    })
}

/// `max |log|S_R| − log|S_{2R}||` over the check sample of `S_R`; `rays` must reach `2R`.
pub fn truncation_stability(kp: &KpFunction, rays: &[RayZeros], r: f64, cfg: &LevinCheckConfig) -> Result<f64> {
    let reach = rays.iter().map(|ray| ray.radii.last().copied().unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    if reach < 2.0 * r * 0.99 {
        return Err(Error::Precondition(format!("zero sets reach only {reach:.3}, need 2R = {}", 2.0 * r)));
    }
    let a = build_levin_product(kp, rays, r)?;
    let b = build_levin_product(kp, rays, 2.0 * r)?;
    let r_eval = cfg.eval_fraction * a.truncation_radius.min(a.valid_radius());
    let pts: Vec<C64> = sample_points(&a, r_eval, cfg).into_iter().filter(|z| !b.in_exclusion(*z)).collect();
    Ok(pts.par_iter().map(|&z| (a.log_abs(z) - b.log_abs(z)).abs()).reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonuniq::kp::build_kp;

    #[test]
    fn genus_values() {
        assert_eq!(genus(2.0), 1);
        assert_eq!(genus(1.5), 1);
        assert_eq!(genus(3.0), 2);
        assert_eq!(genus(2.5), 2);
    }

    #[test]
    fn cardinal_is_one_at_its_zero() {
        let kp = build_kp(2.0, 0.6, 3.0, None).unwrap();
        let rays = smooth_ray_zeros(&kp, 8.0);
        let prod = build_levin_product(&kp, &rays, 8.0).unwrap();
        let z = prod.zeros()[3];
        assert!((prod.cardinal(3, z) - 1.0).norm() < 1e-12);
        let other = prod.zeros()[5];
        assert!(prod.cardinal(3, other).norm() < 1e-12);
    }
}
