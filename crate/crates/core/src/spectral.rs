//! Grid functions, the continuous Fourier transform on a uniform grid, Sobolev-type
//! norms, Hermite functions and Gelfand–Shilov decay diagnostics.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::quad::{self, Kahan};
use crate::{Error, Result, C64};

/// Fraction of energy allowed in the outer 10% of a grid before a transform is refused.
pub const ALIAS_TOL: f64 = 1e-8;
/// Plancherel agreement expected of consistent grid functions.
pub const PLANCHEREL_TOL: f64 = 1e-10;

/// Symmetric uniform grid `x_k = −X + k·dx` with its frequency partner `ξ_m = −Ξ + m·dξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    size: usize,
}

impl Grid {
    pub fn new(half_width: f64, size: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Parameter(format!("grid half-width must be positive, got {half_width}")));
        }
        if size < 4 || !size.is_power_of_two() {
            return Err(Error::Parameter(format!("grid size must be a power of two ≥ 4, got {size}")));
        }
        Ok(Self { half_width, size })
    }

    /// The default desk-scale grid, X = 12 and N = 4096.
    pub fn standard() -> Self {
        Self { half_width: 12.0, size: 4096 }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.size as f64
    }

    pub fn dxi(&self) -> f64 {
        1.0 / (2.0 * self.half_width)
    }

    pub fn freq_half_width(&self) -> f64 {
        self.size as f64 / (4.0 * self.half_width)
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.dx()
    }

    pub fn xi(&self, m: usize) -> f64 {
        -self.freq_half_width() + m as f64 * self.dxi()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.size).map(|k| self.x(k)).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.size).map(|m| self.xi(m)).collect()
    }

    /// The grid on which `f̂` lives when treated as a function of its own.
    pub fn dual(&self) -> Self {
        Self { half_width: self.freq_half_width(), size: self.size }
    }

    /// Index of the grid point at or just below `x` (clamped).
    pub fn index_below(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.dx()).floor();
        k.clamp(0.0, (self.size - 1) as f64) as usize
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn alternate(buf: &mut [C64]) {
    buf.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
}

/// Fraction of `Σ|v|²` carried by samples in the outer 10% of the index range.
pub fn boundary_energy_fraction(values: &[C64]) -> f64 {
    let n = values.len();
    let band = n / 20;
    let total = quad::sum(values.iter().map(|v| v.norm_sqr()));
    if total == 0.0 {
        return 0.0;
    }
    let edge = quad::sum(
        values[..band]
            .iter()
            .chain(&values[n - band..])
            .map(|v| v.norm_sqr()),
    );
    edge / total
}

fn check_alias(values: &[C64], tol: f64) -> Result<()> {
    let fraction = boundary_energy_fraction(values);
    if fraction > tol || !fraction.is_finite() {
        return Err(Error::Aliasing { fraction, tol });
    }
    Ok(())
}

/// Samples of `f̂(ξ_m)` from samples `f(x_k)`, without the boundary check.
pub fn forward_raw(grid: &Grid, space: &[C64]) -> Vec<C64> {
    let n = grid.size();
    assert_eq!(space.len(), n, "sample count does not match the grid");
    let mut buf = space.to_vec();
    alternate(&mut buf);
    plan(n, false).process(&mut buf);
    alternate(&mut buf);
    let dx = grid.dx();
    buf.iter_mut().for_each(|v| *v *= dx);
    buf
}

/// Samples of `f(x_k)` from samples `f̂(ξ_m)`, without the boundary check.
pub fn inverse_raw(grid: &Grid, freq: &[C64]) -> Vec<C64> {
    let n = grid.size();
    assert_eq!(freq.len(), n, "sample count does not match the grid");
    let mut buf = freq.to_vec();
    alternate(&mut buf);
    plan(n, true).process(&mut buf);
    alternate(&mut buf);
    let dxi = grid.dxi();
    buf.iter_mut().for_each(|v| *v *= dxi);
    buf
}

/// Continuous-normalized transform of grid samples, refusing visibly aliased input.
pub fn fourier_transform(grid: &Grid, space: &[C64]) -> Result<Vec<C64>> {
    check_alias(space, ALIAS_TOL)?;
    Ok(forward_raw(grid, space))
}

pub fn inverse_fourier_transform(grid: &Grid, freq: &[C64]) -> Result<Vec<C64>> {
    check_alias(freq, ALIAS_TOL)?;
    Ok(inverse_raw(grid, freq))
}

/// A function sampled on a grid together with samples of its Fourier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    space: Vec<C64>,
    freq: Vec<C64>,
    consistent: bool,
}

impl GridFunction {
    pub fn zero(grid: Grid) -> Self {
        let n = grid.size();
        Self { grid, space: vec![C64::new(0.0, 0.0); n], freq: vec![C64::new(0.0, 0.0); n], consistent: true }
    }

    /// Builds from space samples; fails if the samples reach the grid edge.
    pub fn from_space(grid: Grid, space: Vec<C64>) -> Result<Self> {
        Self::check_len(&grid, &space)?;
        let freq = fourier_transform(&grid, &space)?;
        Ok(Self { grid, space, freq, consistent: true })
    }

    /// Builds from frequency samples; fails if they reach the frequency-grid edge.
    pub fn from_freq(grid: Grid, freq: Vec<C64>) -> Result<Self> {
        Self::check_len(&grid, &freq)?;
        let space = inverse_fourier_transform(&grid, &freq)?;
        Ok(Self { grid, space, freq, consistent: true })
    }

    /// Builds from space samples with no boundary-energy check.
    pub fn from_space_unchecked(grid: Grid, space: Vec<C64>) -> Self {
        let freq = forward_raw(&grid, &space);
        Self { grid, space, freq, consistent: true }
    }

    pub fn from_freq_unchecked(grid: Grid, freq: Vec<C64>) -> Self {
        let space = inverse_raw(&grid, &freq);
        Self { grid, space, freq, consistent: true }
    }

    /// Pairs externally supplied samples; `consistent` is set from the Plancherel check.
    pub fn from_parts(grid: Grid, space: Vec<C64>, freq: Vec<C64>) -> Result<Self> {
        Self::check_len(&grid, &space)?;
        Self::check_len(&grid, &freq)?;
        let mut f = Self { grid, space, freq, consistent: false };
        f.consistent = f.plancherel_defect() <= PLANCHEREL_TOL;
        Ok(f)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        let space = grid.xs().into_iter().map(f).collect();
        Self::from_space(grid, space)
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    fn check_len(grid: &Grid, v: &[C64]) -> Result<()> {
        if v.len() != grid.size() {
            return Err(Error::Format(format!("expected {} samples, got {}", grid.size(), v.len())));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &[C64] {
        &self.space
    }

    pub fn freq(&self) -> &[C64] {
        &self.freq
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// `f̂` viewed as a function on the dual grid; its transform is `f(−x)`.
    pub fn dual(&self) -> Self {
        let n = self.grid.size();
        let reflected = (0..n).map(|k| self.space[(n - k) % n]).collect();
        Self { grid: self.grid.dual(), space: self.freq.clone(), freq: reflected, consistent: self.consistent }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            space: self.space.iter().map(|v| v * c).collect(),
            freq: self.freq.iter().map(|v| v * c).collect(),
            consistent: self.consistent,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Parameter("grid functions live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            space: self.space.iter().zip(&other.space).map(|(a, b)| a + b).collect(),
            freq: self.freq.iter().zip(&other.freq).map(|(a, b)| a + b).collect(),
            consistent: self.consistent && other.consistent,
        })
    }

    /// Linear combination `Σ c_i f_i` over a common grid.
    pub fn combine(grid: Grid, terms: &[(C64, &GridFunction)]) -> Result<Self> {
        let mut out = Self::zero(grid);
        for (c, f) in terms {
            if f.grid != grid {
                return Err(Error::Parameter("grid functions live on different grids".into()));
            }
            for (o, v) in out.space.iter_mut().zip(&f.space) {
                *o += c * v;
            }
            for (o, v) in out.freq.iter_mut().zip(&f.freq) {
                *o += c * v;
            }
            out.consistent &= f.consistent;
        }
        Ok(out)
    }

    /// Spectral derivative: `f̂ ↦ 2πiξ f̂`.
    pub fn derivative(&self) -> Self {
        let freq: Vec<C64> = self
            .freq
            .iter()
            .enumerate()
            .map(|(m, v)| v * C64::new(0.0, 2.0 * PI * self.grid.xi(m)))
            .collect();
        Self::from_freq_unchecked(self.grid, freq)
    }

    /// `∫|f|²` by the grid quadrature.
    pub fn l2_norm_sqr(&self) -> f64 {
        quad::sum(self.space.iter().map(|v| v.norm_sqr())) * self.grid.dx()
    }

    pub fn freq_l2_norm_sqr(&self) -> f64 {
        quad::sum(self.freq.iter().map(|v| v.norm_sqr())) * self.grid.dxi()
    }

    /// Relative Plancherel mismatch `|‖f‖² − ‖f̂‖²| / ‖f‖²` (0 for the zero function).
    pub fn plancherel_defect(&self) -> f64 {
        let a = self.l2_norm_sqr();
        let b = self.freq_l2_norm_sqr();
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            (a - b).abs() / a.max(b)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.space.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn freq_sup_norm(&self) -> f64 {
        self.freq.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨f, g⟩ = ∫ f ḡ` by quadrature.
    pub fn inner(&self, other: &Self) -> C64 {
        quad::csum(self.space.iter().zip(&other.space).map(|(a, b)| a * b.conj())) * self.grid.dx()
    }

    pub fn boundary_energy(&self) -> (f64, f64) {
        (boundary_energy_fraction(&self.space), boundary_energy_fraction(&self.freq))
    }

    /// Fails if either side carries more than `tol` of its energy in the outer band.
    pub fn check_alias(&self, tol: f64) -> Result<()> {
        check_alias(&self.space, tol)?;
        check_alias(&self.freq, tol)
    }
}

/// `(s, p, q)` with `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl SpaceParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::Parameter(format!("s must be positive, got {s}")));
        }
        if !(p > 1.0 && q > 1.0) {
            return Err(Error::Parameter(format!("exponents must exceed 1, got p = {p}, q = {q}")));
        }
        if (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("1/p + 1/q must equal 1, got p = {p}, q = {q}")));
        }
        Ok(Self { s, p, q })
    }

    /// `s = 1/2, p = q = 2`, the space whose norm is `‖f‖²_{H₁} + ‖f̂‖²_{H₁}`.
    pub fn standard() -> Self {
        Self { s: 0.5, p: 2.0, q: 2.0 }
    }

    pub fn frame_admissible(&self) -> bool {
        self.s * self.p.min(self.q) >= 1.0 - 1e-12
    }
}

/// `∫ (1 + |ξ|^{2t}) |f̂(ξ)|² dξ` over the frequency grid.
pub fn sobolev_norm(f: &GridFunction, t: f64) -> f64 {
    let g = f.grid();
    quad::sum(f.freq().iter().enumerate().map(|(m, v)| (1.0 + g.xi(m).abs().powf(2.0 * t)) * v.norm_sqr())) * g.dxi()
}

/// Squared norm `‖f‖²_{H_{ps}} + ‖f̂‖²_{H_{qs}}` (quadratic in `f`).
pub fn hspq_norm(f: &GridFunction, params: &SpaceParams) -> f64 {
    let g = f.grid();
    let e = 2.0 * params.q * params.s;
    let space = quad::sum(f.space().iter().enumerate().map(|(k, v)| (1.0 + g.x(k).abs().powf(e)) * v.norm_sqr())) * g.dx();
    sobolev_norm(f, params.p * params.s) + space
}

/// Inner product associated with [`hspq_norm`].
pub fn hspq_inner(f: &GridFunction, h: &GridFunction, params: &SpaceParams) -> C64 {
    let g = f.grid();
    let ef = 2.0 * params.p * params.s;
    let es = 2.0 * params.q * params.s;
    let fr = quad::csum(
        f.freq()
            .iter()
            .zip(h.freq())
            .enumerate()
            .map(|(m, (a, b))| a * b.conj() * (1.0 + g.xi(m).abs().powf(ef))),
    ) * g.dxi();
    let sp = quad::csum(
        f.space()
            .iter()
            .zip(h.space())
            .enumerate()
            .map(|(k, (a, b))| a * b.conj() * (1.0 + g.x(k).abs().powf(es))),
    ) * g.dx();
    fr + sp
}

/// `Σ_m c_m e^{±2πi y_m t}` with `y_m = y0 + m·dy`, phases re-seeded every 64 terms.
fn trig_sum(coeffs: &[C64], y0: f64, dy: f64, t: f64, sign: f64) -> C64 {
    let mut acc_re = Kahan::default();
    let mut acc_im = Kahan::default();
    let step = C64::from_polar(1.0, sign * 2.0 * PI * dy * t);
    for (block, chunk) in coeffs.chunks(64).enumerate() {
        let y = y0 + (block * 64) as f64 * dy;
        let mut phase = C64::from_polar(1.0, sign * 2.0 * PI * (y * t).rem_euclid(1.0));
        for c in chunk {
            let v = c * phase;
            acc_re.add(v.re);
            acc_im.add(v.im);
            phase *= step;
        }
    }
    C64::new(acc_re.value(), acc_im.value())
}

/// Band-limited value `f(x) ≈ Σ_m f̂(ξ_m) e^{2πiξ_m x} dξ`.
pub fn point_eval(f: &GridFunction, x: f64) -> Result<C64> {
    let g = f.grid();
    if !(x.abs() <= g.half_width()) {
        return Err(Error::Range(format!("x = {x} outside [−{0}, {0}]", g.half_width())));
    }
    Ok(trig_sum(f.freq(), -g.freq_half_width(), g.dxi(), x, 1.0) * g.dxi())
}

/// `f̂(ξ) ≈ Σ_k f(x_k) e^{−2πiξx_k} dx`.
pub fn point_eval_freq(f: &GridFunction, xi: f64) -> Result<C64> {
    let g = f.grid();
    if !(xi.abs() <= g.freq_half_width()) {
        return Err(Error::Range(format!("ξ = {xi} outside [−{0}, {0}]", g.freq_half_width())));
    }
    Ok(trig_sum(f.space(), -g.half_width(), g.dx(), xi, -1.0) * g.dx())
}

pub fn point_eval_many(f: &GridFunction, xs: &[f64]) -> Result<Vec<C64>> {
    xs.par_iter().map(|&x| point_eval(f, x)).collect()
}

pub fn point_eval_freq_many(f: &GridFunction, xis: &[f64]) -> Result<Vec<C64>> {
    xis.par_iter().map(|&x| point_eval_freq(f, x)).collect()
}

/// L²-normalized Hermite functions `h_0..h_{n_max}` with `ĥ_n = (−i)ⁿ h_n`.
pub fn hermite_basis(n_max: usize, grid: Grid) -> Result<Vec<GridFunction>> {
    let xs = grid.xs();
    let y: Vec<f64> = xs.iter().map(|x| (2.0 * PI).sqrt() * x).collect();
    let mut prev: Vec<f64> = vec![0.0; xs.len()];
    let mut cur: Vec<f64> = xs.iter().map(|x| 2f64.powf(0.25) * (-PI * x * x).exp()).collect();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let norm = (quad::sum(cur.iter().map(|v| v * v)) * grid.dx()).sqrt();
        let normalized: Vec<C64> = cur.iter().map(|v| C64::new(v / norm, 0.0)).collect();
        out.push(GridFunction::from_space(grid, normalized)?);
        let nf = n as f64;
        let next: Vec<f64> = (0..xs.len())
            .map(|k| (2.0 / (nf + 1.0)).sqrt() * y[k] * cur[k] - (nf / (nf + 1.0)).sqrt() * prev[k])
            .collect();
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Analytic `h_n(x)` by the same recurrence, for oracles and node sampling.
pub fn hermite_value(n: usize, x: f64) -> f64 {
    let y = (2.0 * PI).sqrt() * x;
    let mut prev = 0.0;
    let mut cur = 2f64.powf(0.25) * (-PI * x * x).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Weighted decay integrals `∫|f|²e^{c|x|^p}` and `∫|f̂|²e^{c|ξ|^q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsDiagnostic {
    pub c: f64,
    pub space_integral: f64,
    pub freq_integral: f64,
    pub space_divergent: bool,
    pub freq_divergent: bool,
    /// Largest |x| whose sample rises above the noise floor.
    pub space_extent: f64,
    pub freq_extent: f64,
}

impl GsDiagnostic {
    pub fn finite(&self) -> bool {
        !self.space_divergent && !self.freq_divergent
    }
}

/// Samples below this fraction of the peak are treated as round-off.
pub const GS_NOISE_FLOOR: f64 = 1e-12;
/// Relative share of the outer band of the resolved region that signals divergence.
pub const GS_EDGE_TOL: f64 = 1e-8;

fn gs_side(values: &[C64], coord: impl Fn(usize) -> f64, step: f64, e: f64, c: f64) -> (f64, bool, f64) {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return (0.0, false, 0.0);
    }
    let floor = GS_NOISE_FLOOR * peak;
    let kept: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > floor)
        .map(|(k, v)| {
            let y = coord(k).abs();
            (y, 2.0 * v.norm().ln() + c * y.powf(e))
        })
        .collect();
    let extent = kept.iter().map(|(y, _)| *y).fold(0.0, f64::max);
    let logs: Vec<f64> = kept.iter().map(|(_, l)| *l).collect();
    let total_log = quad::log_sum_exp(&logs);
    let edge: Vec<f64> = kept.iter().filter(|(y, _)| *y >= 0.9 * extent).map(|(_, l)| *l).collect();
    let edge_log = quad::log_sum_exp(&edge);
    let integral = (total_log + step.ln()).exp();
    let divergent = !integral.is_finite() || edge_log - total_log > GS_EDGE_TOL.ln();
    (integral, divergent, extent)
}

/// Grid quadratures of the Gelfand–Shilov weights, computed in log space.
pub fn gelfand_shilov_diagnostic(f: &GridFunction, p: f64, q: f64, c: f64) -> Result<GsDiagnostic> {
    if !(c > 0.0) {
        return Err(Error::Parameter(format!("c must be positive, got {c}")));
    }
    let g = *f.grid();
    let (si, sd, se) = gs_side(f.space(), |k| g.x(k), g.dx(), p, c);
    let (fi, fd, fe) = gs_side(f.freq(), |m| g.xi(m), g.dxi(), q, c);
    Ok(GsDiagnostic { c, space_integral: si, freq_integral: fi, space_divergent: sd, freq_divergent: fd, space_extent: se, freq_extent: fe })
}

/// Runs the diagnostic over a ladder of `c` values; returns all rows and the largest finite `c`.
pub fn gelfand_shilov_scan(f: &GridFunction, p: f64, q: f64, ladder: &[f64]) -> Result<(Vec<GsDiagnostic>, Option<f64>)> {
    let rows = ladder.iter().map(|&c| gelfand_shilov_diagnostic(f, p, q, c)).collect::<Result<Vec<_>>>()?;
    let best = rows.iter().filter(|r| r.finite()).map(|r| r.c).fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    Ok((rows, best))
}
