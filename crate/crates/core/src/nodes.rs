//! Node sequences: generation, super/subcritical classification, separation,
//! density, thinning and smooth enlargement.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Strictly increasing finite section of a node sequence with its exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSequence {
    points: Vec<f64>,
    exponent: f64,
    truncation_radius: f64,
}

impl NodeSequence {
    /// Validates ordering and finiteness. `truncation_radius` defaults to the largest |point|.
    pub fn new(points: Vec<f64>, exponent: f64, truncation_radius: Option<f64>) -> Result<Self> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::Parameter(format!("exponent must exceed 1, got {exponent}")));
        }
        if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite node {bad}")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(format!("nodes must be strictly increasing ({} then {})", w[0], w[1])));
        }
        let extent = points.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let truncation_radius = truncation_radius.unwrap_or(extent);
        if !(truncation_radius >= 0.0) {
            return Err(Error::Parameter(format!("truncation radius must be nonnegative, got {truncation_radius}")));
        }
        Ok(Self { points, exponent, truncation_radius })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut points: Vec<f64>, exponent: f64, truncation_radius: Option<f64>) -> Result<Self> {
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        Self::new(points, exponent, truncation_radius)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positives(&self) -> impl DoubleEndedIterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|v| *v > 0.0)
    }

    pub fn negatives(&self) -> impl DoubleEndedIterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|v| *v < 0.0)
    }

    /// `t·Λ` (re-sorted when `t < 0`).
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::Parameter(format!("dilation factor must be finite and nonzero, got {t}")));
        }
        let mut pts: Vec<f64> = self.points.iter().map(|v| v * t).collect();
        if t < 0.0 {
            pts.reverse();
        }
        Self::new(pts, self.exponent, Some(self.truncation_radius * t.abs()))
    }

    /// Points with |λ| ≤ r.
    pub fn clip(&self, r: f64) -> Self {
        let points = self.points.iter().copied().filter(|v| v.abs() <= r).collect();
        Self { points, exponent: self.exponent, truncation_radius: self.truncation_radius.min(r) }
    }

    pub fn without(&self, removed: &[f64]) -> Self {
        let points = self
            .points
            .iter()
            .copied()
            .filter(|v| !removed.iter().any(|r| (r - v).abs() <= 1e-12 * (1.0 + v.abs())))
            .collect();
        Self { points, exponent: self.exponent, truncation_radius: self.truncation_radius }
    }

    fn require_two_sided(&self, name: &str) -> Result<()> {
        if self.positives().next().is_none() || self.negatives().next().is_none() {
            return Err(Error::InsufficientData(format!("{name} needs points on both sides of 0")));
        }
        Ok(())
    }
}

/// `λ_j = sign(j)(p·a·|j|/2)^{1/p}` for `1 ≤ |j| ≤ count`; `j = 0` is omitted.
pub fn gen_power_nodes(p: f64, a: f64, count: usize) -> Result<NodeSequence> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Parameter(format!("a must be positive, got {a}")));
    }
    if count == 0 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    let pos: Vec<f64> = (1..=count).map(|j| (p * a * j as f64 / 2.0).powf(1.0 / p)).collect();
    let mut points: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    points.extend(&pos);
    NodeSequence::new(points, p, None)
}

/// One gap `[left, right]` with its statistic `|λ|^{p−1}Δλ`, |λ| taken at the endpoint nearer 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub left: f64,
    pub right: f64,
    pub stat: f64,
}

pub fn gaps(seq: &NodeSequence) -> Vec<Gap> {
    let p = seq.exponent();
    seq.points()
        .windows(2)
        .map(|w| {
            let inner = w[0].abs().min(w[1].abs());
            Gap { left: w[0], right: w[1], stat: inner.powf(p - 1.0) * (w[1] - w[0]) }
        })
        .collect()
}

/// Extremes of the gap statistic over the outermost `tail_fraction` of gaps on each half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub max: f64,
    pub min: f64,
    pub gaps_used: usize,
}

pub fn tail_stats(seq: &NodeSequence, tail_fraction: f64) -> Result<TailStats> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::Parameter(format!("tail fraction must lie in (0, 1), got {tail_fraction}")));
    }
    let all = gaps(seq);
    let pos: Vec<&Gap> = all.iter().filter(|g| g.left > 0.0).collect();
    let neg: Vec<&Gap> = all.iter().filter(|g| g.right < 0.0).collect();
    let mut used: Vec<f64> = Vec::new();
    for (side, outer_first) in [(pos, false), (neg, true)] {
        if side.is_empty() {
            continue;
        }
        let take = ((side.len() as f64 * tail_fraction).ceil() as usize).clamp(1, side.len());
        if outer_first {
            used.extend(side[..take].iter().map(|g| g.stat));
        } else {
            used.extend(side[side.len() - take..].iter().map(|g| g.stat));
        }
    }
    if used.is_empty() {
        return Err(Error::InsufficientData("no gaps on either half-line".into()));
    }
    Ok(TailStats {
        max: used.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: used.iter().copied().fold(f64::INFINITY, f64::min),
        gaps_used: used.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Supercritical,
    Subcritical,
    Critical,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairClassification {
    /// Gap statistic of Λ behind the verdict (tail max for supercritical, tail min otherwise).
    pub a_lambda: f64,
    pub a_mu: f64,
    /// `a_lambda^{1/p}·a_mu^{1/q}`.
    pub combined: f64,
    pub verdict: Verdict,
    pub lambda_tail: TailStats,
    pub mu_tail: TailStats,
    /// Combined statistic from the tail maxima (limsup proxy).
    pub combined_sup: f64,
    /// Combined statistic from the tail minima (liminf proxy).
    pub combined_inf: f64,
    pub band: f64,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub tail_fraction: f64,
    pub band: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tail_fraction: 0.25, band: 0.02 }
    }
}

pub fn classify_pair(lambda: &NodeSequence, mu: &NodeSequence, tail_fraction: f64) -> Result<PairClassification> {
    classify_pair_with(lambda, mu, ClassifyOptions { tail_fraction, ..ClassifyOptions::default() })
}

pub fn classify_pair_with(lambda: &NodeSequence, mu: &NodeSequence, opts: ClassifyOptions) -> Result<PairClassification> {
    let (p, q) = (lambda.exponent(), mu.exponent());
    if (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("1/p + 1/q must equal 1, got p = {p}, q = {q}")));
    }
    for (name, s) in [("Λ", lambda), ("M", mu)] {
        let (np, nn) = (s.positives().count(), s.negatives().count());
        if np < 20 || nn < 20 {
            return Err(Error::InsufficientData(format!("{name} has {nn} negative and {np} positive points; need 20 per side")));
        }
    }
    let lt = tail_stats(lambda, opts.tail_fraction)?;
    let mt = tail_stats(mu, opts.tail_fraction)?;
    let combined_sup = lt.max.powf(1.0 / p) * mt.max.powf(1.0 / q);
    let combined_inf = lt.min.powf(1.0 / p) * mt.min.powf(1.0 / q);
    let lo = 0.5 - opts.band;
    let hi = 0.5 + opts.band;
    let verdict = if combined_sup < lo {
        Verdict::Supercritical
    } else if combined_inf > hi {
        Verdict::Subcritical
    } else if combined_sup <= hi && combined_inf >= lo {
        Verdict::Critical
    } else {
        Verdict::Indeterminate
    };
    let (a_lambda, a_mu, combined) = match verdict {
        Verdict::Subcritical => (lt.min, mt.min, combined_inf),
        _ => (lt.max, mt.max, combined_sup),
    };
    Ok(PairClassification {
        a_lambda,
        a_mu,
        combined,
        verdict,
        lambda_tail: lt,
        mu_tail: mt,
        combined_sup,
        combined_inf,
        band: opts.band,
        tail_fraction: opts.tail_fraction,
    })
}

/// Smallest `(λ_{j+1}−λ_j)(1+min(|λ_j|,|λ_{j+1}|))^{p−1}`.
pub fn is_p_separated(seq: &NodeSequence) -> Result<(bool, f64)> {
    if seq.len() < 2 {
        return Err(Error::InsufficientData("separation needs at least 2 points".into()));
    }
    let c = separation_constant(seq.points(), seq.exponent());
    Ok((c > 0.0, c))
}

fn separation_constant(points: &[f64], p: f64) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1] - w[0]) * (1.0 + w[0].abs().min(w[1].abs())).powf(p - 1.0))
        .fold(f64::INFINITY, f64::min)
}

/// True iff no gap meeting `window` is longer than `l`.
pub fn is_l_dense(seq: &NodeSequence, l: f64, window: (f64, f64)) -> Result<bool> {
    if !(l > 0.0) {
        return Err(Error::Parameter(format!("l must be positive, got {l}")));
    }
    let pts = seq.points();
    let (w0, w1) = window;
    if pts.is_empty() || w0 > w1 || w0 < pts[0] || w1 > pts[pts.len() - 1] {
        return Err(Error::Range(format!("window [{w0}, {w1}] not inside the represented range")));
    }
    let slack = 1e-12 * l;
    Ok(pts.windows(2).filter(|w| w[1] > w0 && w[0] < w1).all(|w| w[1] - w[0] <= l + slack))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thinned {
    pub nodes: NodeSequence,
    pub removed: Vec<f64>,
    /// Separation constant of the output (`≥ δ` by construction).
    pub c_best: f64,
    pub input_tail_max: f64,
    pub output_tail_max: f64,
    /// Whether `a + 2δ < 1/2`, under which the output stays supercritical.
    pub guarantee_applies: bool,
}

/// Greedy outward selection keeping a point when `(1+|λ_n|)^{p−1}(λ_m − λ_n) ≥ δ` from the last kept one.
pub fn thin_to_separated(seq: &NodeSequence, delta: f64) -> Result<Thinned> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let p = seq.exponent();
    let walk = |side: Vec<f64>| -> Vec<f64> {
        let mut kept: Vec<f64> = Vec::with_capacity(side.len());
        for v in side {
            match kept.last() {
                None => kept.push(v),
                Some(&last) => {
                    if (1.0 + last).powf(p - 1.0) * (v - last) >= delta {
                        kept.push(v);
                    }
                }
            }
        }
        kept
    };
    let pos = walk(seq.positives().collect());
    let neg = walk(seq.negatives().rev().map(|v| -v).collect());
    let zero: Vec<f64> = seq.points().iter().copied().filter(|v| *v == 0.0).collect();
    let mut pos = std::collections::VecDeque::from(pos);
    let mut neg = std::collections::VecDeque::from(neg);
    let mut zero = zero.first().copied();
    // Central gaps: drop the point nearer 0 until each gap across the origin is separated.
    loop {
        let inner: Vec<f64> = neg.front().map(|v| -v).into_iter().chain(zero).chain(pos.front().copied()).collect();
        let bad = inner.windows(2).find(|w| (w[1] - w[0]) * (1.0 + w[0].abs().min(w[1].abs())).powf(p - 1.0) < delta);
        let Some(w) = bad else { break };
        let victim = if w[0].abs() <= w[1].abs() { w[0] } else { w[1] };
        if zero == Some(victim) {
            zero = None;
        } else if victim > 0.0 {
            pos.pop_front();
        } else {
            neg.pop_front();
        }
    }
    let mut points: Vec<f64> = neg.iter().rev().map(|v| -v).collect();
    points.extend(zero);
    points.extend(pos.iter());
    let removed: Vec<f64> = seq.points().iter().copied().filter(|v| points.binary_search_by(|x| x.total_cmp(v)).is_err()).collect();
    let nodes = NodeSequence::new(points, p, Some(seq.truncation_radius()))?;
    let c_best = if nodes.len() >= 2 { separation_constant(nodes.points(), p) } else { f64::INFINITY };
    let input_tail_max = tail_stats(seq, 0.25).map(|t| t.max).unwrap_or(f64::NAN);
    let output_tail_max = tail_stats(&nodes, 0.25).map(|t| t.max).unwrap_or(f64::NAN);
    Ok(Thinned {
        nodes,
        removed,
        c_best,
        input_tail_max,
        output_tail_max,
        guarantee_applies: input_tail_max + 2.0 * delta < 0.5,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enlarged {
    pub nodes: NodeSequence,
    pub added: Vec<f64>,
    /// Tail minimum of `γ^{p−1}Δγ` of the input (NaN when it has fewer than 2 points).
    pub liminf_stat: f64,
    /// Whether `D > 1/(p·δ)`.
    pub density_condition: bool,
    /// `sup |n(r) − D r^p|` over the middle half of `[0, R]`.
    pub max_deviation: f64,
}

/// Adds the centre of every empty cell `[k/D, (k+1)/D)` in the coordinate `u = γ^p`.
pub fn smooth_enlarge(seq_positive_half: &NodeSequence, d: f64) -> Result<Enlarged> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Parameter(format!("D must be positive, got {d}")));
    }
    if let Some(bad) = seq_positive_half.points().iter().find(|v| **v <= 0.0) {
        return Err(Error::Range(format!("smooth enlargement needs positive points, got {bad}")));
    }
    let p = seq_positive_half.exponent();
    let r = seq_positive_half.truncation_radius();
    let n_cells = (d * r.powf(p) - 1e-9).ceil().max(0.0) as usize;
    let mut occupied = vec![false; n_cells];
    for v in seq_positive_half.points() {
        let k = (d * v.powf(p)).floor() as usize;
        if k < n_cells {
            occupied[k] = true;
        }
    }
    let added: Vec<f64> = occupied
        .iter()
        .enumerate()
        .filter(|(_, o)| !**o)
        .map(|(k, _)| ((k as f64 + 0.5) / d).powf(1.0 / p))
        .collect();
    let mut all: Vec<f64> = seq_positive_half.points().to_vec();
    all.extend(&added);
    let nodes = NodeSequence::from_unsorted(all, p, Some(r))?;
    let liminf_stat = if seq_positive_half.len() >= 2 {
        let g = gaps(seq_positive_half);
        let take = ((g.len() as f64 * 0.25).ceil() as usize).clamp(1, g.len());
        g[g.len() - take..].iter().map(|g| g.stat).fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let max_deviation = counting_deviation(nodes.points(), d, p, 0.25 * r, 0.75 * r);
    Ok(Enlarged { nodes, added, liminf_stat, density_condition: d * p * liminf_stat > 1.0, max_deviation })
}

/// Applies [`smooth_enlarge`] to each half-line of a two-sided sequence.
pub fn smooth_enlarge_two_sided(seq: &NodeSequence, d: f64) -> Result<(NodeSequence, Vec<f64>)> {
    let p = seq.exponent();
    let r = seq.truncation_radius();
    let pos = NodeSequence::new(seq.positives().collect(), p, Some(r))?;
    let neg = NodeSequence::new(seq.negatives().rev().map(|v| -v).collect(), p, Some(r))?;
    let ep = smooth_enlarge(&pos, d)?;
    let en = smooth_enlarge(&neg, d)?;
    let mut all: Vec<f64> = en.nodes.points().iter().map(|v| -v).collect();
    all.extend(seq.points().iter().copied().filter(|v| *v == 0.0));
    all.extend(ep.nodes.points());
    let mut added: Vec<f64> = en.added.iter().map(|v| -v).collect();
    added.extend(&ep.added);
    added.sort_by(|a, b| a.total_cmp(b));
    Ok((NodeSequence::from_unsorted(all, p, Some(r))?, added))
}

/// `sup |#{γ ≤ r} − D r^p|` for `r ∈ [r0, r1]`, checked on both sides of every jump.
pub fn counting_deviation(points: &[f64], d: f64, p: f64, r0: f64, r1: f64) -> f64 {
    let count_below = |r: f64, inclusive: bool| points.iter().filter(|v| if inclusive { **v <= r } else { **v < r }).count() as f64;
    let mut worst: f64 = 0.0;
    let mut probe = |r: f64| {
        let model = d * r.powf(p);
        worst = worst.max((count_below(r, true) - model).abs()).max((count_below(r, false) - model).abs());
    };
    probe(r0);
    probe(r1);
    points.iter().filter(|v| **v >= r0 && **v <= r1).for_each(|v| probe(*v));
    worst
}

/// `sup` over gaps of `max(|λ_j|,|λ_{j+1}|)·Δλ` across both sequences, flag `< 1/2`.
pub fn is_uniformly_supercritical(lambda: &NodeSequence, mu: &NodeSequence) -> Result<(bool, f64)> {
    if lambda.exponent() != 2.0 || mu.exponent() != 2.0 {
        return Err(Error::Parameter("uniform supercriticality is defined for p = q = 2".into()));
    }
    let stat = |s: &NodeSequence| {
        s.points()
            .windows(2)
            .map(|w| w[0].abs().max(w[1].abs()) * (w[1] - w[0]))
            .fold(0.0f64, f64::max)
    };
    let sup = stat(lambda).max(stat(mu));
    Ok((sup < 0.5, sup))
}

/// Validates a (Λ, M) pair for use as a sampling set.
pub fn validate_pair(lambda: &NodeSequence, mu: &NodeSequence) -> Result<()> {
    lambda.require_two_sided("Λ")?;
    mu.require_two_sided("M")
}
