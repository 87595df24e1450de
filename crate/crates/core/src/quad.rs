//! Fixed-order summation helpers. Results do not depend on thread count.

use crate::C64;

/// Neumaier-compensated sum of real terms, summed left to right.
pub fn sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for t in terms {
        let u = s + t;
        if s.abs() >= t.abs() {
            c += (s - u) + t;
        } else {
            c += (t - u) + s;
        }
        s = u;
    }
    s + c
}

/// Compensated sum of complex terms (componentwise).
pub fn csum<I: IntoIterator<Item = C64>>(terms: I) -> C64 {
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    for t in terms {
        re.add(t.re);
        im.add(t.im);
    }
    C64::new(re.value(), im.value())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Kahan {
    s: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, t: f64) {
        let u = self.s + t;
        if self.s.abs() >= t.abs() {
            self.c += (self.s - u) + t;
        } else {
            self.c += (t - u) + self.s;
        }
        self.s = u;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Maximum of `log(exp(a_i))`-style terms combined as `log Σ exp(a_i)`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + sum(terms.iter().map(|t| (t - m).exp())).ln()
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = sum(x.iter().copied()) / n;
    let my = sum(y.iter().copied()) / n;
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(terms), 2.0);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let (m, b) = linear_fit(&x, &y);
        assert!((m - 3.0).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
    }

    #[test]
    fn lse_is_stable() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
