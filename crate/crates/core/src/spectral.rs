//! Trigonometric interpolation of periodic samples.
//!
//! A [`TrigSeries`] is the real trigonometric interpolant of `N` uniform
//! samples on `[0, T)`. Derivatives and antiderivatives are taken term by
//! term, which converges super-algebraically for analytic data.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

/// Modes whose magnitude falls below this fraction of the largest one are
/// dropped. They are roundoff, and high derivatives would amplify them.
const TRUNCATION: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct TrigSeries {
    period: f64,
    omega: f64,
    mean: f64,
    /// `coef[k-1]` multiplies `e^{ikωt}`; the real part of the sum is taken.
    coef: Vec<Complex<f64>>,
}

impl TrigSeries {
    pub fn from_samples(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        assert!(n > 0 && period > 0.0);
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let inv_n = 1.0 / n as f64;
        let mean = buf[0].re * inv_n;
        let half = n / 2;
        let mut coef = Vec::with_capacity(half);
        for k in 1..=half {
            let weight = if n % 2 == 0 && k == half { 1.0 } else { 2.0 };
            coef.push(buf[k] * (weight * inv_n));
        }
        let scale = coef.iter().map(|c| c.norm()).fold(mean.abs(), f64::max);
        let keep = coef
            .iter()
            .rposition(|c| c.norm() > TRUNCATION * scale)
            .map_or(0, |i| i + 1);
        coef.truncate(keep);
        TrigSeries {
            period,
            omega: 2.0 * PI / period,
            mean,
            coef,
        }
    }

    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = period / n as f64;
        let samples: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
        Self::from_samples(&samples, period)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Highest retained mode.
    pub fn bandwidth(&self) -> usize {
        self.coef.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_deriv(t, 0)
    }

    pub fn eval_deriv(&self, t: f64, order: usize) -> f64 {
        let ph = phasors(self.omega, t, self.coef.len());
        self.eval_with(&ph, order)
    }

    /// Evaluates the `order`-th derivative given precomputed `e^{ikωt}`.
    pub(crate) fn eval_with(&self, phasors: &[Complex<f64>], order: usize) -> f64 {
        let mut acc = 0.0;
        // i^order cycles through 1, i, -1, -i
        let rot = match order % 4 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        };
        for (k, (c, p)) in self.coef.iter().zip(phasors).enumerate() {
            let kw = (k + 1) as f64 * self.omega;
            acc += (c * rot * p).re * kw.powi(order as i32);
        }
        if order == 0 {
            acc + self.mean
        } else {
            acc
        }
    }

    /// Term-by-term derivative.
    pub fn derivative(&self) -> TrigSeries {
        let coef = self
            .coef
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex::new(0.0, (k + 1) as f64 * self.omega))
            .collect();
        TrigSeries {
            period: self.period,
            omega: self.omega,
            mean: 0.0,
            coef,
        }
    }

    /// `∫_a^b` of the interpolant; `a` and `b` need not lie in one period.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let pa = phasors(self.omega, a, self.coef.len());
        let pb = phasors(self.omega, b, self.coef.len());
        let mut acc = self.mean * (b - a);
        for (k, c) in self.coef.iter().enumerate() {
            let ikw = Complex::new(0.0, (k + 1) as f64 * self.omega);
            acc += (c / ikw * (pb[k] - pa[k])).re;
        }
        acc
    }

    /// Values on an `n`-point uniform grid.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let h = self.period / n as f64;
        (0..n).map(|j| self.eval(j as f64 * h)).collect()
    }
}

/// `e^{ikωt}` for `k = 1..=count`.
///
/// Built by repeated multiplication, reseeded from `sin_cos` every 16 terms
/// so the recurrence error stays at a few ulps.
pub(crate) fn phasors(omega: f64, t: f64, count: usize) -> Vec<Complex<f64>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let (s, c) = (omega * t).sin_cos();
    let step = Complex::new(c, s);
    let mut cur = step;
    for k in 1..=count {
        if k % 16 == 0 {
            let (s, c) = (k as f64 * omega * t).sin_cos();
            cur = Complex::new(c, s);
        }
        out.push(cur);
        cur *= step;
    }
    out
}
