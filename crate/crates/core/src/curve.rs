//! Closed curves stored as uniform periodic samples.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bracket2, Vec2, Vec3};
use crate::roots::monotone_newton;
use crate::spectral::{phasors, TrigSeries};

pub const DEFAULT_SAMPLES: usize = 512;
pub const MAX_JET_ORDER: usize = 5;

/// A point together with its parameter derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub t: f64,
    /// `derivs[k]` is the k-th derivative; `derivs[0]` is the point.
    pub derivs: Vec<DVector<f64>>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.derivs[0]
    }

    pub fn d2(&self, k: usize) -> Vec2 {
        Vec2::new(self.derivs[k][0], self.derivs[k][1])
    }

    pub fn d3(&self, k: usize) -> Vec3 {
        Vec3::new(self.derivs[k][0], self.derivs[k][1], self.derivs[k][2])
    }
}

/// A smooth closed curve in the plane or in 3-space, sampled at uniformly
/// spaced parameter values on one period.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    period: f64,
    closed: bool,
    /// `coords[i][j]`: coordinate `i` of sample `j`.
    coords: Vec<Vec<f64>>,
    series: Vec<TrigSeries>,
}

impl SampledCurve {
    /// Builds a closed curve from points at parameters `j·period/n`.
    pub fn closed(points: &[Vec<f64>], period: f64) -> Result<Self> {
        Self::build(points, period, true)
    }

    /// Samples of an open arc. Jet queries on it fail with [`Error::NotClosed`].
    pub fn open(points: &[Vec<f64>], period: f64) -> Result<Self> {
        Self::build(points, period, false)
    }

    fn build(points: &[Vec<f64>], period: f64, closed: bool) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Empty("a curve needs at least 3 samples".into()));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Spec(format!("period must be positive, got {period}")));
        }
        let dim = points[0].len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::Spec(format!("curves live in 2 or 3 dimensions, got {dim}")));
        }
        let mut coords = vec![Vec::with_capacity(points.len()); dim];
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Spec("non-finite sample".into()));
            }
            for (i, v) in p.iter().enumerate() {
                coords[i].push(*v);
            }
        }
        let series = if closed {
            coords.iter().map(|c| TrigSeries::from_samples(c, period)).collect()
        } else {
            Vec::new()
        };
        Ok(SampledCurve { period, closed, coords, series })
    }

    pub fn from_fn2(period: f64, n: usize, f: impl Fn(f64) -> Vec2) -> Self {
        let h = period / n as f64;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let p = f(j as f64 * h);
                vec![p.x, p.y]
            })
            .collect();
        Self::closed(&pts, period).expect("valid planar samples")
    }

    pub fn from_fn3(period: f64, n: usize, f: impl Fn(f64) -> Vec3) -> Self {
        let h = period / n as f64;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let p = f(j as f64 * h);
                vec![p.x, p.y, p.z]
            })
            .collect();
        Self::closed(&pts, period).expect("valid spatial samples")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn len(&self) -> usize {
        self.coords[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn params(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.len()).map(|j| j as f64 * h).collect()
    }

    pub fn sample(&self, j: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[j]).collect()
    }

    pub fn samples(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.sample(j)).collect()
    }

    pub fn sample2(&self, j: usize) -> Vec2 {
        Vec2::new(self.coords[0][j], self.coords[1][j])
    }

    pub fn sample3(&self, j: usize) -> Vec3 {
        Vec3::new(self.coords[0][j], self.coords[1][j], self.coords[2][j])
    }

    /// Reduces a parameter into `[0, period)`.
    pub fn wrap(&self, t: f64) -> f64 {
        let r = t.rem_euclid(self.period);
        if r >= self.period { 0.0 } else { r }
    }

    /// Point and derivatives up to `order` at `t`, by trigonometric
    /// interpolation of the samples.
    pub fn evaluate_jet(&self, t: f64, order: usize) -> Result<Jet> {
        if order > MAX_JET_ORDER {
            return Err(Error::OrderTooHigh(order));
        }
        if !self.closed {
            return Err(Error::NotClosed);
        }
        let derivs = self.derivs(t, order);
        Ok(Jet {
            t: self.wrap(t),
            derivs: derivs.into_iter().map(DVector::from_vec).collect(),
        })
    }

    pub(crate) fn derivs(&self, t: f64, order: usize) -> Vec<Vec<f64>> {
        let band = self.series.iter().map(TrigSeries::bandwidth).max().unwrap_or(0);
        let ph = phasors(2.0 * PI / self.period, t, band);
        (0..=order)
            .map(|m| self.series.iter().map(|s| s.eval_with(&ph, m)).collect())
            .collect()
    }

    /// `γ^{(k)}(t)` for `k = 0..=order` of a planar curve. Panics on open
    /// curves, which only the constructors can produce.
    pub fn jet2(&self, t: f64, order: usize) -> Vec<Vec2> {
        assert!(self.closed && self.dim() == 2 && order <= MAX_JET_ORDER);
        self.derivs(t, order).into_iter().map(|d| Vec2::new(d[0], d[1])).collect()
    }

    pub fn jet3(&self, t: f64, order: usize) -> Vec<Vec3> {
        assert!(self.closed && self.dim() == 3 && order <= MAX_JET_ORDER);
        self.derivs(t, order)
            .into_iter()
            .map(|d| Vec3::new(d[0], d[1], d[2]))
            .collect()
    }

    pub fn point2(&self, t: f64) -> Vec2 {
        self.jet2(t, 0)[0]
    }

    pub fn point3(&self, t: f64) -> Vec3 {
        self.jet3(t, 0)[0]
    }

    /// Signed enclosed area of a planar curve; positive when counterclockwise.
    pub fn signed_area(&self) -> f64 {
        assert_eq!(self.dim(), 2);
        let h = self.spacing();
        self.params()
            .iter()
            .map(|&t| {
                let j = self.jet2(t, 1);
                0.5 * bracket2(&j[0], &j[1])
            })
            .sum::<f64>()
            * h
    }

    /// Rejects planar curves that are clockwise or whose curvature changes
    /// sign or vanishes on the sample grid.
    pub fn check_strictly_convex_ccw(&self) -> Result<()> {
        self.check_convex_ccw(true)
    }

    /// Like [`Self::check_strictly_convex_ccw`] but tolerates isolated points of
    /// zero curvature, such as the vertices of `x⁴ + y⁴ = 1`.
    pub fn check_convex_ccw(&self, strict: bool) -> Result<()> {
        if !self.closed {
            return Err(Error::NotClosed);
        }
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        let scale = 2.0 * PI / self.length();
        let min_rel = self.min_curvature() / scale;
        let floor = if strict { 1e-8 } else { -1e-6 };
        if min_rel <= floor {
            return Err(Error::NotConvex(format!(
                "relative curvature reaches {min_rel:e} (curve must be counterclockwise with {} curvature)",
                if strict { "positive" } else { "nonnegative" }
            )));
        }
        Ok(())
    }

    /// Smallest signed curvature on the sample grid.
    pub fn min_curvature(&self) -> f64 {
        self.params()
            .iter()
            .map(|&t| {
                let j = self.jet2(t, 2);
                bracket2(&j[1], &j[2]) / j[1].norm().powi(3)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Total length, by the trapezoid rule on the period.
    pub fn length(&self) -> f64 {
        let h = self.spacing();
        self.params()
            .iter()
            .map(|&t| {
                let d = self.derivs(t, 1);
                d[1].iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            * h
    }

    /// Resamples the curve in the parameter `τ` with `dτ/dt = speed(t)`.
    ///
    /// `speed` is given on this curve's sample grid. The new curve has `n_out`
    /// samples and period `∫ speed dt`.
    pub fn reparameterize(&self, speed: &[f64]) -> Result<SampledCurve> {
        Ok(self.reparameterize_with_map(speed, self.len())?.0)
    }

    pub fn reparameterize_with_map(
        &self,
        speed: &[f64],
        n_out: usize,
    ) -> Result<(SampledCurve, ParamMap)> {
        if !self.closed {
            return Err(Error::NotClosed);
        }
        if speed.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: speed.len() });
        }
        let min = speed.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NonPositiveSpeed { min });
        }
        let map = ParamMap::new(TrigSeries::from_samples(speed, self.period));
        let new_period = map.new_period();
        let h = new_period / n_out as f64;
        let pts: Vec<Vec<f64>> = (0..n_out)
            .map(|j| {
                let t = map.inverse(j as f64 * h);
                self.derivs(t, 0).swap_remove(0)
            })
            .collect();
        Ok((SampledCurve::closed(&pts, new_period)?, map))
    }

    /// Applies a linear map followed by a translation to every sample.
    pub fn transformed2(&self, m: &nalgebra::Matrix2<f64>, shift: Vec2) -> Result<SampledCurve> {
        let pts: Vec<Vec<f64>> = (0..self.len())
            .map(|j| {
                let p = m * self.sample2(j) + shift;
                vec![p.x, p.y]
            })
            .collect();
        SampledCurve::closed(&pts, self.period)
    }

    pub fn transformed3(&self, m: &nalgebra::Matrix3<f64>) -> Result<SampledCurve> {
        let pts: Vec<Vec<f64>> = (0..self.len())
            .map(|j| {
                let p = m * self.sample3(j);
                vec![p.x, p.y, p.z]
            })
            .collect();
        SampledCurve::closed(&pts, self.period)
    }

    /// Same curve, resampled with `n` points at the same parameterization.
    pub fn resampled(&self, n: usize) -> Result<SampledCurve> {
        let h = self.period / n as f64;
        let pts: Vec<Vec<f64>> = (0..n).map(|j| self.derivs(j as f64 * h, 0).swap_remove(0)).collect();
        SampledCurve::closed(&pts, self.period)
    }
}

/// Monotone change of parameter `τ(t) = ∫₀ᵗ speed`.
#[derive(Debug, Clone)]
pub struct ParamMap {
    speed: TrigSeries,
    min_speed: f64,
    max_speed: f64,
}

impl ParamMap {
    /// Map from speed samples on the uniform grid of `[0, period)`. The speed
    /// may vanish at isolated points.
    pub(crate) fn from_speed_samples(speed: &[f64], period: f64) -> Self {
        Self::new(TrigSeries::from_samples(speed, period))
    }

    fn new(speed: TrigSeries) -> Self {
        let grid = speed.sample(4 * speed.bandwidth().max(8));
        let min_speed = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let max_speed = grid.iter().copied().fold(0.0, f64::max);
        ParamMap { speed, min_speed, max_speed }
    }

    pub fn new_period(&self) -> f64 {
        self.speed.mean() * self.speed.period()
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.speed.eval(t)
    }

    pub fn forward(&self, t: f64) -> f64 {
        self.speed.integral(0.0, t)
    }

    /// Old parameter for a new one.
    pub fn inverse(&self, tau: f64) -> f64 {
        let p_new = self.new_period();
        let p_old = self.speed.period();
        let turns = (tau / p_new).floor();
        let r = tau - turns * p_new;
        let lo = (r / self.max_speed.max(f64::MIN_POSITIVE) * 0.999).max(0.0);
        let hi = (r / self.min_speed.max(f64::MIN_POSITIVE) * 1.001).min(p_old);
        let guess = r / self.speed.mean();
        let t = monotone_newton(
            |t| self.forward(t) - r,
            |t| self.speed(t),
            lo.min(guess),
            hi.max(guess),
            guess,
            1e-15 * p_old,
        );
        t + turns * p_old
    }
}

/// JSON description of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    /// `(a cos θ, b sin θ)` rotated by `rotation` and shifted by `center`.
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    /// `|x/a|^p + |y/b|^p = 1` in the polar parameterization.
    Superellipse {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        exponent: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    /// Truncated Fourier series per coordinate on `[0, 2π)`.
    Fourier {
        x: FourierCoeffs,
        y: FourierCoeffs,
        #[serde(default)]
        z: Option<FourierCoeffs>,
        #[serde(default)]
        samples: Option<usize>,
    },
    /// Raw samples at uniform parameters on `[0, period)`.
    Samples { points: Vec<Vec<f64>>, period: f64 },
    /// Section of the unit sphere by the cone `x²/a₁² + y²/a₂² = z²/a₃²`,
    /// optionally perturbed radially to break the conic property.
    ConeSection {
        axes: [f64; 3],
        #[serde(default)]
        perturbation: Option<Perturbation>,
        #[serde(default)]
        samples: Option<usize>,
    },
    /// Circle of the unit sphere at the given colatitude.
    SmallCircle {
        colatitude: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    /// `cos[k]` multiplies `cos kθ`; `cos[0]` is the constant term.
    #[serde(default)]
    pub cos: Vec<f64>,
    /// `sin[k-1]` multiplies `sin kθ`.
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierCoeffs {
    fn eval(&self, th: f64) -> f64 {
        let c: f64 = self.cos.iter().enumerate().map(|(k, a)| a * (k as f64 * th).cos()).sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * ((k + 1) as f64 * th).sin())
            .sum();
        c + s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub mode: u32,
    pub amplitude: f64,
}

impl CurveSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Spec(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn build(&self) -> Result<SampledCurve> {
        let n_or = |s: &Option<usize>| s.unwrap_or(DEFAULT_SAMPLES);
        let tau = 2.0 * PI;
        match self {
            CurveSpec::Ellipse { a, b, center, rotation, samples } => {
                positive(&[*a, *b])?;
                let (s, c) = rotation.sin_cos();
                let (a, b, cx, cy) = (*a, *b, center[0], center[1]);
                Ok(SampledCurve::from_fn2(tau, n_or(samples), move |t| {
                    let (x, y) = (a * t.cos(), b * t.sin());
                    Vec2::new(c * x - s * y + cx, s * x + c * y + cy)
                }))
            }
            CurveSpec::Superellipse { a, b, exponent, samples } => {
                positive(&[*a, *b, *exponent])?;
                let (a, b, p) = (*a, *b, *exponent);
                Ok(SampledCurve::from_fn2(tau, n_or(samples), move |t| {
                    let (s, c) = t.sin_cos();
                    let r = ((c / a).abs().powf(p) + (s / b).abs().powf(p)).powf(-1.0 / p);
                    Vec2::new(r * c, r * s)
                }))
            }
            CurveSpec::Fourier { x, y, z, samples } => {
                let n = n_or(samples);
                Ok(match z {
                    None => SampledCurve::from_fn2(tau, n, |t| Vec2::new(x.eval(t), y.eval(t))),
                    Some(z) => SampledCurve::from_fn3(tau, n, |t| {
                        Vec3::new(x.eval(t), y.eval(t), z.eval(t))
                    }),
                })
            }
            CurveSpec::Samples { points, period } => SampledCurve::closed(points, *period),
            CurveSpec::ConeSection { axes, perturbation, samples } => {
                positive(axes)?;
                let [a1, a2, a3] = *axes;
                let (mode, amp) = perturbation
                    .as_ref()
                    .map_or((0.0, 0.0), |p| (p.mode as f64, p.amplitude));
                Ok(SampledCurve::from_fn3(tau, n_or(samples), move |t| {
                    let w = Vec3::new(a1 * t.cos(), a2 * t.sin(), a3 * (1.0 + amp * (mode * t).cos()));
                    w.normalize()
                }))
            }
            CurveSpec::SmallCircle { colatitude, samples } => {
                let al = *colatitude;
                if !(al > 0.0 && al < PI / 2.0) {
                    return Err(Error::Spec("colatitude must lie in (0, π/2)".into()));
                }
                Ok(SampledCurve::from_fn3(tau, n_or(samples), move |t| {
                    Vec3::new(al.sin() * t.cos(), al.sin() * t.sin(), al.cos())
                }))
            }
        }
    }
}

fn positive(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Spec(format!("expected positive parameters, got {vals:?}")))
    }
}

/// `(a cos θ, b sin θ)` with the default sample count.
pub fn ellipse(a: f64, b: f64, n: usize) -> SampledCurve {
    SampledCurve::from_fn2(2.0 * PI, n, |t| Vec2::new(a * t.cos(), b * t.sin()))
}

pub fn circle(r: f64, n: usize) -> SampledCurve {
    ellipse(r, r, n)
}

/// `|x|^p + |y|^p = 1`, polar parameterization.
pub fn superellipse(p: f64, n: usize) -> SampledCurve {
    CurveSpec::Superellipse { a: 1.0, b: 1.0, exponent: p, samples: Some(n) }
        .build()
        .expect("valid superellipse")
}
