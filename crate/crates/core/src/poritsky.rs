//! Areas cut off by chords, the constant-area (Poritsky) parameter, the
//! envelope of constant-area chords, and the outer billiard map.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{ParamMap, SampledCurve};
use crate::error::{Error, Result};
use crate::geom::{bracket2, Vec2};
use crate::roots::bracketed_root;
use crate::spectral::TrigSeries;

/// Envelope construction refuses parameters with a larger area drift.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-6;
/// Chords used to measure the drift of a candidate parameter.
const DRIFT_CHORDS: usize = 256;

/// Cut areas of one closed planar curve. Holds the interpolant of
/// `½[γ, γ′]`, whose antiderivative gives the arc part of Green's formula.
#[derive(Debug, Clone)]
pub struct AreaIntegrator {
    curve: SampledCurve,
    density: TrigSeries,
}

impl AreaIntegrator {
    pub fn new(curve: &SampledCurve) -> Result<Self> {
        if curve.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: curve.dim() });
        }
        if !curve.is_closed() {
            return Err(Error::NotClosed);
        }
        let values: Vec<f64> = curve
            .params()
            .iter()
            .map(|&t| {
                let j = curve.jet2(t, 1);
                0.5 * bracket2(&j[0], &j[1])
            })
            .collect();
        Ok(AreaIntegrator { density: TrigSeries::from_samples(&values, curve.period()), curve: curve.clone() })
    }

    /// Area between the counterclockwise arc from `t1` to `t2` and the chord
    /// closing it.
    pub fn chord_area(&self, t1: f64, t2: f64) -> f64 {
        let period = self.curve.period();
        let mut t2 = t1 + (t2 - t1).rem_euclid(period);
        if t2 - t1 >= period * (1.0 - 1e-15) {
            t2 = t1;
        }
        if t2 == t1 {
            return 0.0;
        }
        let (a, b) = (self.curve.point2(t1), self.curve.point2(t2));
        self.density.integral(t1, t2) + 0.5 * bracket2(&b, &a)
    }

    pub fn total_area(&self) -> f64 {
        self.density.mean() * self.curve.period()
    }
}

pub fn chord_area(curve: &SampledCurve, t1: f64, t2: f64) -> Result<f64> {
    Ok(AreaIntegrator::new(curve)?.chord_area(t1, t2))
}

/// A candidate constant-area parameter `x ∈ [0, 2π)` on a closed convex
/// curve: the equiaffine parameter rescaled to period `2π`.
#[derive(Debug, Clone)]
pub struct PoritskyParam {
    pub base: SampledCurve,
    map: ParamMap,
    scale: f64,
    areas: AreaIntegrator,
    /// Offset used for the drift statistic.
    pub reference_c: f64,
    /// `max |A(x, x+c) − mean| / mean` at the reference offset.
    pub drift: f64,
}

impl PoritskyParam {
    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    pub fn t_of_x(&self, x: f64) -> f64 {
        self.map.inverse(x / self.scale)
    }

    pub fn x_of_t(&self, t: f64) -> f64 {
        self.map.forward(t) * self.scale
    }

    pub fn point(&self, x: f64) -> Vec2 {
        self.base.point2(self.t_of_x(x))
    }

    /// `dγ/dx`. Where the candidate speed vanishes (flat points) it is
    /// floored at a small fraction of its mean to keep the value finite.
    pub fn velocity(&self, x: f64) -> Vec2 {
        let t = self.t_of_x(x);
        let floor = 1e-12 * self.map.new_period() / self.base.period();
        self.base.jet2(t, 1)[1] / (self.map.speed(t).max(floor) * self.scale)
    }

    /// `A(x, y)` in the constant-area parameter.
    pub fn area(&self, x: f64, y: f64) -> f64 {
        self.areas.chord_area(self.t_of_x(x), self.t_of_x(y))
    }

    pub fn area_drift(&self, c: f64, chords: usize) -> f64 {
        let h = self.period() / chords as f64;
        let areas: Vec<f64> = (0..chords).map(|i| self.area(i as f64 * h, i as f64 * h + c)).collect();
        let mean = areas.iter().sum::<f64>() / chords as f64;
        areas.iter().map(|a| (a - mean).abs()).fold(0.0, f64::max) / mean
    }
}

/// Builds the candidate parameter from `dx ∝ [γ′, γ″]^{1/3} dt` and measures
/// its area drift at `c = 2π/7`. Convex curves with isolated flat points get
/// a candidate too; its speed vanishes there.
pub fn poritsky_parameterize(curve: &SampledCurve) -> Result<(PoritskyParam, f64)> {
    curve.check_convex_ccw(false)?;
    let speed: Vec<f64> = curve
        .params()
        .iter()
        .map(|&t| {
            let j = curve.jet2(t, 2);
            bracket2(&j[1], &j[2]).max(0.0).cbrt()
        })
        .collect();
    let map = ParamMap::from_speed_samples(&speed, curve.period());
    let scale = 2.0 * PI / map.new_period();
    let mut pp = PoritskyParam {
        base: curve.clone(),
        map,
        scale,
        areas: AreaIntegrator::new(curve)?,
        reference_c: 2.0 * PI / 7.0,
        drift: 0.0,
    };
    pp.drift = pp.area_drift(pp.reference_c, DRIFT_CHORDS);
    Ok((pp.clone(), pp.drift))
}

#[derive(Debug, Clone, Serialize)]
pub struct Chord {
    pub x: f64,
    pub y: f64,
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub midpoint: [f64; 2],
    pub area: f64,
    /// `½[γ(y) − γ(x), γ̇(x)]`
    pub da_dx: f64,
    /// `½[γ(y) − γ(x), γ̇(y)]`
    pub da_dy: f64,
    /// `|sin|` of the angle between the midpoint velocity and the chord.
    pub tangency_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChordFamily {
    pub c: f64,
    pub drift: f64,
    pub chords: Vec<Chord>,
}

impl ChordFamily {
    /// `(max − min) / mean` of the cut areas.
    pub fn area_spread(&self) -> f64 {
        let areas = self.chords.iter().map(|c| c.area);
        let max = areas.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = areas.clone().fold(f64::INFINITY, f64::min);
        (max - min) / (areas.sum::<f64>() / self.chords.len() as f64)
    }

    /// `max |∂A/∂x + ∂A/∂y|`, the derivative of `A(x, x+c)` along the family.
    pub fn max_area_derivative(&self) -> f64 {
        self.chords.iter().map(|c| (c.da_dx + c.da_dy).abs()).fold(0.0, f64::max)
    }
}

/// Chords from `x` to `x + c` at `count` uniformly spaced `x`.
pub fn constant_area_chords(pp: &PoritskyParam, c: f64, count: usize) -> Result<ChordFamily> {
    if !(c > 0.0 && c < pp.period()) {
        return Err(Error::Precondition(format!("chord offset {c} outside (0, 2π)")));
    }
    if count == 0 {
        return Err(Error::Empty("chord family with no chords".into()));
    }
    let h = pp.period() / count as f64;
    let chords = (0..count)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * h;
            let y = x + c;
            let (p, q) = (pp.point(x), pp.point(y));
            let (vp, vq) = (pp.velocity(x), pp.velocity(y));
            let chord = q - p;
            let mid_velocity = 0.5 * (vp + vq);
            let tangency_defect =
                bracket2(&mid_velocity, &chord).abs() / (mid_velocity.norm() * chord.norm());
            let mid = 0.5 * (p + q);
            Chord {
                x,
                y,
                p: [p.x, p.y],
                q: [q.x, q.y],
                midpoint: [mid.x, mid.y],
                area: pp.area(x, y),
                da_dx: 0.5 * bracket2(&chord, &vp),
                da_dy: 0.5 * bracket2(&chord, &vq),
                tangency_defect,
            }
        })
        .collect();
    Ok(ChordFamily { c, drift: pp.drift, chords })
}

#[derive(Debug, Clone)]
pub struct Envelope {
    /// Chord midpoints, parameterized by `x` with period `2π`.
    pub curve: SampledCurve,
    pub max_tangency_defect: f64,
}

/// The curve touched by every chord of the family at its midpoint.
pub fn area_envelope(family: &ChordFamily, drift_tol: f64) -> Result<Envelope> {
    if family.drift > drift_tol {
        return Err(Error::DriftTooLarge { drift: family.drift, tol: drift_tol });
    }
    if family.chords.is_empty() {
        return Err(Error::Empty("chord family with no chords".into()));
    }
    let pts: Vec<Vec<f64>> = family.chords.iter().map(|c| c.midpoint.to_vec()).collect();
    let max_tangency_defect = family.chords.iter().map(|c| c.tangency_defect).fold(0.0, f64::max);
    Ok(Envelope { curve: SampledCurve::closed(&pts, 2.0 * PI)?, max_tangency_defect })
}

/// Reflects `p` in the point where the tangent line from `p` touches the
/// curve, taking the tangent whose direction from `p` agrees with the
/// curve's orientation.
pub fn outer_billiard_map(curve: &SampledCurve, p: Vec2) -> Result<Vec2> {
    if curve.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: curve.dim() });
    }
    let g = |t: f64| {
        let j = curve.jet2(t, 1);
        bracket2(&(j[0] - p), &j[1])
    };
    // g > 0 everywhere when p is inside a counterclockwise convex curve
    let n = 4 * curve.len();
    let h = curve.period() / n as f64;
    let values: Vec<f64> = (0..n).map(|i| g(i as f64 * h)).collect();
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if values.iter().all(|&v| v > -1e-13 * scale) {
        return Err(Error::Precondition(format!(
            "point ({}, {}) is not outside the curve",
            p.x, p.y
        )));
    }
    // the tangency with the curve on the left is where g turns from − to +
    let i = (0..n)
        .find(|&i| values[i] < 0.0 && values[(i + 1) % n] >= 0.0)
        .ok_or_else(|| Error::NoBracket("no outer tangency found".into()))?;
    let a = i as f64 * h;
    let t = bracketed_root(g, a, a + h, 0.0)?;
    let touch = curve.point2(t);
    let dir = curve.jet2(t, 1)[1];
    if (touch - p).dot(&dir) <= 0.0 {
        return Err(Error::NoBracket("tangency found on the wrong side".into()));
    }
    Ok(2.0 * touch - p)
}

/// `steps` iterates of the outer billiard map, starting point included.
pub fn outer_billiard_orbit(curve: &SampledCurve, start: Vec2, steps: usize) -> Result<Vec<Vec2>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start);
    let mut p = start;
    for _ in 0..steps {
        p = outer_billiard_map(curve, p)?;
        out.push(p);
    }
    Ok(out)
}

/// `[γ̇(x−ε) + γ̇(x+ε), γ(x+ε) − γ(x−ε)]` with `ε = c/2`.
pub fn poritsky_residual_ode(pp: &PoritskyParam, x: f64, c: f64) -> f64 {
    let e = 0.5 * c;
    bracket2(&(pp.velocity(x - e) + pp.velocity(x + e)), &(pp.point(x + e) - pp.point(x - e)))
}
