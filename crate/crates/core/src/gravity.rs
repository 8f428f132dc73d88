//! Attraction of a curve under the planar `1/r` force law, the homeoid
//! density `1/|Ax|` on an ellipse, and the chord-wise cancellation behind
//! its vanishing interior force.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conics::QuadraticForm;
use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::geom::{bracket2, Vec2};
use crate::roots::bracketed_root;
use crate::spectral::TrigSeries;

/// Interior points closer than this to the curve are refused.
pub const BOUNDARY_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum DensityModel {
    Homeoid(QuadraticForm),
    Uniform,
    /// Values at the curve's own samples, interpolated in between.
    Custom(Vec<f64>),
}

/// `1/|Ax|` at a point of the ellipse `xᵀAx = level`.
pub fn homeoid_density(form: &QuadraticForm, x: &Vec2) -> Result<f64> {
    let residual = (x.dot(&form.apply2(x)) - form.level()).abs() / form.level().abs().max(1e-300);
    if residual > 1e-8 {
        return Err(Error::OffSurface { residual });
    }
    Ok(1.0 / form.apply2(x).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceResult {
    pub force: [f64; 2],
    /// `|F_n − F_{n/2}|`.
    pub quadrature_error: f64,
}

impl ForceResult {
    pub fn magnitude(&self) -> f64 {
        self.force[0].hypot(self.force[1])
    }
}

/// Winding number of the curve about `o` and the smallest sample distance.
fn winding_and_clearance(curve: &SampledCurve, o: &Vec2, nodes: usize) -> (f64, f64) {
    let h = curve.period() / nodes as f64;
    let mut turn = 0.0;
    let mut clearance = f64::INFINITY;
    for j in 0..nodes {
        let jet = curve.jet2(j as f64 * h, 1);
        let r = jet[0] - o;
        turn += bracket2(&r, &jet[1]) / r.norm_squared() * h;
        clearance = clearance.min(r.norm());
    }
    (turn / std::f64::consts::TAU, clearance)
}

fn check_interior(curve: &SampledCurve, o: &Vec2, nodes: usize) -> Result<()> {
    let (winding, clearance) = winding_and_clearance(curve, o, nodes.max(4 * curve.len()));
    if clearance < BOUNDARY_EXCLUSION {
        return Err(Error::Precondition(format!(
            "point ({}, {}) lies within {BOUNDARY_EXCLUSION:e} of the curve",
            o.x, o.y
        )));
    }
    if (winding - 1.0).abs() > 0.5 {
        return Err(Error::Precondition(format!("point ({}, {}) is not inside the curve", o.x, o.y)));
    }
    Ok(())
}

fn trapezoid_force(curve: &SampledCurve, density: &dyn Fn(f64, &Vec2) -> f64, o: &Vec2, nodes: usize) -> Vec2 {
    let h = curve.period() / nodes as f64;
    (0..nodes)
        .map(|j| {
            let t = j as f64 * h;
            let jet = curve.jet2(t, 1);
            let r = jet[0] - o;
            r * (density(t, &jet[0]) * jet[1].norm() * h / r.norm_squared())
        })
        .sum()
}

/// `∮ ρ (x − O)/|x − O|² ds` by the periodic trapezoid rule on `nodes`
/// points of the curve parameter.
pub fn net_force(curve: &SampledCurve, density: &DensityModel, o: &Vec2, nodes: usize) -> Result<ForceResult> {
    if curve.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: curve.dim() });
    }
    if nodes < 4 {
        return Err(Error::Precondition(format!("need at least 4 quadrature nodes, got {nodes}")));
    }
    check_interior(curve, o, nodes)?;
    let custom;
    let rho: Box<dyn Fn(f64, &Vec2) -> f64> = match density {
        DensityModel::Uniform => Box::new(|_, _| 1.0),
        DensityModel::Homeoid(form) => {
            for x in (0..curve.len()).map(|j| curve.sample2(j)) {
                homeoid_density(form, &x)?;
            }
            Box::new(move |_, x: &Vec2| 1.0 / form.apply2(x).norm())
        }
        DensityModel::Custom(values) => {
            if values.len() != curve.len() {
                return Err(Error::DimensionMismatch { expected: curve.len(), got: values.len() });
            }
            if values.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Precondition("density must be positive".into()));
            }
            custom = TrigSeries::from_samples(values, curve.period());
            Box::new(|t, _| custom.eval(t))
        }
    };
    let fine = trapezoid_force(curve, &*rho, o, nodes);
    let coarse = trapezoid_force(curve, &*rho, o, nodes / 2);
    Ok(ForceResult { force: [fine.x, fine.y], quadrature_error: (fine - coarse).norm() })
}

/// Forces at many points, in parallel.
pub fn net_forces(
    curve: &SampledCurve,
    density: &DensityModel,
    points: &[Vec2],
    nodes: usize,
) -> Result<Vec<ForceResult>> {
    points.par_iter().map(|o| net_force(curve, density, o, nodes)).collect()
}

/// Points drawn uniformly from the region shrunk toward the centroid by
/// `shrink`, so that they keep away from the curve.
pub fn random_interior_points(curve: &SampledCurve, count: usize, seed: u64, shrink: f64) -> Result<Vec<Vec2>> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::Precondition(format!("shrink factor {shrink} outside (0, 1)")));
    }
    let pts: Vec<Vec2> = (0..curve.len()).map(|j| curve.sample2(j)).collect();
    let centroid = pts.iter().sum::<Vec2>() / pts.len() as f64;
    let (mut lo, mut hi) = (centroid, centroid);
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count {
        draws += 1;
        if draws > 1000 * count.max(1) {
            return Err(Error::Precondition("could not place interior points".into()));
        }
        let q = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        // q is accepted when its preimage under the shrink lies inside
        let pre = centroid + (q - centroid) / shrink;
        let (w, clearance) = winding_and_clearance(curve, &pre, 4 * curve.len());
        if (w - 1.0).abs() < 0.5 && clearance > 0.0 {
            out.push(q);
        }
    }
    Ok(out)
}

/// The two points where a line through an interior point meets the
/// ellipse, and the balance of the forces they exert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCancellation {
    /// Intersection in the direction `u`.
    pub x: [f64; 2],
    /// Intersection in the direction `−u`.
    pub y: [f64; 2],
    /// `(N(x) + N(y))·u`
    pub residual: f64,
    /// `1/(N(x)·u)`
    pub force_x: f64,
    /// `1/(−N(y)·u)`
    pub force_y: f64,
}

/// Intersections from the quadratic `(O + su)ᵀA(O + su) = level`.
pub fn pair_cancellation(form: &QuadraticForm, o: &Vec2, direction: &Vec2) -> Result<PairCancellation> {
    if form.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: form.dim() });
    }
    let u = direction.normalize();
    let a = u.dot(&form.apply2(&u));
    let b = o.dot(&form.apply2(&u));
    let c = o.dot(&form.apply2(o)) - form.level();
    if !(c < 0.0 && a > 0.0) {
        return Err(Error::Precondition(format!("point ({}, {}) is not inside the ellipse", o.x, o.y)));
    }
    let disc = (b * b - a * c).sqrt();
    // stable roots of a s² + 2b s + c = 0
    let q = -(b + b.signum() * disc);
    let (s1, s2) = (q / a, c / q);
    let (sp, sm) = if s1 > 0.0 { (s1, s2) } else { (s2, s1) };
    let x = o + u * sp;
    let y = o + u * sm;
    Ok(balance(&form.apply2(&x), &form.apply2(&y), &x, &y, &u))
}

fn balance(nx: &Vec2, ny: &Vec2, x: &Vec2, y: &Vec2, u: &Vec2) -> PairCancellation {
    PairCancellation {
        x: [x.x, x.y],
        y: [y.x, y.y],
        residual: (nx + ny).dot(u),
        force_x: 1.0 / nx.dot(u),
        force_y: -1.0 / ny.dot(u),
    }
}

/// The same balance for a curve `F = 0` bounding a convex region around
/// `o`, using `normal` in place of `Ax`.
pub fn implicit_pair_cancellation(
    f: impl Fn(&Vec2) -> f64,
    normal: impl Fn(&Vec2) -> Vec2,
    o: &Vec2,
    direction: &Vec2,
) -> Result<PairCancellation> {
    let u = direction.normalize();
    if !(f(o) < 0.0) {
        return Err(Error::Precondition(format!("point ({}, {}) is not inside the curve", o.x, o.y)));
    }
    let along = |sign: f64| -> Result<f64> {
        let g = |s: f64| f(&(o + u * (sign * s)));
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoBracket("line does not leave the region".into()));
            }
        }
        bracketed_root(g, 0.0, hi, 0.0)
    };
    let x = o + u * along(1.0)?;
    let y = o - u * along(-1.0)?;
    Ok(balance(&normal(&x), &normal(&y), &x, &y, &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{circle, ellipse, superellipse};
    use nalgebra::{DMatrix, Matrix2, Rotation2};

    #[test]
    fn density_values() {
        let circ = QuadraticForm::diagonal(&[1.0, 1.0], 1.0);
        assert!((homeoid_density(&circ, &Vec2::new(0.6, 0.8)).unwrap() - 1.0).abs() < 1e-15);
        let e = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
        assert!((homeoid_density(&e, &Vec2::new(2.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((homeoid_density(&e, &Vec2::new(0.0, 1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(homeoid_density(&e, &Vec2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn no_force_in_cavity() {
        let f = net_force(&circle(1.0, 64), &DensityModel::Uniform, &Vec2::zeros(), 256).unwrap();
        assert!(f.magnitude() < 1e-14);
        let e = ellipse(2.0, 1.0, 256);
        let homeoid = DensityModel::Homeoid(QuadraticForm::diagonal(&[0.25, 1.0], 1.0));
        let f = net_force(&e, &homeoid, &Vec2::new(0.7, 0.3), 1024).unwrap();
        assert!(f.magnitude() < 1e-8, "{f:?}");
        let u = net_force(&e, &DensityModel::Uniform, &Vec2::new(0.5, 0.0), 1024).unwrap();
        assert!(u.magnitude() > 1e-3);
    }

    #[test]
    fn spectral_convergence() {
        let e = ellipse(2.0, 1.0, 256);
        let homeoid = DensityModel::Homeoid(QuadraticForm::diagonal(&[0.25, 1.0], 1.0));
        let o = Vec2::new(0.9, -0.4);
        let mags: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| net_force(&e, &homeoid, &o, n).unwrap().magnitude())
            .collect();
        for w in mags.windows(2) {
            assert!(w[1] < 1e-2 * w[0] || w[1] < 1e-13, "{mags:?}");
        }
    }

    #[test]
    fn refuses_bad_points() {
        let e = ellipse(2.0, 1.0, 128);
        assert!(net_force(&e, &DensityModel::Uniform, &Vec2::new(3.0, 0.0), 256).is_err());
        assert!(net_force(&e, &DensityModel::Uniform, &Vec2::new(2.0, 0.0), 256).is_err());
        let form = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
        assert!(pair_cancellation(&form, &Vec2::new(2.5, 0.0), &Vec2::x()).is_err());
    }

    #[test]
    fn interior_points_are_interior() {
        let e = ellipse(2.0, 1.0, 128);
        let pts = random_interior_points(&e, 50, 3, 0.95).unwrap();
        assert_eq!(pts, random_interior_points(&e, 50, 3, 0.95).unwrap());
        for p in pts {
            assert!((p.x / 2.0).powi(2) + p.y * p.y < 0.95f64.powi(2) + 1e-12);
        }
    }

    #[test]
    fn chord_forces_cancel() {
        let form = QuadraticForm::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, 1.5]), 1.0).unwrap();
        let o = Vec2::new(0.3, -0.2);
        for k in 0..12 {
            let d = Vec2::new((k as f64).cos(), (k as f64).sin());
            let p = pair_cancellation(&form, &o, &d).unwrap();
            assert!(p.residual.abs() < 1e-12);
            assert!(p.force_x > 0.0 && p.force_y > 0.0);
            let x = Vec2::new(p.x[0], p.x[1]);
            assert!((x.dot(&form.apply2(&x)) - 1.0).abs() < 1e-13);
        }
        let circ = QuadraticForm::diagonal(&[1.0, 1.0], 1.0);
        let p = pair_cancellation(&circ, &Vec2::zeros(), &Vec2::new(1.0, 2.0)).unwrap();
        assert!((p.force_x - p.force_y).abs() < 1e-14);
    }

    #[test]
    fn cancellation_is_rotation_invariant() {
        let m = Matrix2::new(0.5, 0.2, 0.2, 1.5);
        let r = *Rotation2::new(0.9).matrix();
        let form = QuadraticForm::new(DMatrix::from_row_slice(2, 2, m.as_slice()), 1.0).unwrap();
        let rm = r * m * r.transpose();
        let rotated = QuadraticForm::new(DMatrix::from_iterator(2, 2, rm.iter().copied()), 1.0).unwrap();
        let (o, d) = (Vec2::new(0.3, -0.2), Vec2::new(0.6, 0.8));
        let a = pair_cancellation(&form, &o, &d).unwrap();
        let b = pair_cancellation(&rotated, &(r * o), &(r * d)).unwrap();
        assert!((a.force_x - b.force_x).abs() < 1e-12 && (a.residual - b.residual).abs() < 1e-12);
    }

    #[test]
    fn superellipse_control_fails_to_cancel() {
        let f = |p: &Vec2| p.x.powi(4) + p.y.powi(4) - 1.0;
        let normal = |p: &Vec2| Vec2::new(p.x.powi(3), p.y.powi(3));
        let worst = (0..12)
            .map(|k| {
                let d = Vec2::new((0.5 * k as f64).cos(), (0.5 * k as f64).sin());
                implicit_pair_cancellation(f, normal, &Vec2::new(0.3, 0.1), &d).unwrap().residual.abs()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-2, "{worst}");
        // the same code on an ellipse reproduces the closed form
        let form = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
        let g = |p: &Vec2| p.dot(&form.apply2(p)) - 1.0;
        let q = implicit_pair_cancellation(g, |p: &Vec2| form.apply2(p), &Vec2::new(0.3, 0.1), &Vec2::new(1.0, 0.4)).unwrap();
        assert!(q.residual.abs() < 1e-12);
        let s = net_force(&superellipse(4.0, 256), &DensityModel::Uniform, &Vec2::new(0.3, 0.1), 1024).unwrap();
        assert!(s.magnitude() > 1e-3);
    }
}
