//! Billiards inside convex plane curves, the Joachimsthal integral, and the
//! least-squares search for a normal field `N` with
//! `(N(x) + N(y))·(y − x) = 0` on every chord.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conics::QuadraticForm;
use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::geom::{angle_between2, bracket2, rot90, Vec2};
use crate::roots::bracketed_root;

/// `|u·n̂|` below this is a grazing ray.
pub const GRAZING_TOL: f64 = 1e-9;

/// Foot point parameter and inward unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilliardState {
    pub t: f64,
    pub u: Vec2,
}

impl BilliardState {
    /// Validates that `u` is a unit vector pointing into the table.
    pub fn new(curve: &SampledCurve, t: f64, u: Vec2) -> Result<Self> {
        if (u.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("direction has norm {}", u.norm())));
        }
        let n = inward_normal(curve, t);
        let c = u.dot(&n);
        if c.abs() < GRAZING_TOL {
            return Err(Error::Tangency { cosine: c.abs() });
        }
        if c < 0.0 {
            return Err(Error::Precondition("direction points out of the table".into()));
        }
        Ok(BilliardState { t: curve.wrap(t), u })
    }

    /// Direction making angle `angle ∈ (0, π)` with the positive tangent,
    /// turned toward the interior.
    pub fn from_angle(curve: &SampledCurve, t: f64, angle: f64) -> Result<Self> {
        let j = curve.jet2(t, 1);
        let tan = j[1].normalize();
        let u = tan * angle.cos() + rot90(&tan) * angle.sin();
        Self::new(curve, t, u.normalize())
    }

    pub fn foot(&self, curve: &SampledCurve) -> Vec2 {
        curve.point2(self.t)
    }
}

/// Unit normal pointing into a counterclockwise curve.
pub fn inward_normal(curve: &SampledCurve, t: f64) -> Vec2 {
    rot90(&curve.jet2(t, 1)[1].normalize())
}

/// Parameter of the second intersection of the ray from `γ(t)` along `u`.
///
/// The signed offset `g(τ) = [u, γ(τ) − γ(t)]` is negative just after `t`
/// and positive just before `t + T`; the first sign change on the grid in
/// between is refined by a bracketed secant/bisection solve. A neighborhood
/// of `t` sized from the local curvature and the incidence angle is skipped
/// so the trivial root at `t` is never returned.
pub fn next_intersection(curve: &SampledCurve, state: &BilliardState) -> Result<f64> {
    let t = state.t;
    let u = state.u;
    let j = curve.jet2(t, 2);
    let (p, d1, d2) = (j[0], j[1], j[2]);
    let speed = d1.norm();
    let n = rot90(&(d1 / speed));
    let cosine = u.dot(&n);
    if cosine.abs() < GRAZING_TOL {
        return Err(Error::Tangency { cosine: cosine.abs() });
    }
    if cosine < 0.0 {
        return Err(Error::Precondition("direction points out of the table".into()));
    }
    let period = curve.period();
    let h = curve.spacing();
    let g = |tau: f64| bracket2(&u, &(curve.point2(tau) - p));
    let kappa = bracket2(&d1, &d2) / speed.powi(3);
    let chord_param = if kappa > 0.0 { 2.0 * cosine / (kappa * speed) } else { h };
    let mut delta = (0.25 * chord_param).min(h);
    let mut bracket_ok = false;
    for _ in 0..60 {
        if g(t + delta) < 0.0 && g(t + period - delta) > 0.0 {
            bracket_ok = true;
            break;
        }
        delta *= 0.5;
    }
    if !bracket_ok {
        return Err(Error::NoBracket("ray offset has no sign change near the foot point".into()));
    }
    // scan: endpoints plus the stored grid samples strictly inside
    let lo = t + delta;
    let hi = t + period - delta;
    let first = (lo / h).floor() as i64 + 1;
    let mut prev = (lo, g(lo));
    let mut k = first;
    loop {
        let tau = k as f64 * h;
        let (tau, val) = if tau >= hi {
            (hi, g(hi))
        } else {
            let idx = k.rem_euclid(curve.len() as i64) as usize;
            (tau, bracket2(&u, &(curve.sample2(idx) - p)))
        };
        if val >= 0.0 {
            let root = if val == 0.0 { tau } else { bracketed_root(g, prev.0, tau, 0.0)? };
            return Ok(curve.wrap(root));
        }
        if tau >= hi {
            return Err(Error::NoBracket("no second intersection found".into()));
        }
        prev = (tau, val);
        k += 1;
    }
}

/// Mirror `u_in` in the tangent line at `t`.
pub fn reflect(curve: &SampledCurve, t: f64, u_in: &Vec2) -> Result<Vec2> {
    let n = inward_normal(curve, t);
    let c = u_in.dot(&n);
    if c.abs() < GRAZING_TOL * u_in.norm() {
        return Err(Error::Tangency { cosine: c.abs() });
    }
    Ok(u_in - n * (2.0 * c))
}

/// One application of the billiard map.
pub fn billiard_step(curve: &SampledCurve, state: &BilliardState) -> Result<BilliardState> {
    let t_next = next_intersection(curve, state)?;
    let v = reflect(curve, t_next, &state.u)?;
    Ok(BilliardState { t: t_next, u: v })
}

/// `Ax·u` at the foot point.
pub fn joachimsthal(form: &QuadraticForm, curve: &SampledCurve, state: &BilliardState) -> f64 {
    form.apply2(&state.foot(curve)).dot(&state.u)
}

#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub states: Vec<BilliardState>,
    /// `Ax_k·u_k` per state, when a form was supplied.
    pub integral_values: Vec<f64>,
    /// Set when iteration stopped early; `states` holds the orbit so far.
    pub aborted: Option<Error>,
}

/// Iterates the billiard map `steps` times from `start`.
pub fn orbit(
    curve: &SampledCurve,
    start: BilliardState,
    steps: usize,
    form: Option<&QuadraticForm>,
) -> Result<OrbitRecord> {
    if steps == 0 {
        return Err(Error::Precondition("orbit needs at least one step".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut integral_values = Vec::new();
    states.push(start);
    let mut aborted = None;
    let mut cur = start;
    for _ in 0..steps {
        match billiard_step(curve, &cur) {
            Ok(next) => {
                states.push(next);
                cur = next;
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    if let Some(a) = form {
        integral_values = states.iter().map(|s| joachimsthal(a, curve, s)).collect();
    }
    Ok(OrbitRecord { states, integral_values, aborted })
}

/// `max_k |J_k − J_0|`.
pub fn integral_drift(record: &OrbitRecord) -> Result<f64> {
    let first = *record
        .integral_values
        .first()
        .ok_or_else(|| Error::Empty("orbit record carries no integral values".into()))?;
    Ok(record.integral_values.iter().map(|j| (j - first).abs()).fold(0.0, f64::max))
}

/// `(N_x + N_y)·(y − x)`.
pub fn pair_residual(n_x: &Vec2, n_y: &Vec2, x: &Vec2, y: &Vec2) -> f64 {
    (n_x + n_y).dot(&(y - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// The sampled profile has unit Euclidean norm and positive sum.
    UnitVector,
}

/// Scalar profile `f` with `N(t) = f(t)·J⁻¹γ′(t)`, the clockwise quarter
/// turn of `f γ′`, which points outward on a counterclockwise curve.
#[derive(Debug, Clone)]
pub struct NormalFieldCandidate {
    pub params: Vec<f64>,
    pub f: Vec<f64>,
    pub normalization: Normalization,
}

impl NormalFieldCandidate {
    pub fn normal_at(&self, curve: &SampledCurve, i: usize) -> Vec2 {
        let d1 = curve.jet2(self.params[i], 1)[1];
        -rot90(&(d1 * self.f[i]))
    }

    /// No sign change on the samples.
    pub fn is_nonvanishing(&self) -> bool {
        self.f.iter().all(|v| *v > 0.0) || self.f.iter().all(|v| *v < 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct NormalFieldFit {
    pub candidate: NormalFieldCandidate,
    /// Smallest over largest singular value of the chord system.
    pub residual: f64,
    /// The profile keeps one sign; otherwise the field vanishes somewhere.
    pub admissible: bool,
}

/// Parameter offsets (in samples) used for every base point.
pub fn chord_separations(n: usize) -> [usize; 8] {
    let s = |num: usize, den: usize| ((n * num) / den).max(1);
    [s(1, 64), s(1, 32), s(1, 16), s(1, 8), s(3, 16), s(1, 4), s(3, 8), s(1, 2)]
}

/// Homogeneous least squares for `f` over sampled chords.
///
/// Each chord `(tᵢ, tⱼ)` contributes `[fᵢγ′ᵢ + fⱼγ′ⱼ, γⱼ − γᵢ] = 0`. Rows come
/// from the eight offsets of [`chord_separations`] at every sample plus
/// `pair_budget` random pairs.
pub fn fit_normal_field(curve: &SampledCurve, pair_budget: usize, seed: u64) -> Result<NormalFieldFit> {
    curve.check_convex_ccw(false)?;
    let n = curve.len();
    if n < 32 {
        return Err(Error::Precondition(format!("need at least 32 samples, got {n}")));
    }
    let params = curve.params();
    let pts: Vec<Vec2> = (0..n).map(|j| curve.sample2(j)).collect();
    let tangents: Vec<Vec2> = params.iter().map(|&t| curve.jet2(t, 1)[1]).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(8 * n + pair_budget);
    for sep in chord_separations(n) {
        for i in 0..n {
            pairs.push((i, (i + sep) % n));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pairs.len() < 8 * n + pair_budget {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            pairs.push((i, j));
        }
    }
    let rows = chord_rows(&pairs, n, |i, j| {
        let d = pts[j] - pts[i];
        (bracket2(&tangents[i], &d), bracket2(&tangents[j], &d))
    });
    let (f, residual) = smallest_singular_direction(rows)?;
    let admissible = f.iter().all(|v| *v > 0.0);
    Ok(NormalFieldFit {
        candidate: NormalFieldCandidate { params, f, normalization: Normalization::UnitVector },
        residual,
        admissible,
    })
}

pub(crate) fn chord_rows(
    pairs: &[(usize, usize)],
    n: usize,
    coeffs: impl Fn(usize, usize) -> (f64, f64),
) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(pairs.len().max(n), n);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let (ci, cj) = coeffs(i, j);
        m[(r, i)] += ci;
        m[(r, j)] += cj;
    }
    m
}

/// Right singular vector of the smallest singular value, normalized to unit
/// length with positive sum, and `σ_min / σ_max`.
pub(crate) fn smallest_singular_direction(m: DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    let n = m.ncols();
    // reduce to a square triangular factor before the SVD
    let r = m.qr().r();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Precondition("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let (imin, smin) = sv.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| {
        if *s < acc.1 { (i, *s) } else { acc }
    });
    let smax = sv.max();
    if smax == 0.0 {
        return Err(Error::Precondition("chord system is identically zero".into()));
    }
    let mut f: DVector<f64> = v_t.row(imin).transpose();
    if f.sum() < 0.0 {
        f = -f;
    }
    debug_assert_eq!(f.len(), n);
    Ok((f.iter().copied().collect(), smin / smax))
}

/// Worst angle between the fitted normals and the reference field `reference`
/// at the sample points, and the relative spread of `|N| / |reference|`.
pub fn field_alignment(
    curve: &SampledCurve,
    fit: &NormalFieldCandidate,
    reference: impl Fn(&Vec2) -> Vec2,
) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut ratios = Vec::with_capacity(fit.f.len());
    for i in 0..fit.f.len() {
        let nf = fit.normal_at(curve, i);
        let nr = reference(&curve.sample2(i));
        worst = worst.max(angle_between2(&nf, &nr));
        ratios.push(nf.norm() / nr.norm());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean;
    (worst, spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{circle, ellipse, superellipse};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn circle_intersections() {
        let c = circle(1.0, 64);
        let s = BilliardState::new(&c, 0.0, Vec2::new(-1.0, 0.0)).unwrap();
        let t = next_intersection(&c, &s).unwrap();
        assert!((c.point2(t) - Vec2::new(-1.0, 0.0)).norm() < 1e-13);
        let s = BilliardState::new(&c, 0.0, Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)).unwrap();
        let t = next_intersection(&c, &s).unwrap();
        assert!((c.point2(t) - Vec2::new(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn ellipse_intersection_against_quadratic() {
        let e = ellipse(2.0, 1.0, 128);
        let u = Vec2::new(-2.0, 1.0).normalize();
        let s = BilliardState::new(&e, 0.0, u).unwrap();
        let t = next_intersection(&e, &s).unwrap();
        // ray (2,0) + r u in x²/4 + y² = 1: r (u_x²/4 + u_y²) + u_x = 0
        let r = -u.x / (u.x * u.x / 4.0 + u.y * u.y);
        let expect = Vec2::new(2.0, 0.0) + u * r;
        assert!((expect - Vec2::new(0.0, 1.0)).norm() < 1e-14);
        assert!((e.point2(t) - expect).norm() < 1e-12);
        assert!((t - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_outward_and_grazing() {
        let c = circle(1.0, 64);
        assert!(BilliardState::new(&c, 0.0, Vec2::new(1.0, 0.0)).is_err());
        let bad = BilliardState { t: 0.0, u: Vec2::new(1.0, 0.0) };
        assert!(matches!(next_intersection(&c, &bad), Err(Error::Precondition(_))));
        let graze = BilliardState { t: 0.0, u: Vec2::new(0.0, 1.0) };
        assert!(matches!(next_intersection(&c, &graze), Err(Error::Tangency { .. })));
        assert!(matches!(reflect(&c, 0.0, &Vec2::new(0.0, 1.0)), Err(Error::Tangency { .. })));
    }

    #[test]
    fn reflection_examples() {
        let c = circle(1.0, 64);
        let v = reflect(&c, PI, &Vec2::new(-1.0, 0.0)).unwrap();
        assert!((v - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        let v = reflect(&c, PI / 2.0, &Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)).unwrap();
        assert!((v - Vec2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2)).norm() < 1e-15);
        // at the vertex (2,0) of the ellipse the normal is (1,0)
        let e = ellipse(2.0, 1.0, 64);
        let a = 0.4f64;
        let v = reflect(&e, 0.0, &Vec2::new(a.cos(), a.sin())).unwrap();
        assert!((v - Vec2::new(-a.cos(), a.sin())).norm() < 1e-14);
    }

    #[test]
    fn circle_orbit_integral() {
        let c = circle(1.0, 64);
        let id = QuadraticForm::diagonal(&[1.0, 1.0], 1.0);
        for &phi in &[0.3, 1.0, 2.2] {
            let s = BilliardState::from_angle(&c, 0.7, phi).unwrap();
            let rec = orbit(&c, s, 100, Some(&id)).unwrap();
            assert!(rec.aborted.is_none());
            for j in &rec.integral_values {
                assert!((j + phi.sin()).abs() < 1e-12, "{j} vs {}", -phi.sin());
            }
        }
    }

    #[test]
    fn superellipse_integral_drifts() {
        let c = superellipse(4.0, 512);
        let id = QuadraticForm::diagonal(&[1.0, 1.0], 1.0);
        let s = BilliardState::from_angle(&c, 0.3, 1.1).unwrap();
        let rec = orbit(&c, s, 1000, Some(&id)).unwrap();
        assert!(integral_drift(&rec).unwrap() > 1e-2);
    }

    #[test]
    fn drift_edge_cases() {
        let rec = OrbitRecord { states: vec![], integral_values: vec![0.4], aborted: None };
        assert_eq!(integral_drift(&rec).unwrap(), 0.0);
        let rec = OrbitRecord { states: vec![], integral_values: vec![], aborted: None };
        assert!(integral_drift(&rec).is_err());
    }

    #[test]
    fn pair_residual_examples() {
        let a = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
        let x = Vec2::new(2.0 * 0.3f64.cos(), 0.3f64.sin());
        let y = Vec2::new(2.0 * 2.6f64.cos(), 2.6f64.sin());
        assert!(pair_residual(&a.apply2(&x), &a.apply2(&y), &x, &y).abs() < 1e-15);
        assert_eq!(pair_residual(&x, &y, &x, &x), 0.0);
        let (p, q) = (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        assert_eq!(pair_residual(&p, &q, &p, &q), 0.0);
    }

    #[test]
    fn circle_field_is_constant() {
        let c = circle(1.0, 64);
        let fit = fit_normal_field(&c, 200, 3).unwrap();
        assert!(fit.admissible);
        let f = &fit.candidate.f;
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert!(f.iter().all(|v| (v - mean).abs() < 1e-10 * mean));
        assert!(fit.residual < 1e-12);
    }
}
