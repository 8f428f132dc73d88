//! Billiards and conics on the unit sphere and the hyperbolic plane
//! (upper sheet of `x² + y² − z² = −1`).
//!
//! A conic is the intersection of the surface with a quadratic cone
//! `xᵀAx = 0`. Both geometries share one implementation: the sphere pairs
//! vectors with the Euclidean dot product and the hyperboloid with the
//! Lorentzian form `diag(1, 1, −1)`.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::billiard::{chord_rows, chord_separations, smallest_singular_direction};
use crate::conics::QuadraticForm;
use crate::curve::{ParamMap, SampledCurve};
use crate::error::{Error, Result};
use crate::geom::{angle_between3, bracket3, MetricSignature, Vec3};
use crate::spectral::TrigSeries;
use crate::taylor;

/// Tolerance on `⟨x, x⟩ = ±1` for points handed in by callers.
pub const ON_SURFACE_TOL: f64 = 1e-8;
/// Rejected chords have `|J| / (|Ax| |u|)` below this.
pub const GRAZING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Sphere,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpaceForm {
    pub kind: Geometry,
    pub signature: MetricSignature,
}

impl SpaceForm {
    pub const SPHERE: SpaceForm = SpaceForm { kind: Geometry::Sphere, signature: MetricSignature::Euclidean };
    pub const HYPERBOLIC: SpaceForm =
        SpaceForm { kind: Geometry::Hyperbolic, signature: MetricSignature::Lorentzian };

    pub fn new(kind: Geometry) -> Self {
        match kind {
            Geometry::Sphere => Self::SPHERE,
            Geometry::Hyperbolic => Self::HYPERBOLIC,
        }
    }

    pub fn pair(&self, a: &Vec3, b: &Vec3) -> f64 {
        self.signature.pair3(a, b)
    }

    /// `⟨x, x⟩` on the surface: `1` or `−1`.
    fn level(&self) -> f64 {
        match self.kind {
            Geometry::Sphere => 1.0,
            Geometry::Hyperbolic => -1.0,
        }
    }

    /// `G v`, turning a Euclidean gradient into a vector for the pairing.
    fn raise(&self, v: &Vec3) -> Vec3 {
        match self.kind {
            Geometry::Sphere => *v,
            Geometry::Hyperbolic => Vec3::new(v.x, v.y, -v.z),
        }
    }

    pub fn check_point(&self, x: &Vec3) -> Result<()> {
        let residual = (self.pair(x, x) - self.level()).abs();
        if residual > ON_SURFACE_TOL || (self.kind == Geometry::Hyperbolic && x.z <= 0.0) {
            return Err(Error::OffSurface { residual });
        }
        Ok(())
    }

    /// Nearest-by-scaling point on the surface.
    pub fn normalize_point(&self, x: &Vec3) -> Vec3 {
        x / (self.pair(x, x) * self.level()).sqrt()
    }

    /// Unit tangent at `x` along the tangential part of `v`.
    pub fn normalize_tangent(&self, x: &Vec3, v: &Vec3) -> Vec3 {
        let w = v - x * (self.pair(v, x) / self.level());
        w / self.pair(&w, &w).sqrt()
    }

    /// Point at distance `theta` along the geodesic from `x` with unit
    /// tangent `u`.
    pub fn geodesic(&self, x: &Vec3, u: &Vec3, theta: f64) -> Vec3 {
        match self.kind {
            Geometry::Sphere => x * theta.cos() + u * theta.sin(),
            Geometry::Hyperbolic => x * theta.cosh() + u * theta.sinh(),
        }
    }

    pub fn geodesic_velocity(&self, x: &Vec3, u: &Vec3, theta: f64) -> Vec3 {
        match self.kind {
            Geometry::Sphere => -x * theta.sin() + u * theta.cos(),
            Geometry::Hyperbolic => x * theta.sinh() + u * theta.cosh(),
        }
    }
}

/// Unit tangents of the geodesic segment from `x` to `y`: at `x` pointing
/// to `y`, and at `y` pointing away from `x`.
pub fn geodesic_tangents(x: &Vec3, y: &Vec3, space: SpaceForm) -> Result<(Vec3, Vec3)> {
    space.check_point(x)?;
    space.check_point(y)?;
    let d = space.pair(x, y);
    let (u, v, len2) = match space.kind {
        Geometry::Sphere => (y - x * d, y * d - x, 1.0 - d * d),
        Geometry::Hyperbolic => (y + x * d, -x - y * d, d * d - 1.0),
    };
    if len2 <= 1e-24 {
        return Err(Error::UndefinedGeodesic(format!(
            "points are {} (pairing {d})",
            if d > 0.0 && space.kind == Geometry::Sphere { "equal" } else if space.kind == Geometry::Sphere { "antipodal" } else { "equal" }
        )));
    }
    let len = len2.sqrt();
    Ok((u / len, v / len))
}

/// A conic `xᵀAx = 0` on the sphere or the hyperboloid. The form is stored
/// with one negative eigenvalue; the side containing its eigenvector is the
/// inside, where `xᵀAx < 0`.
#[derive(Debug, Clone)]
pub struct SphericalConic {
    pub form: QuadraticForm,
    pub space: SpaceForm,
    /// Eigenvectors of the positive eigenvalues, then the negative one,
    /// right-handed, columns scaled by `|λ|^{-1/2}`.
    frame: Matrix3<f64>,
}

impl SphericalConic {
    pub fn new(form: &QuadraticForm, space: SpaceForm) -> Result<Self> {
        if form.dim() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: form.dim() });
        }
        let mut a = form.matrix3();
        let eig = SymmetricEigen::new(a);
        let negatives = eig.eigenvalues.iter().filter(|l| **l < 0.0).count();
        let scale = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
        if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * scale) || negatives == 0 || negatives == 3 {
            return Err(Error::Precondition(
                "cone matrix must be nondegenerate with eigenvalues of both signs".into(),
            ));
        }
        let sign = if negatives == 2 { -1.0 } else { 1.0 };
        a *= sign;
        let lam = eig.eigenvalues * sign;
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&i, &j| lam[j].partial_cmp(&lam[i]).unwrap());
        let mut cols: Vec<Vec3> = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned() / lam[i].abs().sqrt())
            .collect();
        // axis on the upper side, then a right-handed frame
        if cols[2].z < 0.0 || (cols[2].z == 0.0 && cols[2].sum() < 0.0) {
            cols[2] = -cols[2];
        }
        if bracket3(&cols[0], &cols[1], &cols[2]) < 0.0 {
            cols[1] = -cols[1];
        }
        let conic = SphericalConic {
            form: QuadraticForm::new(DMatrix::from_iterator(3, 3, a.iter().copied()), 0.0)?,
            space,
            frame: Matrix3::from_columns(&cols),
        };
        if space.kind == Geometry::Hyperbolic {
            let worst = (0..64)
                .map(|i| {
                    let w = conic.cone_direction(i as f64 * std::f64::consts::TAU / 64.0);
                    space.pair(&w, &w) / w.norm_squared()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if worst >= -1e-9 {
                return Err(Error::Precondition(
                    "cone leaves the light cone; its section of the hyperboloid is not closed".into(),
                ));
            }
        }
        Ok(conic)
    }

    /// Cone `x²/a₁² + y²/a₂² − z²/a₃² = 0`.
    pub fn from_axes(axes: [f64; 3], space: SpaceForm) -> Result<Self> {
        let d: Vec<f64> = axes.iter().map(|a| 1.0 / (a * a)).collect();
        Self::new(&QuadraticForm::diagonal(&[d[0], d[1], -d[2]], 0.0), space)
    }

    fn cone_direction(&self, t: f64) -> Vec3 {
        self.frame * Vec3::new(t.cos(), t.sin(), 1.0)
    }

    /// Point of the conic at angle `t` about the cone axis.
    pub fn point(&self, t: f64) -> Vec3 {
        self.space.normalize_point(&self.cone_direction(t))
    }

    pub fn sample(&self, n: usize) -> SampledCurve {
        SampledCurve::from_fn3(std::f64::consts::TAU, n, |t| self.point(t))
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        x.dot(&self.form.apply3(x))
    }

    /// Outward normal at `x` in the tangent plane, unit for the pairing.
    pub fn normal(&self, x: &Vec3) -> Vec3 {
        let n = self.space.raise(&self.form.apply3(x));
        n / self.space.pair(&n, &n).sqrt()
    }

    /// Pulls a nearby surface point back onto the conic along the surface
    /// normal. Long hyperbolic chords magnify any offset, so each landing
    /// point is corrected before the next chord starts.
    pub fn project(&self, x: &Vec3) -> Vec3 {
        let mut y = self.space.normalize_point(x);
        for _ in 0..3 {
            let g = self.space.raise(&self.form.apply3(&y));
            let f = self.value(&y);
            if f == 0.0 {
                break;
            }
            y = self.space.normalize_point(&(y - g * (0.5 * f / self.space.pair(&g, &g))));
        }
        y
    }

    fn check_on_conic(&self, x: &Vec3) -> Result<()> {
        self.space.check_point(x)?;
        let residual = self.value(x).abs() / self.form.apply3(x).norm();
        if residual > ON_SURFACE_TOL {
            return Err(Error::OffSurface { residual });
        }
        Ok(())
    }

    /// State at the conic point with angle `t`, leaving at `angle` from the
    /// curve's tangent toward the inside.
    pub fn start(&self, t: f64, angle: f64) -> Result<SurfaceState> {
        let x = self.point(t);
        let h = 1e-4;
        // central difference only fixes the direction; it is re-projected
        let dx = self.point(t + h) - self.point(t - h);
        let tangent = self.space.normalize_tangent(&x, &dx);
        let inward = -self.normal(&x);
        let u = tangent * angle.cos() + inward * angle.sin();
        Ok(SurfaceState { x, u: self.space.normalize_tangent(&x, &u) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceState {
    pub x: Vec3,
    pub u: Vec3,
}

/// `Ax·u`, conserved by billiards in the conic.
pub fn spherical_joachimsthal(conic: &SphericalConic, x: &Vec3, u: &Vec3) -> Result<f64> {
    conic.check_on_conic(x)?;
    let tangency = conic.space.pair(x, u);
    if tangency.abs() > ON_SURFACE_TOL {
        return Err(Error::Precondition(format!("direction is not tangent at x (pairing {tangency:e})")));
    }
    Ok(conic.form.apply3(x).dot(u))
}

/// One bounce: the next conic point along the geodesic, the incoming
/// tangent there, and the state after reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceBounce {
    pub theta: f64,
    pub incoming: Vec3,
    pub next: SurfaceState,
}

/// Substituting the geodesic into `pᵀAp = 0` and using `xᵀAx = 0` leaves
/// `tan θ = −2J/Q` on the sphere and `tanh θ = −2J/Q` on the hyperboloid,
/// with `J = xᵀAu` and `Q = uᵀAu`.
pub fn spherical_billiard_step(conic: &SphericalConic, state: &SurfaceState) -> Result<SurfaceBounce> {
    let space = conic.space;
    let (x, u) = (state.x, state.u);
    let ax = conic.form.apply3(&x);
    let j = ax.dot(&u);
    let q = u.dot(&conic.form.apply3(&u));
    let cosine = j / (ax.norm() * u.norm());
    if cosine > -GRAZING_TOL {
        return Err(Error::Tangency { cosine });
    }
    let theta = match space.kind {
        Geometry::Sphere => (-2.0 * j).atan2(q),
        Geometry::Hyperbolic => {
            let r = -2.0 * j / q;
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::UndefinedGeodesic(format!("geodesic leaves the conic's sheet (tanh θ = {r})")));
            }
            r.atanh()
        }
    };
    let y = conic.project(&space.geodesic(&x, &u, theta));
    let incoming = space.normalize_tangent(&y, &space.geodesic_velocity(&x, &u, theta));
    let n = conic.normal(&y);
    let reflected = incoming - n * (2.0 * space.pair(&incoming, &n));
    Ok(SurfaceBounce {
        theta,
        incoming,
        next: SurfaceState { x: y, u: space.normalize_tangent(&y, &reflected) },
    })
}

#[derive(Debug, Clone)]
pub struct SurfaceOrbit {
    pub states: Vec<SurfaceState>,
    /// `Ax·u` at every state.
    pub invariants: Vec<f64>,
    pub aborted: Option<Error>,
}

impl SurfaceOrbit {
    /// `max |J − J₀| / |J₀|`.
    pub fn drift(&self) -> f64 {
        let j0 = self.invariants[0];
        self.invariants.iter().map(|j| (j - j0).abs()).fold(0.0, f64::max) / j0.abs()
    }
}

pub fn surface_orbit(conic: &SphericalConic, start: SurfaceState, steps: usize) -> SurfaceOrbit {
    let inv = |s: &SurfaceState| conic.form.apply3(&s.x).dot(&s.u);
    let mut states = vec![start];
    let mut invariants = vec![inv(&start)];
    let mut aborted = None;
    let mut cur = start;
    for _ in 0..steps {
        match spherical_billiard_step(conic, &cur) {
            Ok(b) => {
                cur = b.next;
                states.push(cur);
                invariants.push(inv(&cur));
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    SurfaceOrbit { states, invariants, aborted }
}

/// Curve on the unit sphere in a parameter with `[γ, γ′, γ″] = 1`.
#[derive(Debug, Clone)]
pub struct EquiaffineCurve3 {
    /// Resampled on a uniform grid of the new parameter.
    pub curve: SampledCurve,
    base: SampledCurve,
    pub map: ParamMap,
    pub bracket_defect: f64,
}

impl EquiaffineCurve3 {
    pub fn period(&self) -> f64 {
        self.curve.period()
    }

    /// Derivatives in the equiaffine parameter, composed from the input
    /// curve's jet rather than differentiating the resampled one.
    pub fn jet(&self, tau: f64, order: usize) -> Vec<Vec3> {
        let raw = self.base.derivs(self.map.inverse(tau), order + 1);
        taylor::equiaffine_jet(&raw, order).iter().map(|d| Vec3::new(d[0], d[1], d[2])).collect()
    }
}

/// `[γ, γ′, γ″] / |γ′|³` at each sample.
fn normalized_brackets(curve: &SampledCurve) -> Vec<f64> {
    curve
        .params()
        .iter()
        .map(|&t| {
            let j = curve.jet3(t, 2);
            bracket3(&j[0], &j[1], &j[2]) / j[1].norm().powi(3)
        })
        .collect()
}

/// Closed curve on the surface, inside an open half-space, turning
/// counterclockwise about its center with geodesic curvature of one sign.
fn check_oval(curve: &SampledCurve, space: SpaceForm) -> Result<Vec<f64>> {
    if curve.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: curve.dim() });
    }
    if !curve.is_closed() {
        return Err(Error::NotClosed);
    }
    let pts: Vec<Vec3> = (0..curve.len()).map(|j| curve.sample3(j)).collect();
    for p in &pts {
        space.check_point(p)?;
    }
    let center: Vec3 = pts.iter().sum();
    if center.norm() < 1e-12 || pts.iter().any(|p| p.dot(&center) <= 0.0) {
        return Err(Error::NotConvex("curve does not fit in an open hemisphere".into()));
    }
    let br = normalized_brackets(curve);
    let min = br.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 1e-8 {
        return Err(Error::NotConvex(format!(
            "[γ, γ′, γ″] vanishes or changes sign (min normalized value {min:e})"
        )));
    }
    Ok(br)
}

/// Reparameterizes by `dt = [γ, γ_σ, γ_σσ]^{1/3} dσ`.
pub fn equiaffine_frame3(curve: &SampledCurve) -> Result<EquiaffineCurve3> {
    equiaffine_frame3_on(curve, SpaceForm::SPHERE)
}

/// As [`equiaffine_frame3`] for a curve on either surface. The bracket only
/// sees the cone over the curve, so the same construction serves both.
pub fn equiaffine_frame3_on(curve: &SampledCurve, space: SpaceForm) -> Result<EquiaffineCurve3> {
    check_oval(curve, space)?;
    let speed: Vec<f64> = curve
        .params()
        .iter()
        .map(|&t| {
            let j = curve.jet3(t, 2);
            bracket3(&j[0], &j[1], &j[2]).cbrt()
        })
        .collect();
    let (resampled, map) = curve.reparameterize_with_map(&speed, curve.len())?;
    let mut ec = EquiaffineCurve3 { curve: resampled, base: curve.clone(), map, bracket_defect: 0.0 };
    ec.bracket_defect = ec
        .curve
        .params()
        .iter()
        .map(|&t| {
            let j = ec.jet(t, 2);
            (bracket3(&j[0], &j[1], &j[2]) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    if ec.bracket_defect > 1e-8 {
        return Err(Error::Precondition(format!(
            "equiaffine parameterization unresolved at this sample count (defect {:e})",
            ec.bracket_defect
        )));
    }
    Ok(ec)
}

/// `γ‴ = aγ + bγ′` on the equiaffine grid.
#[derive(Debug, Clone, Serialize)]
pub struct CubicCoeffs {
    pub period: f64,
    pub params: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Largest `|c|` in `γ‴ = aγ + bγ′ + cγ″`.
    pub c_max: f64,
    /// `max |γ‴ − aγ − bγ′|`.
    pub reconstruction: f64,
}

pub fn cubic_coeffs(ec: &EquiaffineCurve3) -> Result<CubicCoeffs> {
    let params = ec.curve.params();
    let mut a = Vec::with_capacity(params.len());
    let mut b = Vec::with_capacity(params.len());
    let mut c_max = 0.0f64;
    let mut reconstruction = 0.0f64;
    for &t in &params {
        let j = ec.jet(t, 3);
        let det = bracket3(&j[0], &j[1], &j[2]);
        let ai = bracket3(&j[3], &j[1], &j[2]) / det;
        let bi = bracket3(&j[0], &j[3], &j[2]) / det;
        let ci = bracket3(&j[0], &j[1], &j[3]) / det;
        if ci.abs() > 1e-6 {
            return Err(Error::FrameInconsistent { coefficient: ci });
        }
        c_max = c_max.max(ci.abs());
        reconstruction = reconstruction.max((j[3] - j[0] * ai - j[1] * bi).norm());
        a.push(ai);
        b.push(bi);
    }
    Ok(CubicCoeffs { period: ec.period(), params, a, b, c_max, reconstruction })
}

/// `2a − b′` per sample; it vanishes on spherical conics.
pub fn conic_criterion_residual(coeffs: &CubicCoeffs) -> Vec<f64> {
    let b = TrigSeries::from_samples(&coeffs.b, coeffs.period);
    coeffs.params.iter().zip(&coeffs.a).map(|(&t, a)| 2.0 * a - b.eval_deriv(t, 1)).collect()
}

/// Normal field `N = f γ′ × γ` fitted from chords on the sphere.
#[derive(Debug, Clone)]
pub struct SphericalNormalFit {
    pub params: Vec<f64>,
    pub f: Vec<f64>,
    pub residual: f64,
    pub admissible: bool,
}

impl SphericalNormalFit {
    pub fn normal_at(&self, curve: &SampledCurve, i: usize) -> Vec3 {
        let j = curve.jet3(self.params[i], 1);
        j[1].cross(&j[0]) * self.f[i]
    }

    /// Worst angle to `reference` at the samples.
    pub fn max_angle_to(&self, curve: &SampledCurve, reference: impl Fn(&Vec3) -> Vec3) -> f64 {
        (0..self.f.len())
            .map(|i| angle_between3(&self.normal_at(curve, i), &reference(&curve.sample3(i))))
            .fold(0.0, f64::max)
    }
}

/// Each chord `(tᵢ, tⱼ)` contributes `fᵢ[γᵢ, γ′ᵢ, γⱼ] − fⱼ[γⱼ, γ′ⱼ, γᵢ] = 0`.
pub fn fit_spherical_normal_field(curve: &SampledCurve, pair_budget: usize, seed: u64) -> Result<SphericalNormalFit> {
    check_oval(curve, SpaceForm::SPHERE)?;
    let n = curve.len();
    if n < 32 {
        return Err(Error::Precondition(format!("need at least 32 samples, got {n}")));
    }
    let params = curve.params();
    let jets: Vec<Vec<Vec3>> = params.iter().map(|&t| curve.jet3(t, 1)).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(8 * n + pair_budget);
    for sep in chord_separations(n) {
        pairs.extend((0..n).map(|i| (i, (i + sep) % n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pairs.len() < 8 * n + pair_budget {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            pairs.push((i, j));
        }
    }
    let rows = chord_rows(&pairs, n, |i, j| {
        (
            bracket3(&jets[i][0], &jets[i][1], &jets[j][0]),
            -bracket3(&jets[j][0], &jets[j][1], &jets[i][0]),
        )
    });
    let (f, residual) = smallest_singular_direction(rows)?;
    let admissible = f.iter().all(|v| *v > 0.0);
    Ok(SphericalNormalFit { params, f, residual, admissible })
}
