//! Quadratic forms, conic fitting and classification, and plane sections of
//! quadrics.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Relative residual allowed for a point to count as lying on a quadric.
pub const ON_SURFACE_TOL: f64 = 1e-8;
/// `|det|` below this times `‖form‖²` counts as zero when classifying.
pub const DISCRIMINANT_TOL: f64 = 1e-10;

/// The quadric `Ax·x = level` (`level = 1`) or the cone `Ax·x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    matrix: DMatrix<f64>,
    level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadricSpec {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    1.0
}

impl QuadraticForm {
    /// Symmetrizes `matrix` as `(M + Mᵀ)/2`.
    pub fn new(matrix: DMatrix<f64>, level: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Spec(format!(
                "quadratic form needs a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || !level.is_finite() {
            return Err(Error::Spec("non-finite quadratic form".into()));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(QuadraticForm { matrix: sym, level })
    }

    pub fn diagonal(diag: &[f64], level: f64) -> Self {
        QuadraticForm {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            level,
        }
    }

    pub fn from_spec(spec: &QuadricSpec) -> Result<Self> {
        let n = spec.matrix.len();
        if spec.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Spec("matrix rows must all have the same length as the row count".into()));
        }
        let flat: Vec<f64> = spec.matrix.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat), spec.level)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: QuadricSpec = serde_json::from_str(text).map_err(|e| {
            Error::Spec(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> QuadricSpec {
        QuadricSpec {
            matrix: self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            level: self.level,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn apply2(&self, x: &Vec2) -> Vec2 {
        let m = &self.matrix;
        Vec2::new(m[(0, 0)] * x.x + m[(0, 1)] * x.y, m[(1, 0)] * x.x + m[(1, 1)] * x.y)
    }

    pub fn apply3(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.matrix3() * x
    }

    pub fn matrix3(&self) -> Matrix3<f64> {
        assert_eq!(self.dim(), 3);
        Matrix3::from_fn(|i, j| self.matrix[(i, j)])
    }

    /// `x·Ay`.
    pub fn bilinear(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * y))
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.bilinear(x, x)
    }

    /// `Ax·x − level`, relative to `‖A‖·|x|²` (or 1 for small points).
    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        let scale = self.matrix.norm() * x.norm_squared().max(1.0);
        (self.value(x) - self.level).abs() / scale.max(f64::MIN_POSITIVE)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix.clone().cholesky().is_some()
    }

    /// Same quadric with the form divided by its Frobenius norm.
    fn normalized_matrix(&self) -> DMatrix<f64> {
        let n = self.matrix.norm();
        if n > 0.0 { &self.matrix / n } else { self.matrix.clone() }
    }
}

/// `Ax`, which is normal to the quadric at `x`.
pub fn conic_normal(form: &QuadraticForm, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: x.len() });
    }
    let residual = form.relative_residual(x);
    if residual > ON_SURFACE_TOL {
        return Err(Error::OffSurface { residual });
    }
    Ok(form.apply(x))
}

/// Projective conic through five points.
///
/// The coefficients `(a, b, c, d, e, f)` of `ax² + bxy + cy² + dx + ey + f`
/// span the null space of the 5×6 incidence system; they are returned as a
/// unit-norm symmetric 3×3 matrix acting on `(x, y, 1)`.
pub fn fit_conic_5pts(points: &[Vec2; 5]) -> Result<QuadraticForm> {
    let mut m = DMatrix::<f64>::zeros(6, 6);
    for (i, p) in points.iter().enumerate() {
        let row = [p.x * p.x, p.x * p.y, p.y * p.y, p.x, p.y, 1.0];
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let largest = svd.singular_values[order[5]];
    // the padding row guarantees one zero singular value; a second one means
    // the five points do not determine the conic
    let second = svd.singular_values[order[1]];
    if second <= 1e-10 * largest {
        return Err(Error::AmbiguousFit { ratio: second / largest });
    }
    let c = v_t.row(order[0]).transpose();
    let c = &c / c.norm();
    let (a, b, cc, d, e, f) = (c[0], c[1], c[2], c[3], c[4], c[5]);
    let mat = DMatrix::from_row_slice(
        3,
        3,
        &[a, b / 2.0, d / 2.0, b / 2.0, cc, e / 2.0, d / 2.0, e / 2.0, f],
    );
    QuadraticForm::new(mat, 0.0)
}

/// Value of a projective conic at the affine point `p`.
pub fn eval_projective(conic: &QuadraticForm, p: &Vec2) -> f64 {
    conic.value(&DVector::from_vec(vec![p.x, p.y, 1.0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicClass {
    Ellipse,
    Parabola,
    Hyperbola,
    Degenerate,
}

impl fmt::Display for ConicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConicClass::Ellipse => "ellipse",
            ConicClass::Parabola => "parabola",
            ConicClass::Hyperbola => "hyperbola",
            ConicClass::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

/// Determinant of the quadratic part of a projective conic after scaling the
/// form to unit Frobenius norm.
pub fn quadratic_discriminant(conic: &QuadraticForm) -> f64 {
    let m = conic.normalized_matrix();
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Classifies a projective conic given as a 3×3 form on `(x, y, 1)`.
///
/// Imaginary ellipses (no real points) still classify as ellipses; use
/// [`plane_section`]'s emptiness flag to tell them apart.
pub fn classify(conic: &QuadraticForm) -> ConicClass {
    assert_eq!(conic.dim(), 3, "projective conics are 3x3 forms");
    let m = conic.normalized_matrix();
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 || sv.min() < DISCRIMINANT_TOL * max {
        return ConicClass::Degenerate;
    }
    let det2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det2.abs() < DISCRIMINANT_TOL {
        ConicClass::Parabola
    } else if det2 > 0.0 {
        ConicClass::Ellipse
    } else {
        ConicClass::Hyperbola
    }
}

/// An affine plane `origin + s·b₁ + t·b₂` in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFrame {
    origin: DVector<f64>,
    b1: DVector<f64>,
    b2: DVector<f64>,
}

impl PlaneFrame {
    pub fn new(origin: DVector<f64>, b1: DVector<f64>, b2: DVector<f64>) -> Result<Self> {
        let n = origin.len();
        for b in [&b1, &b2] {
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.len() });
            }
        }
        let defect = (b1.norm() - 1.0).abs().max((b2.norm() - 1.0).abs()).max(b1.dot(&b2).abs());
        if defect > 1e-12 {
            return Err(Error::Precondition(format!(
                "plane basis must be orthonormal (defect {defect:e})"
            )));
        }
        Ok(PlaneFrame { origin, b1, b2 })
    }

    /// The plane `n·x = offset` in ℝ³ for a unit normal `n`.
    pub fn from_normal(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let n = normal.try_normalize(1e-300).ok_or_else(|| {
            Error::Precondition("plane normal must be nonzero".into())
        })?;
        let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let b1 = n.cross(&helper).normalize();
        let b2 = n.cross(&b1);
        let to_d = |v: Vector3<f64>| DVector::from_column_slice(v.as_slice());
        Self::new(to_d(n * offset), to_d(b1), to_d(b2))
    }

    pub fn origin(&self) -> &DVector<f64> {
        &self.origin
    }

    pub fn basis(&self) -> (&DVector<f64>, &DVector<f64>) {
        (&self.b1, &self.b2)
    }

    pub fn point(&self, s: f64, t: f64) -> DVector<f64> {
        &self.origin + &self.b1 * s + &self.b2 * t
    }

    /// In-plane projection of a vector.
    pub fn project_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.b1 * v.dot(&self.b1) + &self.b2 * v.dot(&self.b2)
    }

    /// Distance from `x` to the plane.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.origin;
        (&d - self.project_vector(&d)).norm()
    }

    /// Rotates the in-plane basis by `angle`.
    pub fn rotated(&self, angle: f64) -> PlaneFrame {
        let (s, c) = angle.sin_cos();
        PlaneFrame {
            origin: self.origin.clone(),
            b1: &self.b1 * c + &self.b2 * s,
            b2: &self.b2 * c - &self.b1 * s,
        }
    }
}

/// The conic cut from a quadric by a plane.
#[derive(Debug, Clone)]
pub struct PlaneSection {
    /// Projective form in the plane coordinates `(s, t, 1)`.
    pub form: QuadraticForm,
    /// The section has no real points.
    pub empty: bool,
}

/// Substitutes `x = origin + s·b₁ + t·b₂` into `Ax·x = level`.
pub fn plane_section(q: &QuadraticForm, frame: &PlaneFrame) -> Result<PlaneSection> {
    if frame.origin.len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: frame.origin.len() });
    }
    let a = &q.matrix;
    let cols = [&frame.b1, &frame.b2, &frame.origin];
    let mut m = DMatrix::<f64>::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = cols[i].dot(&(a * cols[j]));
        }
    }
    m[(2, 2)] -= q.level;
    let form = QuadraticForm::new(m, 0.0)?;
    let empty = !has_real_points(&form);
    Ok(PlaneSection { form, empty })
}

impl PlaneSection {
    /// `count` points of an elliptic section at equal angles about its
    /// center, in plane coordinates `(s, t)`.
    pub fn ellipse_points(&self, count: usize) -> Result<Vec<Vec2>> {
        let m = self.form.matrix();
        let q = nalgebra::Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let g = Vec2::new(m[(0, 2)], m[(1, 2)]);
        if self.empty || classify(&self.form) != ConicClass::Ellipse {
            return Err(Error::Precondition("section is not a real ellipse".into()));
        }
        let center = -q.try_inverse().ok_or_else(|| Error::Precondition("singular section".into()))? * g;
        let f = m[(2, 2)] + g.dot(&center);
        Ok((0..count)
            .map(|k| {
                let ang = std::f64::consts::TAU * k as f64 / count as f64;
                let d = Vec2::new(ang.cos(), ang.sin());
                center + d * (-f / d.dot(&(q * d))).sqrt()
            })
            .collect())
    }
}

/// Whether the projective conic has an affine real point.
fn has_real_points(conic: &QuadraticForm) -> bool {
    let m = conic.normalized_matrix();
    let q = nalgebra::Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let g = nalgebra::Vector2::new(m[(0, 2)], m[(1, 2)]);
    let f = m[(2, 2)];
    let det2 = q.determinant();
    if det2 > DISCRIMINANT_TOL {
        // definite quadratic part: check the extreme value at the center
        let center = -q.try_inverse().expect("definite") * g;
        let extreme = f + g.dot(&center);
        let definite_sign = q[(0, 0)].signum();
        return extreme * definite_sign <= 0.0;
    }
    if det2.abs() <= DISCRIMINANT_TOL {
        let eig = nalgebra::SymmetricEigen::new(q);
        let (k, other) = if eig.eigenvalues[0].abs() > eig.eigenvalues[1].abs() { (0, 1) } else { (1, 0) };
        let lam = eig.eigenvalues[k];
        if lam.abs() <= DISCRIMINANT_TOL {
            // no quadratic part: a line (or nothing)
            return g.norm() > DISCRIMINANT_TOL || f == 0.0;
        }
        let e = eig.eigenvectors.column(k);
        let flat = eig.eigenvectors.column(other);
        if g.dot(&flat).abs() > DISCRIMINANT_TOL {
            // parabola
            return true;
        }
        let ge = g.dot(&e);
        return ge * ge - lam * f >= 0.0;
    }
    true
}

/// `(ν(x)+ν(y))·(y−x)` with `ν` the in-plane projection of `N`, and
/// `(N(x)+N(y))·(y−x)`. They agree whenever `x` and `y` lie in the plane.
pub fn projected_pair_residual(
    n_x: &DVector<f64>,
    n_y: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    frame: &PlaneFrame,
) -> Result<(f64, f64)> {
    let scale = 1.0 + x.norm().max(y.norm()) + frame.origin.norm();
    for p in [x, y] {
        let d = frame.distance(p);
        if d > 1e-9 * scale {
            return Err(Error::Precondition(format!("point lies {d:e} off the plane")));
        }
    }
    let chord = y - x;
    let projected = (frame.project_vector(n_x) + frame.project_vector(n_y)).dot(&chord);
    let full = (n_x + n_y).dot(&chord);
    Ok((projected, full))
}

/// The paraboloid `y = Σ aᵢxᵢ²`.
///
/// Its Hessian at the origin is `diag(2a₁, …, 2aₙ)`; the coefficients are
/// the second fundamental form up to that factor of two.
#[derive(Debug, Clone, PartialEq)]
pub struct Paraboloid {
    pub coeffs: Vec<f64>,
    /// Homogeneous form on `(x₁, …, xₙ, y, w)`: `y·w − Σ aᵢxᵢ²`, level 0.
    pub form: QuadraticForm,
}

impl Paraboloid {
    pub fn height(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, xi)| a * xi * xi).sum()
    }

    pub fn hessian_at_origin(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs.iter().map(|a| 2.0 * a),
        ))
    }

    /// Homogeneous form evaluated at the affine point `(x, y)`.
    pub fn implicit(&self, x: &[f64], y: f64) -> f64 {
        let mut v: Vec<f64> = x.to_vec();
        v.push(y);
        v.push(1.0);
        self.form.value(&DVector::from_vec(v))
    }
}

pub fn paraboloid_from_jet(principal_coeffs: &[f64]) -> Result<Paraboloid> {
    if principal_coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::Spec("paraboloid coefficients must be finite".into()));
    }
    let n = principal_coeffs.len();
    let mut m = DMatrix::<f64>::zeros(n + 2, n + 2);
    for (i, a) in principal_coeffs.iter().enumerate() {
        m[(i, i)] = -a;
    }
    m[(n, n + 1)] = 0.5;
    m[(n + 1, n)] = 0.5;
    Ok(Paraboloid {
        coeffs: principal_coeffs.to_vec(),
        form: QuadraticForm::new(m, 0.0)?,
    })
}

/// Knobs for random plane sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionConfig {
    /// Half-width of the sampling box for quadrics that are not ellipsoids.
    pub extent: f64,
    /// Planes whose section has `|det| / ‖form‖³` below this are treated as
    /// tangent and redrawn.
    pub near_tangent: f64,
    /// Redraw budget per trial.
    pub max_draws: usize,
}

impl Default for SectionConfig {
    fn default() -> Self {
        SectionConfig { extent: 2.0, near_tangent: 1e-6, max_draws: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionRecord {
    pub id: usize,
    pub normal: [f64; 3],
    pub offset: f64,
    pub class: ConicClass,
    pub discriminant: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ClassHistogram {
    pub ellipse: usize,
    pub parabola: usize,
    pub hyperbola: usize,
    pub degenerate: usize,
}

impl ClassHistogram {
    fn add(&mut self, c: ConicClass) {
        match c {
            ConicClass::Ellipse => self.ellipse += 1,
            ConicClass::Parabola => self.parabola += 1,
            ConicClass::Hyperbola => self.hyperbola += 1,
            ConicClass::Degenerate => self.degenerate += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.ellipse + self.parabola + self.hyperbola + self.degenerate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub records: Vec<SectionRecord>,
    pub histogram: ClassHistogram,
}

impl SectionReport {
    pub fn all_ellipses(&self) -> bool {
        self.histogram.ellipse == self.records.len()
    }
}

/// Classifies the sections of a quadric in ℝ³ by `trials` random planes that
/// meet it. Each trial draws from its own stream of the seeded generator, so
/// the result does not depend on scheduling.
pub fn all_sections_ellipse_report(
    q: &QuadraticForm,
    trials: usize,
    seed: u64,
    config: &SectionConfig,
) -> Result<SectionReport> {
    if q.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: q.dim() });
    }
    let half_widths: [f64; 3] = match q.matrix.clone().try_inverse() {
        Some(inv) if q.is_positive_definite() && q.level > 0.0 => {
            [0, 1, 2].map(|i| (q.level * inv[(i, i)]).sqrt())
        }
        _ => [config.extent; 3],
    };
    let records: Result<Vec<SectionRecord>> = (0..trials)
        .into_par_iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            for _ in 0..config.max_draws {
                let normal = random_unit3(&mut rng);
                let support: f64 = (0..3).map(|i| normal[i].abs() * half_widths[i]).sum();
                let offset = rng.random_range(-support..=support);
                let frame = PlaneFrame::from_normal(normal, offset)?;
                let sec = plane_section(q, &frame)?;
                let m = sec.form.normalized_matrix();
                if sec.empty || m.determinant().abs() < config.near_tangent {
                    continue;
                }
                return Ok(SectionRecord {
                    id,
                    normal: [normal.x, normal.y, normal.z],
                    offset,
                    class: classify(&sec.form),
                    discriminant: quadratic_discriminant(&sec.form),
                });
            }
            Err(Error::Precondition(format!(
                "trial {id}: no plane met the surface in {} draws",
                config.max_draws
            )))
        })
        .collect();
    let records = records?;
    let mut histogram = ClassHistogram::default();
    for r in &records {
        histogram.add(r.class);
    }
    Ok(SectionReport { records, histogram })
}

fn random_unit3(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
