//! Python bindings: curves, quadratic forms and the batch experiments.
//!
//! Structured results come back as plain dicts and lists.

use billiard_lab::affine::{affine_curvature_profile, affine_reparameterize};
use billiard_lab::billiard::{self, BilliardState};
use billiard_lab::conics::{self, QuadricSpec, SectionConfig};
use billiard_lab::gravity::{self, DensityModel};
use billiard_lab::poritsky;
use billiard_lab::sphere::{self, SpaceForm, SphericalConic};
use billiard_lab::{CurveSpec, SampledCurve, Vec2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: billiard_lab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn space(geometry: &str) -> PyResult<SpaceForm> {
    match geometry {
        "sphere" => Ok(SpaceForm::SPHERE),
        "hyperbolic" => Ok(SpaceForm::HYPERBOLIC),
        other => Err(PyValueError::new_err(format!("unknown geometry {other:?}"))),
    }
}

/// Closed curve stored as uniform periodic samples.
#[pyclass(name = "Curve", module = "billiard_lab_py", frozen)]
struct PyCurve {
    inner: SampledCurve,
}

#[pymethods]
impl PyCurve {
    /// Builds a curve from a JSON spec such as `{"kind": "ellipse", "a": 2, "b": 1}`.
    #[staticmethod]
    fn from_spec(json: &str) -> PyResult<Self> {
        let spec = CurveSpec::from_json(json).map_err(err)?;
        Ok(PyCurve { inner: spec.build().map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, samples=512))]
    fn ellipse(a: f64, b: f64, samples: usize) -> Self {
        PyCurve { inner: billiard_lab::curve::ellipse(a, b, samples) }
    }

    #[staticmethod]
    #[pyo3(signature = (exponent, samples=512))]
    fn superellipse(exponent: f64, samples: usize) -> Self {
        PyCurve { inner: billiard_lab::curve::superellipse(exponent, samples) }
    }

    /// Samples at uniform parameters over one period.
    #[staticmethod]
    #[pyo3(signature = (points, period=std::f64::consts::TAU))]
    fn from_points(points: Vec<Vec<f64>>, period: f64) -> PyResult<Self> {
        Ok(PyCurve { inner: SampledCurve::closed(&points, period).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Curve(dim={}, samples={})", self.inner.dim(), self.inner.len())
    }

    /// Interpolated point at parameter `t`.
    fn point(&self, t: f64) -> Vec<f64> {
        self.inner.evaluate_jet(t, 0).map(|j| j.point().as_slice().to_vec()).unwrap_or_default()
    }

    fn samples(&self) -> Vec<Vec<f64>> {
        self.inner.samples()
    }

    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn signed_area(&self) -> f64 {
        self.inner.signed_area()
    }

    fn resampled(&self, n: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: self.inner.resampled(n).map_err(err)? })
    }
}

/// `Ax·x = level`; a cone when `level = 0`.
#[pyclass(name = "QuadraticForm", module = "billiard_lab_py", frozen)]
struct PyForm {
    inner: conics::QuadraticForm,
}

#[pymethods]
impl PyForm {
    #[new]
    #[pyo3(signature = (matrix, level=1.0))]
    fn new(matrix: Vec<Vec<f64>>, level: f64) -> PyResult<Self> {
        Ok(PyForm { inner: conics::QuadraticForm::from_spec(&QuadricSpec { matrix, level }).map_err(err)? })
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.to_spec().matrix
    }

    #[getter]
    fn level(&self) -> f64 {
        self.inner.level()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected {} coordinates", self.inner.dim())));
        }
        Ok(self.inner.value(&x.into()))
    }

    /// Class of the projective conic given by a 3x3 matrix.
    fn classify(&self) -> PyResult<String> {
        if self.inner.dim() != 3 {
            return Err(PyValueError::new_err("classification needs a 3x3 projective conic"));
        }
        Ok(conics::classify(&self.inner).to_string())
    }

    fn __repr__(&self) -> String {
        format!("QuadraticForm(matrix={:?}, level={})", self.matrix(), self.level())
    }
}

#[derive(Serialize)]
struct PlanarOrbit {
    t: Vec<f64>,
    x: Vec<[f64; 2]>,
    u: Vec<[f64; 2]>,
    joachimsthal: Vec<f64>,
    aborted: Option<String>,
}

/// Billiard orbit from the point at `t` leaving at `angle` from the tangent.
#[pyfunction]
#[pyo3(signature = (curve, t, angle, steps, form=None))]
fn billiard_orbit<'py>(
    py: Python<'py>,
    curve: &PyCurve,
    t: f64,
    angle: f64,
    steps: usize,
    form: Option<&PyForm>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = &curve.inner;
    let start = BilliardState::from_angle(c, t, angle).map_err(err)?;
    let rec = billiard::orbit(c, start, steps, form.map(|f| &f.inner)).map_err(err)?;
    let orbit = PlanarOrbit {
        t: rec.states.iter().map(|s| s.t).collect(),
        x: rec.states.iter().map(|s| s.foot(c).into()).collect(),
        u: rec.states.iter().map(|s| s.u.into()).collect(),
        joachimsthal: rec.integral_values,
        aborted: rec.aborted.map(|e| e.to_string()),
    };
    to_py(py, &orbit)
}

#[derive(Serialize)]
struct FieldFit {
    params: Vec<f64>,
    f: Vec<f64>,
    residual: f64,
    admissible: bool,
}

#[pyfunction]
#[pyo3(signature = (curve, pairs=200, seed=0))]
fn fit_normal_field<'py>(py: Python<'py>, curve: &PyCurve, pairs: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let fit = billiard::fit_normal_field(&curve.inner, pairs, seed).map_err(err)?;
    let out = FieldFit {
        params: fit.candidate.params,
        f: fit.candidate.f,
        residual: fit.residual,
        admissible: fit.admissible,
    };
    to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (curve, tol=billiard_lab::affine::DEFAULT_CONIC_TOL))]
fn conic_test<'py>(py: Python<'py>, curve: &PyCurve, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &billiard_lab::affine::conic_test(&curve.inner, tol).map_err(err)?)
}

/// Affine curvature at uniform steps of the equiaffine parameter.
#[pyfunction]
fn affine_curvature(curve: &PyCurve) -> PyResult<Vec<f64>> {
    Ok(affine_curvature_profile(&affine_reparameterize(&curve.inner).map_err(err)?))
}

/// Chords `x → x + c` in the candidate constant-area parameter.
#[pyfunction]
#[pyo3(signature = (curve, c, count=256))]
fn poritsky_chords<'py>(py: Python<'py>, curve: &PyCurve, c: f64, count: usize) -> PyResult<Bound<'py, PyAny>> {
    let (pp, _) = poritsky::poritsky_parameterize(&curve.inner).map_err(err)?;
    to_py(py, &poritsky::constant_area_chords(&pp, c, count).map_err(err)?)
}

#[pyfunction]
fn outer_billiard_orbit(curve: &PyCurve, start: (f64, f64), steps: usize) -> PyResult<Vec<(f64, f64)>> {
    let pts = poritsky::outer_billiard_orbit(&curve.inner, Vec2::new(start.0, start.1), steps).map_err(err)?;
    Ok(pts.iter().map(|p| (p.x, p.y)).collect())
}

#[derive(Serialize)]
struct SurfaceRun {
    x: Vec<[f64; 3]>,
    u: Vec<[f64; 3]>,
    joachimsthal: Vec<f64>,
    drift: f64,
    aborted: Option<String>,
}

/// Billiard in the conic cut by the cone `form` from the sphere or the
/// hyperboloid, starting at angle `t` about the cone axis.
#[pyfunction]
#[pyo3(signature = (cone, t, angle, steps, geometry="sphere"))]
fn surface_billiard_orbit<'py>(
    py: Python<'py>,
    cone: &PyForm,
    t: f64,
    angle: f64,
    steps: usize,
    geometry: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let conic = SphericalConic::new(&cone.inner, space(geometry)?).map_err(err)?;
    let orb = sphere::surface_orbit(&conic, conic.start(t, angle).map_err(err)?, steps);
    let run = SurfaceRun {
        x: orb.states.iter().map(|s| s.x.into()).collect(),
        u: orb.states.iter().map(|s| s.u.into()).collect(),
        drift: orb.drift(),
        joachimsthal: orb.invariants,
        aborted: orb.aborted.map(|e| e.to_string()),
    };
    to_py(py, &run)
}

#[derive(Serialize)]
struct SurfaceConicTest {
    #[serde(flatten)]
    coeffs: sphere::CubicCoeffs,
    criterion: Vec<f64>,
}

/// `γ‴ = aγ + bγ′` in the equiaffine parameter and the residual `2a − b′`.
#[pyfunction]
#[pyo3(signature = (curve, geometry="sphere"))]
fn surface_conic_test<'py>(py: Python<'py>, curve: &PyCurve, geometry: &str) -> PyResult<Bound<'py, PyAny>> {
    let frame = sphere::equiaffine_frame3_on(&curve.inner, space(geometry)?).map_err(err)?;
    let coeffs = sphere::cubic_coeffs(&frame).map_err(err)?;
    let criterion = sphere::conic_criterion_residual(&coeffs);
    to_py(py, &SurfaceConicTest { coeffs, criterion })
}

/// Net attraction at `point` of a density on the curve: `"uniform"`, or the
/// homeoid density of `form` (which must describe the curve).
#[pyfunction]
#[pyo3(signature = (curve, point, density="uniform", form=None, nodes=512))]
fn net_force<'py>(
    py: Python<'py>,
    curve: &PyCurve,
    point: (f64, f64),
    density: &str,
    form: Option<&PyForm>,
    nodes: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let model = match (density, form) {
        ("uniform", _) => DensityModel::Uniform,
        ("homeoid", Some(f)) => DensityModel::Homeoid(f.inner.clone()),
        ("homeoid", None) => return Err(PyValueError::new_err("homeoid density needs form")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown density {other:?}"))),
    };
    let o = Vec2::new(point.0, point.1);
    to_py(py, &gravity::net_force(&curve.inner, &model, &o, nodes).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (curve, count, seed=0, shrink=0.95))]
fn random_interior_points(curve: &PyCurve, count: usize, seed: u64, shrink: f64) -> PyResult<Vec<(f64, f64)>> {
    let pts = gravity::random_interior_points(&curve.inner, count, seed, shrink).map_err(err)?;
    Ok(pts.iter().map(|p| (p.x, p.y)).collect())
}

/// Classifies the sections of a quadric in ℝ³ by random planes.
#[pyfunction]
#[pyo3(signature = (quadric, trials=100, seed=0))]
fn plane_sections<'py>(py: Python<'py>, quadric: &PyForm, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = conics::all_sections_ellipse_report(&quadric.inner, trials, seed, &SectionConfig::default())
        .map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
fn billiard_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyForm>()?;
    m.add_function(wrap_pyfunction!(billiard_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_normal_field, m)?)?;
    m.add_function(wrap_pyfunction!(conic_test, m)?)?;
    m.add_function(wrap_pyfunction!(affine_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(poritsky_chords, m)?)?;
    m.add_function(wrap_pyfunction!(outer_billiard_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(surface_billiard_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(surface_conic_test, m)?)?;
    m.add_function(wrap_pyfunction!(net_force, m)?)?;
    m.add_function(wrap_pyfunction!(random_interior_points, m)?)?;
    m.add_function(wrap_pyfunction!(plane_sections, m)?)?;
    Ok(())
}
