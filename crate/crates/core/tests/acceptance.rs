//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line even when all of them succeed.

use std::f64::consts::{PI, TAU};
use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use billiard_lab::affine::{
    affine_curvature_profile, affine_reparameterize, curvature_profile, kappa_ode_residual, ProfileStats,
};
use billiard_lab::billiard::{field_alignment, fit_normal_field, integral_drift, orbit, BilliardState};
use billiard_lab::conics::{
    all_sections_ellipse_report, conic_normal, plane_section, projected_pair_residual, PlaneFrame,
    QuadraticForm, SectionConfig,
};
use billiard_lab::curve::{circle, ellipse, superellipse, CurveSpec, Perturbation};
use billiard_lab::gravity::{net_force, pair_cancellation, random_interior_points, DensityModel};
use billiard_lab::poritsky::{
    area_envelope, constant_area_chords, outer_billiard_map, outer_billiard_orbit, poritsky_parameterize,
    DEFAULT_DRIFT_TOL,
};
use billiard_lab::sphere::{
    conic_criterion_residual, cubic_coeffs, equiaffine_frame3, surface_orbit, SpaceForm, SphericalConic,
};
use billiard_lab::{SampledCurve, Vec2, Vec3};
use nalgebra::{DMatrix, Matrix2, Rotation2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(f64::abs).fold(0.0, f64::max)
}

fn joachimsthal_conservation() -> Check {
    let curve = ellipse(2.0, 1.0, 512);
    let form = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut slowest) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let start = BilliardState::from_angle(&curve, rng.random_range(0.0..TAU), rng.random_range(0.2..PI - 0.2))
            .map_err(|e| e.to_string())?;
        let clock = Instant::now();
        let rec = orbit(&curve, start, 10_000, Some(&form)).map_err(|e| e.to_string())?;
        slowest = slowest.max(clock.elapsed().as_secs_f64());
        if let Some(e) = rec.aborted {
            return Err(format!("orbit aborted: {e}"));
        }
        let drift = integral_drift(&rec).map_err(|e| e.to_string())? / rec.integral_values[0].abs();
        worst = worst.max(drift);
    }
    ensure(
        worst < 1e-8 && slowest < 5.0,
        format!("max relative drift {worst:.2e} (< 1e-8), slowest orbit {slowest:.2}s (< 5s)"),
    )
}

fn ellipse_at(a: f64, b: f64, angle: f64, shift: Vec2) -> (SampledCurve, Matrix2<f64>) {
    let r = *Rotation2::new(angle).matrix();
    let curve = ellipse(a, b, 256).transformed2(&r, shift).unwrap();
    (curve, r * Matrix2::new(1.0 / (a * a), 0.0, 0.0, 1.0 / (b * b)) * r.transpose())
}

fn normal_field_separation() -> Check {
    let mut worst_res = 0.0f64;
    let mut worst_angle = 0.0f64;
    for (a, b, ang, shift) in [
        (2.0, 1.0, 0.0, Vec2::zeros()),
        (1.5, 1.0, 0.6, Vec2::new(0.3, -0.2)),
        (3.0, 0.7, 2.0, Vec2::new(-1.0, 0.5)),
    ] {
        let (curve, m) = ellipse_at(a, b, ang, shift);
        let fit = fit_normal_field(&curve, 1000, 11).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(fit.residual);
        let (angle, _) = field_alignment(&curve, &fit.candidate, |x| m * (x - shift));
        worst_angle = worst_angle.max(angle);
    }
    let sup = fit_normal_field(&superellipse(4.0, 256), 1000, 11).map_err(|e| e.to_string())?;
    ensure(
        worst_res < 1e-9 && worst_angle < 1e-6 && sup.residual >= 1e-3,
        format!(
            "ellipse residual {worst_res:.2e} (< 1e-9), angle to Ax {worst_angle:.2e} rad (< 1e-6), superellipse residual {:.2e} (>= 1e-3)",
            sup.residual
        ),
    )
}

fn affine_curvature_constant() -> Check {
    let ac = affine_reparameterize(&ellipse(2.0, 1.0, 512)).map_err(|e| e.to_string())?;
    let st = ProfileStats::of(&affine_curvature_profile(&ac));
    let expect = 2f64.powf(-2.0 / 3.0);
    ensure(
        st.relative_variation < 1e-6 && (st.mean - expect).abs() < 1e-6,
        format!(
            "relative spread {:.2e} (< 1e-6), |mean - 2^(-2/3)| {:.2e} (< 1e-6)",
            st.relative_variation,
            (st.mean - expect).abs()
        ),
    )
}

fn kappa_ode() -> Check {
    let r = |c: &SampledCurve| curvature_profile(c).map(|p| kappa_ode_residual(&p).max_scaled);
    let c = r(&circle(1.0, 512)).map_err(|e| e.to_string())?;
    let e = r(&ellipse(2.0, 1.0, 512)).map_err(|e| e.to_string())?;
    let s = r(&superellipse(4.0, 512)).map_err(|e| e.to_string())?;
    ensure(
        c < 1e-12 && e < 1e-4 && s > 10.0 * e,
        format!("circle {c:.2e} (< 1e-12), ellipse {e:.2e} (< 1e-4), superellipse {s:.2e} (> 10x ellipse)"),
    )
}

fn poritsky_property() -> Check {
    let (pp, _) = poritsky_parameterize(&ellipse(2.0, 1.0, 512)).map_err(|e| e.to_string())?;
    let (mut drift, mut area_err) = (0.0f64, 0.0f64);
    for k in 3..=16 {
        let c = TAU / k as f64;
        drift = drift.max(pp.area_drift(c, 256));
        // areas scale by ab = 2 from the unit circle's (c − sin c)/2
        let expect = c - c.sin();
        let fam = constant_area_chords(&pp, c, 64).map_err(|e| e.to_string())?;
        area_err = area_err.max(max_abs(fam.chords.iter().map(|ch| (ch.area - expect) / expect)));
    }
    let (_, sup) = poritsky_parameterize(&superellipse(4.0, 512)).map_err(|e| e.to_string())?;
    ensure(
        drift < 1e-8 && area_err < 1e-8 && sup > 1e-3,
        format!(
            "ellipse drift {drift:.2e} over c = 2pi/16..2pi/3 (< 1e-8), area vs (ab/2)(c - sin c) {area_err:.2e} (< 1e-8), superellipse drift {sup:.2e} (> 1e-3)"
        ),
    )
}

fn area_construction() -> Check {
    let (cp, _) = poritsky_parameterize(&circle(1.0, 256)).map_err(|e| e.to_string())?;
    let mut radius_err = 0.0f64;
    for c in [0.5, PI / 3.0, 2.0] {
        let env = area_envelope(&constant_area_chords(&cp, c, 128).map_err(|e| e.to_string())?, DEFAULT_DRIFT_TOL)
            .map_err(|e| e.to_string())?;
        radius_err = radius_err.max(max_abs(env.curve.samples().iter().map(|p| p[0].hypot(p[1]) - (c / 2.0).cos())));
    }
    let (a, b) = (2.0, 1.0);
    let (ep, _) = poritsky_parameterize(&ellipse(a, b, 256)).map_err(|e| e.to_string())?;
    let mut tangency = 0.0f64;
    for c in [0.5, 1.2, 2.5] {
        let env = area_envelope(&constant_area_chords(&ep, c, 256).map_err(|e| e.to_string())?, DEFAULT_DRIFT_TOL)
            .map_err(|e| e.to_string())?;
        tangency = tangency.max(env.max_tangency_defect);
    }
    let env = area_envelope(&constant_area_chords(&ep, 1.2, 256).map_err(|e| e.to_string())?, DEFAULT_DRIFT_TOL)
        .map_err(|e| e.to_string())?;
    let orbit = outer_billiard_orbit(&env.curve, ep.point(0.4), 500).map_err(|e| e.to_string())?;
    let off = max_abs(orbit.iter().map(|p| (p.x / a).powi(2) + (p.y / b).powi(2) - 1.0));
    ensure(
        radius_err < 1e-8 && tangency < 1e-6 && off < 1e-6,
        format!(
            "circle envelope radius error {radius_err:.2e} (< 1e-8), ellipse tangency defect {tangency:.2e} (< 1e-6), outer orbit off ellipse {off:.2e} over 500 steps (< 1e-6)"
        ),
    )
}

fn outer_billiard_sanity() -> Check {
    let c = circle(1.0, 256);
    let first = outer_billiard_map(&c, Vec2::new(2.0, 0.0)).map_err(|e| e.to_string())?;
    let first_err = (first - Vec2::new(-1.0, 3f64.sqrt())).norm();
    let orbit = outer_billiard_orbit(&c, Vec2::new(2.0, 0.0), 1000).map_err(|e| e.to_string())?;
    let radius_err = max_abs(orbit.iter().map(|p| p.norm() - 2.0));
    ensure(
        first_err < 1e-12 && radius_err < 1e-12,
        format!("first image error {first_err:.2e} (< 1e-12), radius error {radius_err:.2e} over 1000 steps (< 1e-12)"),
    )
}

fn spherical_invariant() -> Check {
    let conic = SphericalConic::new(&QuadraticForm::diagonal(&[1.0, 2.0, -1.0], 0.0), SpaceForm::SPHERE)
        .map_err(|e| e.to_string())?;
    let orbit = surface_orbit(&conic, conic.start(0.3, 1.0).map_err(|e| e.to_string())?, 1000);
    if let Some(e) = orbit.aborted {
        return Err(format!("orbit aborted: {e}"));
    }
    let drift = orbit.drift();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut random_unit = || {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        v.normalize()
    };
    let mut length_err = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = (random_unit(), random_unit());
        let d = x.dot(&y);
        let expect = (1.0 - d * d).sqrt();
        length_err = length_err.max(((y - x * d).norm() - expect).abs());
        length_err = length_err.max(((y * d - x).norm() - expect).abs());
    }
    ensure(
        drift < 1e-8 && length_err < 1e-12,
        format!("Ax.u drift {drift:.2e} over 1000 steps (< 1e-8), tangent length identity {length_err:.2e} (< 1e-12)"),
    )
}

fn cone_section(amplitude: f64) -> SampledCurve {
    CurveSpec::ConeSection {
        axes: [1.0, 2f64.sqrt().recip(), 1.0],
        perturbation: (amplitude != 0.0).then_some(Perturbation { mode: 3, amplitude }),
        samples: Some(256),
    }
    .build()
    .unwrap()
}

fn projective_criterion() -> Check {
    let residual = |curve: &SampledCurve| -> std::result::Result<f64, String> {
        let ec = equiaffine_frame3(curve).map_err(|e| e.to_string())?;
        let cc = cubic_coeffs(&ec).map_err(|e| e.to_string())?;
        Ok(max_abs(conic_criterion_residual(&cc)))
    };
    let conic = residual(&cone_section(0.0))?;
    let other = residual(&cone_section(0.05))?;
    ensure(
        conic < 1e-5 && other > 10.0 * conic,
        format!("spherical conic max|2a - b'| {conic:.2e} (< 1e-5), perturbed oval {other:.2e} (> 10x)"),
    )
}

fn cavity() -> Check {
    let curve = ellipse(2.0, 1.0, 256);
    let form = QuadraticForm::diagonal(&[0.25, 1.0], 1.0);
    let homeoid = DensityModel::Homeoid(form.clone());
    let points = random_interior_points(&curve, 20, 9, 0.95).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut pair = 0.0f64;
    for o in &points {
        worst = worst.max(net_force(&curve, &homeoid, o, 1024).map_err(|e| e.to_string())?.magnitude());
        for k in 0..16 {
            let ang = TAU * k as f64 / 16.0 + 0.1;
            let p = pair_cancellation(&form, o, &Vec2::new(ang.cos(), ang.sin())).map_err(|e| e.to_string())?;
            pair = pair.max(p.residual.abs());
        }
    }
    let uniform = net_force(&curve, &DensityModel::Uniform, &Vec2::new(0.5, 0.0), 1024)
        .map_err(|e| e.to_string())?
        .magnitude();
    ensure(
        worst < 1e-8 && uniform > 1e-3 && pair < 1e-12,
        format!(
            "homeoid max |F| {worst:.2e} at 20 points (< 1e-8), uniform |F| {uniform:.2e} (> 1e-3), pair residual {pair:.2e} (< 1e-12)"
        ),
    )
}

fn sections() -> Check {
    let ellipsoid = QuadraticForm::diagonal(&[1.0, 0.25, 1.0 / 9.0], 1.0);
    let cfg = SectionConfig::default();
    let report = all_sections_ellipse_report(&ellipsoid, 100, 21, &cfg).map_err(|e| e.to_string())?;
    let hyperboloid = QuadraticForm::diagonal(&[1.0, 1.0, -1.0], 1.0);
    let control = all_sections_ellipse_report(&hyperboloid, 100, 21, &cfg).map_err(|e| e.to_string())?;
    let non_ellipses = control.records.len() - control.histogram.ellipse;
    let mut identity = 0.0f64;
    for rec in report.records.iter().take(25) {
        let frame = PlaneFrame::from_normal(Vector3::from(rec.normal), rec.offset).map_err(|e| e.to_string())?;
        let sec = plane_section(&ellipsoid, &frame).map_err(|e| e.to_string())?;
        let pts: Vec<_> = sec
            .ellipse_points(7)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| frame.point(p.x, p.y))
            .collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let nx = conic_normal(&ellipsoid, &pts[i]).map_err(|e| e.to_string())?;
                let ny = conic_normal(&ellipsoid, &pts[j]).map_err(|e| e.to_string())?;
                let (p, f) = projected_pair_residual(&nx, &ny, &pts[i], &pts[j], &frame).map_err(|e| e.to_string())?;
                identity = identity.max(p.abs()).max(f.abs()).max((p - f).abs());
            }
        }
    }
    ensure(
        report.all_ellipses() && report.records.len() == 100 && non_ellipses >= 1 && identity < 1e-10,
        format!(
            "ellipsoid sections classified ellipse: {}/100, hyperboloid non-ellipses: {non_ellipses} (>= 1), projected pair identity {identity:.2e} (< 1e-10)",
            report.histogram.ellipse
        ),
    )
}

fn hyperbolic_variant() -> Check {
    let h = SpaceForm::HYPERBOLIC;
    let conic = SphericalConic::new(
        &QuadraticForm::new(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 3.0, 0.0, 0.0, 0.0, -1.0]), 0.0)
            .map_err(|e| e.to_string())?,
        h,
    )
    .map_err(|e| e.to_string())?;
    let orbit = surface_orbit(&conic, conic.start(0.7, 1.3).map_err(|e| e.to_string())?, 1000);
    if let Some(e) = orbit.aborted {
        return Err(format!("orbit aborted: {e}"));
    }
    let sheet = max_abs(orbit.states.iter().map(|s| h.pair(&s.x, &s.x) + 1.0));
    let upper = orbit.states.iter().all(|s| s.x.z > 0.0);
    let drift = orbit.drift();
    ensure(
        sheet < 1e-10 && upper && drift < 1e-8,
        format!("<x,x> + 1 within {sheet:.2e} (< 1e-10), upper sheet: {upper}, invariant drift {drift:.2e} (< 1e-8)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("Joachimsthal conservation", joachimsthal_conservation),
        ("normal-field conic separation", normal_field_separation),
        ("constant affine curvature", affine_curvature_constant),
        ("curvature ODE residual", kappa_ode),
        ("constant-area parameter", poritsky_property),
        ("area construction", area_construction),
        ("outer billiard sanity", outer_billiard_sanity),
        ("spherical invariant", spherical_invariant),
        ("projective conic criterion", projective_criterion),
        ("no gravity in a cavity", cavity),
        ("plane sections", sections),
        ("hyperbolic variant", hyperbolic_variant),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{secs:.2}s]", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
