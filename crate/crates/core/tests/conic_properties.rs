use billiard_lab::conics::{
    all_sections_ellipse_report, classify, conic_normal, eval_projective, fit_conic_5pts, plane_section,
    projected_pair_residual, ConicClass, PlaneFrame, QuadraticForm, SectionConfig,
};
use billiard_lab::Vec2;
use nalgebra::Vector3;
use proptest::prelude::*;

fn unit(v: [f64; 3]) -> Option<Vector3<f64>> {
    let n = Vector3::from(v);
    (n.norm() > 0.1).then(|| n.normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_ignores_scale_and_frame_rotation(
        axes in prop::array::uniform3(0.3f64..3.0),
        normal in prop::array::uniform3(-1.0f64..1.0),
        frac in -0.9f64..0.9,
        scale in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0],
        turn in 0.0f64..6.3,
    ) {
        let Some(n) = unit(normal) else { return Ok(()) };
        let q = QuadraticForm::diagonal(&[1.0 / axes[0].powi(2), 1.0 / axes[1].powi(2), 1.0 / axes[2].powi(2)], 1.0);
        // support function of the ellipsoid bounds the offsets that cut it
        let support = (n.x * axes[0]).hypot(n.y * axes[1]).hypot(n.z * axes[2]);
        let frame = PlaneFrame::from_normal(n, frac * support).unwrap();
        let sec = plane_section(&q, &frame).unwrap();
        let base = classify(&sec.form);
        prop_assert_eq!(base, ConicClass::Ellipse);
        let scaled = QuadraticForm::new(sec.form.matrix() * scale, 0.0).unwrap();
        prop_assert_eq!(classify(&scaled), base);
        let turned = plane_section(&q, &frame.rotated(turn)).unwrap();
        prop_assert_eq!(classify(&turned.form), base);
    }

    #[test]
    fn five_point_fit_passes_through_inputs(
        a in 0.3f64..3.0,
        b in 0.3f64..3.0,
        rot in 0.0f64..3.2,
        shift in prop::array::uniform2(-2.0f64..2.0),
        start in 0.0f64..6.3,
    ) {
        let (s, c) = rot.sin_cos();
        let pts: [Vec2; 5] = std::array::from_fn(|k| {
            let t = start + 1.2 * k as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            Vec2::new(c * x - s * y + shift[0], s * x + c * y + shift[1])
        });
        let fit = fit_conic_5pts(&pts).unwrap();
        for p in &pts {
            prop_assert!(eval_projective(&fit, p).abs() < 1e-12);
        }
        prop_assert_eq!(classify(&fit), ConicClass::Ellipse);
    }

    #[test]
    fn projected_and_full_pair_residuals_agree(
        axes in prop::array::uniform3(0.3f64..3.0),
        normal in prop::array::uniform3(-1.0f64..1.0),
        frac in -0.9f64..0.9,
        i in 0usize..9,
        j in 0usize..9,
    ) {
        let Some(n) = unit(normal) else { return Ok(()) };
        let q = QuadraticForm::diagonal(&[1.0 / axes[0].powi(2), 1.0 / axes[1].powi(2), 1.0 / axes[2].powi(2)], 1.0);
        let support = (n.x * axes[0]).hypot(n.y * axes[1]).hypot(n.z * axes[2]);
        let frame = PlaneFrame::from_normal(n, frac * support).unwrap();
        let pts = plane_section(&q, &frame).unwrap().ellipse_points(9).unwrap();
        let (x, y) = (frame.point(pts[i].x, pts[i].y), frame.point(pts[j].x, pts[j].y));
        let nx = conic_normal(&q, &x).unwrap();
        let ny = conic_normal(&q, &y).unwrap();
        let (p, f) = projected_pair_residual(&nx, &ny, &x, &y, &frame).unwrap();
        prop_assert!((p - f).abs() < 1e-12, "{} {}", p, f);
    }
}

#[test]
fn thousand_ellipsoid_sections_are_ellipses() {
    let q = QuadraticForm::diagonal(&[1.0, 0.25, 1.0 / 9.0], 1.0);
    let report = all_sections_ellipse_report(&q, 1000, 2024, &SectionConfig::default()).unwrap();
    assert_eq!(report.records.len(), 1000);
    assert!(report.all_ellipses(), "{:?}", report.histogram);
}

#[test]
fn section_reports_are_reproducible() {
    let q = QuadraticForm::diagonal(&[1.0, 1.0, -1.0], 1.0);
    let cfg = SectionConfig::default();
    let a = all_sections_ellipse_report(&q, 200, 3, &cfg).unwrap();
    let b = all_sections_ellipse_report(&q, 200, 3, &cfg).unwrap();
    assert_eq!(a.records, b.records);
}
