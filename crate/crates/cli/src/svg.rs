//! Static SVG rendering of curves, orbits and envelopes.

use std::fmt::Write;

use anyhow::{bail, Result};
use billiard_lab::Vec2;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone)]
pub enum Layer {
    /// Closed polygon through the points, drawn as one `<path>` ending in `Z`.
    Closed { class: &'static str, points: Vec<Vec2> },
    /// One `<line>` per segment.
    Segments { class: &'static str, segments: Vec<(Vec2, Vec2)> },
    /// One `<circle>` per point.
    Points { class: &'static str, points: Vec<Vec2> },
}

impl Layer {
    fn is_empty(&self) -> bool {
        match self {
            Layer::Closed { points, .. } | Layer::Points { points, .. } => points.is_empty(),
            Layer::Segments { segments, .. } => segments.is_empty(),
        }
    }

    fn class(&self) -> &'static str {
        match self {
            Layer::Closed { class, .. } | Layer::Segments { class, .. } | Layer::Points { class, .. } => class,
        }
    }

    fn extend_bounds(&self, lo: &mut Vec2, hi: &mut Vec2) {
        let mut add = |p: &Vec2| {
            *lo = lo.inf(p);
            *hi = hi.sup(p);
        };
        match self {
            Layer::Closed { points, .. } | Layer::Points { points, .. } => points.iter().for_each(&mut add),
            Layer::Segments { segments, .. } => segments.iter().for_each(|(a, b)| {
                add(a);
                add(b);
            }),
        }
    }
}

fn stroke(class: &str) -> (&'static str, f64) {
    match class {
        "curve" => ("black", 1.5),
        "envelope" => ("crimson", 1.2),
        "orbit" => ("steelblue", 0.6),
        "chord" => ("gray", 0.3),
        _ => ("darkgreen", 0.8),
    }
}

/// Renders the layers in order into a standalone document. Every layer must
/// hold data; an empty layer usually means an orbit that never left its
/// start point and is reported as an error.
pub fn emit_svg(layers: &[Layer]) -> Result<String> {
    if layers.is_empty() {
        bail!("nothing to plot");
    }
    if let Some(l) = layers.iter().find(|l| l.is_empty()) {
        bail!("cannot plot empty {} dataset", l.class());
    }
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for l in layers {
        l.extend_bounds(&mut lo, &mut hi);
    }
    if !(lo.iter().chain(hi.iter()).all(|v| v.is_finite())) {
        bail!("non-finite coordinates in plot data");
    }
    let span = (hi - lo).max().max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let width = (hi.x - lo.x) * scale + 2.0 * MARGIN;
    let height = (hi.y - lo.y) * scale + 2.0 * MARGIN;
    // y grows downward in SVG
    let map = |p: &Vec2| ((p.x - lo.x) * scale + MARGIN, (hi.y - p.y) * scale + MARGIN);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    for l in layers {
        let (color, w) = stroke(l.class());
        match l {
            Layer::Closed { class, points } => {
                let mut d = String::new();
                for (i, p) in points.iter().enumerate() {
                    let (x, y) = map(p);
                    write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" })?;
                }
                d.push('Z');
                writeln!(out, r#"<path class="{class}" d="{d}" fill="none" stroke="{color}" stroke-width="{w}"/>"#)?;
            }
            Layer::Segments { class, segments } => {
                writeln!(out, r#"<g class="{class}" stroke="{color}" stroke-width="{w}">"#)?;
                for (a, b) in segments {
                    let ((x1, y1), (x2, y2)) = (map(a), map(b));
                    writeln!(out, r#"<line class="{class}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#)?;
                }
                writeln!(out, "</g>")?;
            }
            Layer::Points { class, points } => {
                writeln!(out, r#"<g class="{class}" fill="{color}">"#)?;
                for p in points {
                    let (x, y) = map(p);
                    writeln!(out, r#"<circle class="{class}" cx="{x:.3}" cy="{y:.3}" r="1.5"/>"#)?;
                }
                writeln!(out, "</g>")?;
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
