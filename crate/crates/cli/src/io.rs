use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use billiard_lab::conics::{QuadraticForm, QuadricSpec};
use billiard_lab::{CurveSpec, SampledCurve, Vec2};
use clap::Args;
use nalgebra::DMatrix;

#[derive(Args)]
pub struct CurveInput {
    /// Curve spec in JSON.
    #[arg(long)]
    pub curve: PathBuf,
    /// Overrides the sample count of the spec.
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn with_samples(spec: &mut CurveSpec, n: usize) -> bool {
    match spec {
        CurveSpec::Ellipse { samples, .. }
        | CurveSpec::Superellipse { samples, .. }
        | CurveSpec::Fourier { samples, .. }
        | CurveSpec::ConeSection { samples, .. }
        | CurveSpec::SmallCircle { samples, .. } => {
            *samples = Some(n);
            true
        }
        CurveSpec::Samples { .. } => false,
    }
}

pub fn load_curve(input: &CurveInput) -> Result<(SampledCurve, CurveSpec)> {
    let path = &input.curve;
    let mut spec = CurveSpec::from_json(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
    let resample = match input.samples {
        Some(n) => !with_samples(&mut spec, n),
        None => false,
    };
    let mut curve = spec.build().with_context(|| format!("in {}", path.display()))?;
    if resample {
        curve = curve.resampled(input.samples.unwrap())?;
    }
    Ok((curve, spec))
}

/// Accepts `{"matrix": [[..]], "level": ..}` or a bare square array, which is
/// read as a cone (`level = 0`).
pub fn load_form(path: &Path) -> Result<QuadraticForm> {
    let text = read_text(path)?;
    let ctx = || format!("in {}", path.display());
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| anyhow!("line {}, column {}: {e}", e.line(), e.column()))
        .with_context(ctx)?;
    let spec: QuadricSpec = if value.is_array() {
        QuadricSpec { matrix: serde_json::from_value(value).with_context(ctx)?, level: 0.0 }
    } else {
        serde_json::from_value(value).with_context(ctx)?
    };
    Ok(QuadraticForm::from_spec(&spec).with_context(ctx)?)
}

/// `xᵀAx = 1` for an ellipse spec centered at the origin.
pub fn ellipse_form(spec: &CurveSpec) -> Option<QuadraticForm> {
    let CurveSpec::Ellipse { a, b, center, rotation, .. } = spec else { return None };
    if center != &[0.0, 0.0] {
        return None;
    }
    let r = nalgebra::Rotation2::new(*rotation);
    let m = r.matrix() * nalgebra::Matrix2::new(1.0 / (a * a), 0.0, 0.0, 1.0 / (b * b)) * r.matrix().transpose();
    QuadraticForm::new(DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]), 1.0).ok()
}

pub fn parse_pair(s: &str, flag: &str) -> Result<(f64, f64)> {
    let parsed = s.split_once(',').and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.ok_or_else(|| anyhow!("{flag} expects two comma-separated numbers, got {s:?}"))
}

/// Two numeric columns; a header row is skipped.
pub fn load_points(path: &Path) -> Result<Vec<Vec2>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("in {}", path.display()))?;
        let nums: Option<Vec<f64>> = rec.iter().take(2).map(|f| f.trim().parse().ok()).collect();
        match nums {
            Some(v) if v.len() == 2 => out.push(Vec2::new(v[0], v[1])),
            _ if i == 0 => continue,
            _ => bail!("{}: row {} is not a pair of numbers", path.display(), i + 1),
        }
    }
    if out.is_empty() {
        bail!("{}: no points", path.display());
    }
    Ok(out)
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}
