//! Small vector helpers shared by the planar and spatial code.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Signature of the ambient bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSignature {
    /// The ordinary dot product.
    Euclidean,
    /// `dx² + dy² − dz²`; the last coordinate carries the minus sign.
    Lorentzian,
}

impl MetricSignature {
    pub fn pair3(self, u: &Vec3, v: &Vec3) -> f64 {
        match self {
            MetricSignature::Euclidean => u.dot(v),
            MetricSignature::Lorentzian => u.x * v.x + u.y * v.y - u.z * v.z,
        }
    }
}

/// Inner product of two vectors of equal dimension under `sig`.
///
/// The Lorentzian form flips the sign of the last coordinate.
pub fn inner(u: &[f64], v: &[f64], sig: MetricSignature) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.is_empty() {
        return Ok(0.0);
    }
    let n = u.len();
    let head: f64 = u[..n - 1].iter().zip(&v[..n - 1]).map(|(a, b)| a * b).sum();
    let last = u[n - 1] * v[n - 1];
    Ok(match sig {
        MetricSignature::Euclidean => head + last,
        MetricSignature::Lorentzian => head - last,
    })
}

/// `det[a, b]` for planar vectors.
#[inline]
pub fn bracket2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// `det[a, b, c]` with the arguments as columns.
#[inline]
pub fn bracket3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

/// Counterclockwise quarter turn.
#[inline]
pub fn rot90(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Angle between two vectors in `[0, π]`.
pub fn angle_between2(a: &Vec2, b: &Vec2) -> f64 {
    bracket2(a, b).abs().atan2(a.dot(b))
}

pub fn angle_between3(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}
