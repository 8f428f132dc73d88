//! Numerical experiments around characterizations of conics and quadrics:
//! billiards and their conserved quantities, affine curvature, constant-area
//! chords, outer billiards, conics on the sphere and the hyperbolic plane,
//! and the vanishing attraction of homeoid densities.
//!
//! Closed curves are stored as uniform periodic samples and differentiated
//! through their trigonometric interpolants.

pub mod affine;
pub mod billiard;
pub mod conics;
pub mod curve;
pub mod error;
pub mod geom;
pub mod gravity;
pub mod poritsky;
pub mod roots;
pub mod spectral;
pub mod sphere;
mod taylor;

pub use curve::{CurveSpec, Jet, SampledCurve};
pub use error::{Error, Result};
pub use geom::{bracket2, bracket3, inner, MetricSignature, Vec2, Vec3};
