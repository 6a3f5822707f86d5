//! Numerical laboratory for the average-distance functional
//!
//! ```text
//! F(Σ) = ∫ dist(x, Σ) dμ(x) + λ·H¹(Σ)
//! ```
//!
//! over connected planar graphs Σ, together with its elliptic analogue
//! (Dirichlet compliance with Σ as an internal crack).
//!
//! The geometric and variational modules are generic over the scalar type
//! through [`Scalar`]; the aliases below pin them to `f64`, which is what
//! every tolerance in the test-suite is calibrated for. The grid Poisson
//! solver in [`compliance`] and the scalar root finders in
//! [`constructions::corner`] are `f64` only.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments, clippy::type_complexity, clippy::needless_range_loop)]

pub mod compliance;
pub mod constructions;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod optimize;
pub mod scalar;
pub mod variation;

mod sum;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Points and vectors in the plane.
pub type Point = geometry::Point2<f64>;
/// Candidate network Σ.
pub type Graph = geometry::EmbeddedGraph<f64>;
pub type Projection = geometry::ProjectionResult<f64>;
pub type Region = measure::Region<f64>;
pub type Measure = measure::QuadratureMeasure<f64>;
/// Variation field living on the vertices of Σ.
pub type Field = variation::OnSigmaField<f64>;
pub type Report = variation::VariationReport<f64>;
pub type Scene = constructions::Scene<f64>;
pub type DescentConfig = optimize::DescentConfig<f64>;
pub type Trajectory = optimize::Trajectory<f64>;

/// Single-precision aliases, mostly useful for quick exploratory runs.
pub mod f32 {
    pub type Point = crate::geometry::Point2<f32>;
    pub type Graph = crate::geometry::EmbeddedGraph<f32>;
    pub type Region = crate::measure::Region<f32>;
    pub type Measure = crate::measure::QuadratureMeasure<f32>;
    pub type Field = crate::variation::OnSigmaField<f32>;
}
