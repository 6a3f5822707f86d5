//! Scene builders: a candidate network Σ together with the region Ω
//! carrying the uniform measure.

pub mod corner;

use crate::geometry::{EmbeddedGraph, Point2};
use crate::measure::Region;
use crate::{Error, Result, Scalar};

pub use corner::{
    corner_domain, corner_nonstationary_test, gamma_threshold, h_of_phi, h_of_phi_closed_form, solve_rect_height,
    CornerParams, CornerTest, GammaReport,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    pub graph: EmbeddedGraph<T>,
    pub region: Region<T>,
    pub lambda: T,
    /// Free-form label describing how the scene was built.
    pub provenance: String,
}

impl<T: Scalar> Scene<T> {
    /// Checks that every vertex of Σ lies in Ω.
    pub fn new(graph: EmbeddedGraph<T>, region: Region<T>, lambda: T, provenance: impl Into<String>) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        region.validate()?;
        if let Some(v) = graph.vertices().iter().position(|p| !region.contains(*p)) {
            let p = graph.vertices()[v];
            return Err(Error::Geometry(format!("vertex {v} at ({}, {}) lies outside the region", p.x, p.y)));
        }
        Ok(Self { graph, region, lambda, provenance: provenance.into() })
    }
}

/// Radius `√(1/2 − λ)` of the stationary circle in the unit disk.
pub fn stationary_radius<T: Scalar>(lambda: T) -> Result<T> {
    let half = T::of(0.5);
    if !(lambda > T::zero()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if lambda >= half {
        return Err(Error::DegenerateConstruction(format!(
            "lambda = {lambda} >= 1/2: the stationary circle degenerates to a point"
        )));
    }
    Ok((half - lambda).sqrt())
}

/// Regular `n_arc`-gon of radius `√(1/2 − λ)` in the unit disk.
pub fn stationary_circle<T: Scalar>(lambda: T, n_arc: usize) -> Result<Scene<T>> {
    let r = stationary_radius(lambda)?;
    let graph = EmbeddedGraph::regular_polygon(Point2::zero(), r, n_arc)?;
    let region = Region::disk(Point2::zero(), T::one())?;
    Scene::new(graph, region, lambda, format!("circle: radius {r}, {n_arc}-gon, unit disk"))
}

/// Segment from `(0,0)` to `(L,0)` cut into `n_edges` equal edges, in the
/// rectangle `[0,L]×[−√λ,√λ]` capped by half-disks of radius `√λ`
/// centered at the endpoints.
pub fn stadium_domain<T: Scalar>(lambda: T, len: T, n_edges: usize) -> Result<Scene<T>> {
    if !(lambda > T::zero()) || !(len > T::zero()) {
        return Err(Error::InvalidArgument(format!("stadium needs lambda > 0 and L > 0, got {lambda}, {len}")));
    }
    if n_edges == 0 {
        return Err(Error::InvalidArgument("stadium segment needs at least one edge".into()));
    }
    let w = lambda.sqrt();
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    let e = Point2::zero();
    let f = Point2::new(len, T::zero());
    let region = Region::union(vec![
        Region::rectangle(Point2::new(T::zero(), -w), Point2::new(len, w))?,
        Region::annular_sector(e, T::zero(), w, half_pi, pi + half_pi)?,
        Region::annular_sector(f, T::zero(), w, -half_pi, half_pi)?,
    ])?;
    let n = T::of(n_edges as f64);
    let pts = (0..=n_edges)
        .map(|i| if i == n_edges { f } else { Point2::new(len * T::of(i as f64) / n, T::zero()) })
        .collect();
    let graph = EmbeddedGraph::polyline(pts, false)?;
    Scene::new(graph, region, lambda, format!("stadium: L = {len}, cap radius {w}, {n_edges} edges"))
}

/// Two straight arms of length `arm_len` leaving `P = (0,0)` at angle
/// `±φ` from the bisector `+e₂`, each cut into `n_per_arm` edges. Ω is the
/// disk of radius `arm_len + margin` about P.
pub fn wedge_set<T: Scalar>(phi: T, arm_len: T, margin: T, lambda: T, n_per_arm: usize) -> Result<Scene<T>> {
    if !(phi > T::zero()) || !(phi < T::FRAC_PI_2()) {
        return Err(Error::InvalidArgument(format!(
            "half-aperture must lie in (0, π/2), got {phi}; at π/2 the arms form a single segment"
        )));
    }
    if !(arm_len > T::zero()) || !(margin > T::zero()) || n_per_arm == 0 {
        return Err(Error::InvalidArgument("wedge needs arm_len > 0, margin > 0 and at least one edge per arm".into()));
    }
    let n = T::of(n_per_arm as f64);
    let dirs = [Point2::new(-phi.sin(), phi.cos()), Point2::new(phi.sin(), phi.cos())];
    // vertices: left tip ... P ... right tip
    let mut pts: Vec<Point2<T>> = (1..=n_per_arm).rev().map(|i| dirs[0] * (arm_len * T::of(i as f64) / n)).collect();
    pts.push(Point2::zero());
    pts.extend((1..=n_per_arm).map(|i| dirs[1] * (arm_len * T::of(i as f64) / n)));
    let graph = EmbeddedGraph::polyline(pts, false)?;
    let region = Region::disk(Point2::zero(), arm_len + margin)?;
    Scene::new(graph, region, lambda, format!("wedge: half-aperture {phi}, arms {arm_len}, disk radius {}", arm_len + margin))
}
