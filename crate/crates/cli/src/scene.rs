//! Scene files: TOML documents describing Σ, the region carrying the
//! measure, λ and the per-verb parameters.
//!
//! ```toml
//! lambda = 0.3
//!
//! [construction]
//! kind = "circle"
//! n_arc = 512
//!
//! [measure]
//! h = 0.005
//! ```
//!
//! Instead of `[construction]` a scene may give `[graph]` (vertices and
//! edges) and `[region]` explicitly. See the README for every table.

use std::f64::consts::FRAC_PI_2;

use adf_core::constructions::{corner_domain, stadium_domain, stationary_circle, wedge_set, CornerParams};
use adf_core::{DescentConfig, Graph, Point, Region};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub lambda: Option<f64>,
    pub construction: Option<Construction>,
    pub graph: Option<GraphSpec>,
    pub region: Option<RegionSpec>,
    pub measure: Option<MeasureSpec>,
    pub tolerances: Option<Tolerances>,
    pub field: Option<FieldSpec>,
    pub probe: Option<ProbeSpec>,
    pub descent: Option<DescentSpec>,
    pub compliance: Option<ComplianceSpec>,
    pub corner_math: Option<CornerMathSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Construction {
    /// Stationary circle in the unit disk.
    Circle { n_arc: usize },
    Stadium { length: f64, n_edges: usize },
    Wedge { phi: f64, arm_len: f64, margin: f64, n_per_arm: usize },
    Corner { radius: f64, alpha: f64, k: f64, n_arc: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Disk { center: [f64; 2], radius: f64 },
    Rectangle { min: [f64; 2], max: [f64; 2] },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// Cell size of the midpoint rule on the region.
    pub h: Option<f64>,
    /// Point masses `[x, y, weight]`, used instead of the region.
    pub atoms: Option<Vec<[f64; 3]>>,
    /// Number of halvings in refinement tables (including the base level).
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub stationarity: Option<f64>,
    /// Step of the finite-difference oracle, relative to the diameter of Σ.
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Radial { center: [f64; 2] },
    Constant { value: [f64; 2] },
    Hat { vertex: usize, direction: [f64; 2] },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub attach: Option<[f64; 2]>,
    pub direction: Option<[f64; 2]>,
    pub vertex: Option<usize>,
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentSpec {
    pub step0: Option<f64>,
    pub backtrack: Option<f64>,
    pub armijo: Option<f64>,
    pub max_iters: Option<usize>,
    pub resample_every: Option<usize>,
    pub target_edge_len: Option<f64>,
    pub stop_residual: Option<f64>,
    pub smoothing: Option<f64>,
    pub min_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceSpec {
    pub h: f64,
    #[serde(default = "origin")]
    pub min: [f64; 2],
    #[serde(default = "unit")]
    pub max: [f64; 2],
    /// Constant source term.
    #[serde(default = "one")]
    pub source: f64,
    pub solver_tol: Option<f64>,
    /// Finite-difference step for the derivative check, in units of h.
    pub fd_cells: Option<f64>,
}

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}
fn unit() -> [f64; 2] {
    [1.0, 1.0]
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerMathSpec {
    /// Angle for h(φ); defaults to π/2 − α.
    pub phi: Option<f64>,
    /// Arc radii for the non-convex test; default to the corner radius.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub gamma_resolution: Option<f64>,
}

/// A parsed and validated scene.
#[derive(Debug, Clone)]
pub struct Setup {
    pub graph: Graph,
    pub region: Option<Region>,
    pub lambda: f64,
    pub provenance: String,
    pub corner: Option<CornerParams>,
    pub file: SceneFile,
}

impl Setup {
    pub fn quad_h(&self) -> Option<f64> {
        self.file.measure.as_ref().and_then(|m| m.h)
    }
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn invalid(path: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Validation { path: path.to_string(), message: e.to_string() }
}

/// Parses and validates a scene document. Core errors raised while
/// building a named construction pass through unchanged.
pub fn parse_scene(text: &str) -> Result<Setup, CliError> {
    parse_scene_with(text, None)
}

/// As [`parse_scene`], with λ replaced before any construction is built.
pub fn parse_scene_with(text: &str, lambda: Option<f64>) -> Result<Setup, CliError> {
    let mut file: SceneFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if lambda.is_some() {
        file.lambda = lambda;
    }
    build(file)
}

fn build(file: SceneFile) -> Result<Setup, CliError> {
    let lambda = file.lambda;
    if let Some(l) = lambda {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(invalid("lambda", format!("must be finite and nonnegative, got {l}")));
        }
    }
    let need_lambda = || lambda.ok_or_else(|| invalid("lambda", "required by this construction"));
    if file.construction.is_some() && (file.graph.is_some() || file.region.is_some()) {
        return Err(invalid("construction", "cannot be combined with [graph] or [region]"));
    }
    let mut corner = None;
    let (graph, region, provenance) = match &file.construction {
        Some(c) => {
            let s = match *c {
                Construction::Circle { n_arc } => stationary_circle(need_lambda()?, n_arc)?,
                Construction::Stadium { length, n_edges } => stadium_domain(need_lambda()?, length, n_edges)?,
                Construction::Wedge { phi, arm_len, margin, n_per_arm } => {
                    wedge_set(phi, arm_len, margin, need_lambda()?, n_per_arm)?
                }
                Construction::Corner { radius, alpha, k, n_arc } => {
                    let p = CornerParams::new(need_lambda()?, radius, alpha, k)?;
                    corner = Some(p);
                    corner_domain(&p, n_arc)?
                }
            };
            (s.graph, Some(s.region), s.provenance)
        }
        None => {
            let graph = match &file.graph {
                Some(g) => {
                    let n = g.vertices.len();
                    if let Some(k) = g.edges.iter().position(|e| e[0] >= n || e[1] >= n) {
                        let e = g.edges[k];
                        return Err(invalid(
                            &format!("graph.edges[{k}]"),
                            format!("edge ({}, {}) references a vertex outside 0..{n}", e[0], e[1]),
                        ));
                    }
                    let verts = g.vertices.iter().map(|p| pt(*p)).collect();
                    let edges = g.edges.iter().map(|e| (e[0], e[1])).collect();
                    Graph::new(verts, edges).map_err(|e| invalid("graph", e))?
                }
                None => Graph::empty(),
            };
            let region = match &file.region {
                Some(r) => Some(
                    match r {
                        RegionSpec::Disk { center, radius } => Region::disk(pt(*center), *radius),
                        RegionSpec::Rectangle { min, max } => Region::rectangle(pt(*min), pt(*max)),
                        RegionSpec::Polygon { vertices } => Region::polygon(vertices.iter().map(|p| pt(*p)).collect()),
                    }
                    .map_err(|e| invalid("region", e))?,
                ),
                None => None,
            };
            if let Some(r) = &region {
                if let Some(v) = graph.vertices().iter().position(|p| !r.contains(*p)) {
                    return Err(invalid(&format!("graph.vertices[{v}]"), "lies outside the region"));
                }
            }
            (graph, region, "explicit".to_string())
        }
    };
    if let Some(m) = &file.measure {
        if let Some(h) = m.h {
            if !(h > 0.0) || !h.is_finite() {
                return Err(invalid("measure.h", format!("must be positive, got {h}")));
            }
        }
        if let Some(atoms) = &m.atoms {
            if let Some(i) = atoms.iter().position(|a| !(a[2] > 0.0) || !a.iter().all(|v| v.is_finite())) {
                return Err(invalid(&format!("measure.atoms[{i}]"), "weights must be positive and coordinates finite"));
            }
        }
        if m.levels == Some(0) {
            return Err(invalid("measure.levels", "must be at least 1"));
        }
    }
    if let Some(FieldSpec::Hat { vertex, .. }) = &file.field {
        if *vertex >= graph.vertex_count() {
            return Err(invalid("field.vertex", format!("{vertex} is not a vertex of Σ ({} vertices)", graph.vertex_count())));
        }
    }
    Ok(Setup { graph, region, lambda: lambda.unwrap_or(0.0), provenance, corner, file })
}

impl DescentSpec {
    pub fn config(&self) -> DescentConfig {
        let d = DescentConfig::default();
        DescentConfig {
            step0: self.step0.unwrap_or(d.step0),
            backtrack: self.backtrack.unwrap_or(d.backtrack),
            armijo: self.armijo.unwrap_or(d.armijo),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            resample_every: self.resample_every.unwrap_or(d.resample_every),
            target_edge_len: self.target_edge_len.unwrap_or(d.target_edge_len),
            stop_residual: self.stop_residual.unwrap_or(d.stop_residual),
            smoothing: self.smoothing.unwrap_or(d.smoothing),
            min_step: self.min_step.unwrap_or(d.min_step),
        }
    }
}

impl CornerMathSpec {
    pub fn phi_for(&self, p: &CornerParams) -> f64 {
        self.phi.unwrap_or(FRAC_PI_2 - p.alpha)
    }
}
