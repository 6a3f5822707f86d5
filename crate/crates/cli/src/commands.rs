//! The experiment verbs.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use adf_core::compliance::{
    compliance_integral, compliance_value, dual_gap, fd_compliance_oracle, normal_jump, shape_derivative, Grid,
    GridPoissonProblem, GridSolution,
};
use adf_core::constructions::{corner_nonstationary_test, gamma_threshold, h_of_phi, h_of_phi_closed_form};
use adf_core::measure::{discretize_region, from_points};
use adf_core::optimize::minimize;
use adf_core::variation::{
    default_tolerance, fd_variation_oracle, first_variation, length_rate, loop_cut_probe, shape_gradient, slope_probe,
    stationarity_residual, Basis,
};
use adf_core::{Field, Graph, Measure, Point, Region};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

use crate::report::{digest, Inputs, RunReport, Timing};
use crate::scene::{parse_scene_with, Construction, FieldSpec, Setup};
use crate::svg::{Figure, Overlay};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Functional value with a refinement table.
    Eval,
    /// First variation along one field, with a finite-difference check.
    Variation,
    /// Stationarity residual on the hat basis across refinement levels.
    Check,
    /// Steepest descent from the scene's network.
    Optimize,
    /// Spike difference quotients.
    Slope,
    /// Loop-cut difference quotients.
    Loopcut,
    /// Scalar quantities of the curved corner.
    CornerMath,
    /// Grid Poisson solve and compliance with Richardson extrapolation.
    ComplianceSolve,
    /// Jump-formula shape derivative of the compliance, against finite differences.
    ComplianceDerivative,
}

impl Verb {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub lambda: Option<f64>,
    pub quad_h: Option<f64>,
    pub tol: Option<f64>,
}

/// What a verb hands back before it is wrapped into a report.
struct Outcome {
    results: Map<String, Value>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    warnings: Vec<String>,
    overlays: Vec<Overlay>,
    /// Replaces the scene network in the figure.
    graph: Option<Graph>,
    region: Option<Region>,
}

impl Outcome {
    fn new(columns: Vec<&'static str>) -> Self {
        Self { results: Map::new(), columns, rows: Vec::new(), warnings: Vec::new(), overlays: Vec::new(), graph: None, region: None }
    }

    fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }
}

fn invalid(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Validation { path: path.to_string(), message: msg.into() }
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn pj(p: Point) -> Value {
    json!([p.x, p.y])
}

/// Parses the scene, runs `verb` and returns the report with its figure.
pub fn run_command(verb: Verb, scene_path: &str, scene_text: &str, opts: &Options) -> Result<(RunReport, Figure), CliError> {
    let t0 = Instant::now();
    let setup = parse_scene_with(scene_text, opts.lambda)?;
    let out = match verb {
        Verb::Eval => eval(&setup, opts)?,
        Verb::Variation => variation(&setup, opts)?,
        Verb::Check => check(&setup, opts)?,
        Verb::Optimize => optimize(&setup, opts)?,
        Verb::Slope => slope(&setup, opts)?,
        Verb::Loopcut => loopcut(&setup, opts)?,
        Verb::CornerMath => corner_math(&setup)?,
        Verb::ComplianceSolve => compliance_solve(&setup, opts)?,
        Verb::ComplianceDerivative => compliance_derivative(&setup, opts)?,
    };
    let refinement = out
        .rows
        .iter()
        .map(|r| out.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect())
        .collect();
    let report = RunReport {
        command: verb.name(),
        inputs: Inputs {
            scene_path: scene_path.to_string(),
            scene_sha256: digest(scene_text.as_bytes()),
            provenance: setup.provenance.clone(),
            lambda: setup.lambda,
            quad_h: opts.quad_h.or(setup.quad_h()),
            tol: opts.tol,
        },
        results: out.results,
        columns: out.columns.iter().map(|c| c.to_string()).collect(),
        refinement,
        warnings: out.warnings,
        timing: Timing { seconds: t0.elapsed().as_secs_f64() },
    };
    let figure = Figure {
        region: out.region.or(setup.region.clone()),
        graph: out.graph.unwrap_or(setup.graph),
        overlays: out.overlays,
    };
    Ok((report, figure))
}

fn need_graph(s: &Setup) -> Result<(), CliError> {
    if s.graph.edge_count() == 0 {
        return Err(invalid("graph", "this command needs a network with at least one edge"));
    }
    Ok(())
}

/// Quadrature sizes from coarse to fine, ending at the base size.
fn ladder(s: &Setup, opts: &Options) -> Result<Vec<Option<f64>>, CliError> {
    let m = s.file.measure.clone().unwrap_or_default();
    if m.atoms.is_some() {
        return Ok(vec![None]);
    }
    let h = opts.quad_h.or(m.h).ok_or_else(|| invalid("measure.h", "no quadrature size (set measure.h or --quad-h)"))?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("quad-h", format!("must be positive, got {h}")));
    }
    let levels = m.levels.unwrap_or(3);
    Ok((0..levels).rev().map(|k| Some(h * 2f64.powi(k as i32))).collect())
}

fn measure(s: &Setup, h: Option<f64>) -> Result<Measure, CliError> {
    if let Some(atoms) = s.file.measure.as_ref().and_then(|m| m.atoms.as_ref()) {
        let pts: Vec<(Point, f64)> = atoms.iter().map(|a| (Point::new(a[0], a[1]), a[2])).collect();
        return Ok(from_points(&pts)?);
    }
    let region = s.region.as_ref().ok_or_else(|| invalid("region", "a region (or measure.atoms) is required"))?;
    let h = h.ok_or_else(|| invalid("measure.h", "no quadrature size"))?;
    Ok(discretize_region(region, h)?)
}

fn finest(s: &Setup, opts: &Options) -> Result<(Option<f64>, Measure), CliError> {
    let h = *ladder(s, opts)?.last().expect("nonempty ladder");
    Ok((h, measure(s, h)?))
}

fn n_arc(s: &Setup) -> usize {
    match s.file.construction {
        Some(Construction::Circle { n_arc }) | Some(Construction::Corner { n_arc, .. }) => n_arc,
        _ => s.graph.edge_count().max(1),
    }
}

fn tolerance(s: &Setup, opts: &Options, h: Option<f64>) -> f64 {
    opts.tol
        .or(s.file.tolerances.as_ref().and_then(|t| t.stationarity))
        .unwrap_or_else(|| default_tolerance(h.unwrap_or(0.0), n_arc(s)))
}

fn field(s: &Setup) -> Result<Field, CliError> {
    let g = &s.graph;
    Ok(match &s.file.field {
        Some(FieldSpec::Radial { center }) => Field::radial(g, pt(*center))?,
        Some(FieldSpec::Constant { value }) => Field::constant(g, pt(*value)),
        Some(FieldSpec::Hat { vertex, direction }) => Field::hat(g, *vertex, pt(*direction))?,
        None => {
            let bb = g.bounding_box().ok_or_else(|| invalid("graph", "empty network"))?;
            Field::radial(g, (bb.min + bb.max) * 0.5)?
        }
    })
}

fn sample_points(region: &Region, n: usize) -> Vec<Point> {
    let bb = region.bounding_box();
    let (w, h) = (bb.width(), bb.height());
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let p = Point::new(bb.min.x + w * (i as f64 + 0.5) / n as f64, bb.min.y + h * (j as f64 + 0.5) / n as f64);
            if region.contains(p) {
                out.push(p);
            }
        }
    }
    out
}

/// Projection quiver on a coarse grid and ridge samples on a fine one.
fn projection_overlays(s: &Setup) -> Vec<Overlay> {
    let (Some(region), false) = (&s.region, s.graph.is_empty()) else { return Vec::new() };
    let tol = s.graph.default_ridge_tol();
    let quiver = sample_points(region, 18)
        .into_iter()
        .filter_map(|x| s.graph.nearest(x, tol).map(|n| (x, n.foot)))
        .collect();
    // the ridge is where the nearest foot jumps; a fine polygon also has
    // ties at every vertex, which move the foot by less than an edge
    let n = 160;
    let bb = region.bounding_box();
    let (dx, dy) = (bb.width() / n as f64, bb.height() / n as f64);
    let jump = 8.0 * dx.max(dy);
    let foot = |x: Point| s.graph.nearest(x, tol).map(|m| m.foot);
    let ridge = sample_points(region, n)
        .into_iter()
        .filter(|&x| {
            let Some(f) = foot(x) else { return false };
            [Point::new(dx, 0.0), Point::new(0.0, dy)]
                .iter()
                .any(|&d| foot(x + d).is_some_and(|g| g.dist(f) > jump))
        })
        .collect();
    vec![Overlay::Quiver(quiver), Overlay::Ridge(ridge), Overlay::Curvature]
}

fn eval(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let mut o = Outcome::new(vec!["h", "samples", "mass", "average_distance", "functional"]);
    let mut last = None;
    for h in ladder(s, opts)? {
        let mu = measure(s, h)?;
        let avg = adf_core::variation::average_distance(&s.graph, &mu)?;
        let f = avg + s.lambda * s.graph.length();
        o.rows.push(vec![json!(h), json!(mu.len()), json!(mu.total_mass()), json!(avg), json!(f)]);
        if mu.is_atomic() && o.warnings.is_empty() {
            o.warnings.push("measure has atoms; first-variation results are not necessary conditions".into());
        }
        last = Some((avg, f, mu));
    }
    let (avg, f, mu) = last.expect("nonempty ladder");
    o.set("functional", f);
    o.set("average_distance", avg);
    o.set("length", s.graph.length());
    o.set("samples", mu.len());
    o.set("mass", mu.total_mass());
    o.overlays = projection_overlays(s);
    Ok(o)
}

fn variation(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let x = field(s)?;
    let mut o = Outcome::new(vec!["h", "samples", "integral_term", "curvature_term", "total"]);
    for h in ladder(s, opts)? {
        let mu = measure(s, h)?;
        let r = first_variation(&s.graph, &mu, s.lambda, &x)?;
        o.rows.push(vec![json!(h), json!(mu.len()), json!(r.integral_term), json!(r.curvature_term), json!(r.total)]);
    }
    let (_, mu) = finest(s, opts)?;
    let r = first_variation(&s.graph, &mu, s.lambda, &x)?;
    o.set("integral_term", r.integral_term);
    o.set("curvature_term", r.curvature_term);
    o.set("total", r.total);
    o.set("length_rate", length_rate(&s.graph, &x)?);
    let step = s.file.tolerances.as_ref().and_then(|t| t.fd_step).unwrap_or(1e-5) * s.graph.diameter();
    let fd = fd_variation_oracle(&s.graph, &mu, s.lambda, &x, step)?;
    let on_kept = first_variation(&s.graph, &fd.kept, s.lambda, &x)?.total;
    o.set("fd_step", step);
    o.set("fd_value", fd.value);
    o.set("fd_excluded_mass", fd.excluded_mass);
    o.set("analytic_on_kept", on_kept);
    o.set("fd_relative_error", (fd.value - on_kept).abs() / on_kept.abs().max(1e-12));
    o.warnings.extend(r.warnings);
    o.overlays = vec![
        Overlay::Arrows(s.graph.vertices().iter().copied().zip(x.values().iter().copied()).collect()),
        Overlay::Curvature,
    ];
    Ok(o)
}

fn check(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let mut o = Outcome::new(vec!["h", "samples", "residual_norm", "tolerance", "verdict"]);
    let mut last = None;
    for h in ladder(s, opts)? {
        let mu = measure(s, h)?;
        let tol = tolerance(s, opts, h);
        let r = stationarity_residual(&s.graph, &mu, s.lambda, &Basis::Hat, tol)?;
        let verdict = r.verdict.map(|v| v.to_string()).unwrap_or_default();
        o.rows.push(vec![json!(h), json!(mu.len()), json!(r.residual_norm), json!(tol), json!(verdict)]);
        last = Some((r, mu));
    }
    let (r, mu) = last.expect("nonempty ladder");
    let norms: Vec<f64> = o.rows.iter().filter_map(|r| r[2].as_f64()).collect();
    o.set("residual_norm", r.residual_norm);
    o.set("tolerance", r.tolerance.unwrap_or(0.0));
    o.set("verdict", r.verdict.map(|v| v.to_string()).unwrap_or_default());
    o.set("decreasing_under_refinement", norms.windows(2).all(|w| w[1] < w[0]));
    o.warnings.extend(r.warnings);
    let grad = shape_gradient(&s.graph, &mu, s.lambda)?;
    o.overlays = vec![
        Overlay::Arrows(s.graph.vertices().iter().copied().zip(grad.iter().map(|g| -*g)).collect()),
        Overlay::Curvature,
    ];
    Ok(o)
}

fn optimize(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let (_, mu) = finest(s, opts)?;
    let mut cfg = s.file.descent.clone().unwrap_or_default().config();
    if let Some(t) = opts.tol {
        cfg.stop_residual = t;
    }
    let t = minimize(&s.graph, &mu, s.lambda, &cfg)?;
    let mut o = Outcome::new(vec!["iteration", "value", "residual_norm", "step", "vertices"]);
    for (k, it) in t.iterates.iter().enumerate() {
        o.rows.push(vec![json!(k), json!(it.value), json!(it.residual_norm), json!(it.step), json!(it.graph.vertex_count())]);
    }
    let last = t.last();
    let c = last.graph.vertices().iter().fold(Point::zero(), |a, p| a + *p) / last.graph.vertex_count() as f64;
    let radii: Vec<f64> = last.graph.vertices().iter().map(|p| p.dist(c)).collect();
    o.set("initial_value", t.iterates[0].value);
    o.set("final_value", last.value);
    o.set("residual_norm", last.residual_norm);
    o.set("iterations", t.iterates.len() - 1);
    o.set("evaluations", t.evaluations);
    o.set("converged", t.converged);
    o.set("monotone", t.is_monotone());
    o.set("diagnostic", t.diagnostic.clone());
    o.set("centroid", pj(c));
    o.set("mean_radius_about_centroid", radii.iter().sum::<f64>() / radii.len() as f64);
    o.set("final_vertices", Value::Array(last.graph.vertices().iter().map(|p| pj(*p)).collect()));
    o.overlays = vec![Overlay::Ghost(s.graph.clone()), Overlay::Curvature];
    o.graph = Some(last.graph.clone());
    Ok(o)
}

const DEFAULT_SPIKES: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];

fn slope(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let p = s.file.probe.clone().unwrap_or_default();
    let attach = p.attach.ok_or_else(|| invalid("probe.attach", "required for slope"))?;
    let dir = p.direction.ok_or_else(|| invalid("probe.direction", "required for slope"))?;
    let eps = p.eps.unwrap_or_else(|| DEFAULT_SPIKES.to_vec());
    let (_, mu) = finest(s, opts)?;
    let r = slope_probe(&s.graph, &mu, s.lambda, pt(attach), pt(dir), &eps)?;
    let mut o = Outcome::new(vec!["eps", "ratio"]);
    o.rows = r.ratios.iter().map(|(e, q)| vec![json!(e), json!(q)]).collect();
    o.set("extrapolated_limit", r.limit);
    o.set("lambda", s.lambda);
    o.set("relative_gap", (r.limit - s.lambda).abs() / s.lambda.max(1e-300));
    let d = pt(dir).normalized().unwrap_or(Point::zero());
    o.overlays = vec![Overlay::Arrows(vec![(pt(attach), d * eps[0])])];
    Ok(o)
}

fn loopcut(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let p = s.file.probe.clone().unwrap_or_default();
    let v = p.vertex.unwrap_or(0);
    let eps = p.eps.unwrap_or_else(|| vec![0.08, 0.04, 0.02]);
    let (_, mu) = finest(s, opts)?;
    let d = loop_cut_probe(&s.graph, &mu, s.lambda, v, &eps)?;
    let mut o = Outcome::new(vec!["eps", "delta_f", "ratio"]);
    o.rows = d.iter().map(|(e, df)| vec![json!(e), json!(df), json!(df / e)]).collect();
    let (e, df) = *d.last().expect("nonempty eps list");
    o.set("last_ratio", df / e);
    o.set("minus_lambda", -s.lambda);
    o.set("improves", d.iter().all(|(_, df)| *df < 0.0));
    Ok(o)
}

fn corner_math(s: &Setup) -> Result<Outcome, CliError> {
    let p = s.corner.ok_or_else(|| invalid("construction", "corner-math needs kind = \"corner\""))?;
    let m = s.file.corner_math.clone().unwrap_or_default();
    let phi = m.phi_for(&p);
    let res = m.gamma_resolution.unwrap_or(1e-3);
    let mut o = Outcome::new(vec!["gamma", "g"]);
    o.set("b", p.b());
    o.set("r", p.r());
    o.set("phi_of_alpha", FRAC_PI_2 - p.alpha);
    o.set("f_alpha", p.f(p.alpha));
    o.set("radius_plus_b", p.radius + p.b());
    o.set("rect_height", p.h()?);
    o.set("phi", phi);
    o.set("h_phi", h_of_phi(phi)?);
    o.set("h_phi_closed_form", h_of_phi_closed_form(phi)?);
    let t = corner_nonstationary_test(p.lambda, m.r1.unwrap_or(p.radius), m.r2.unwrap_or(p.radius), phi)?;
    o.set("nonconvex_ratio", t.ratio);
    o.set("nonconvex_nonstationary", t.non_stationary);
    let g = gamma_threshold(res)?;
    o.set("gamma_roots", g.roots.clone());
    o.set("gamma_summary", g.summary.clone());
    o.rows = g.profile.iter().map(|(a, v)| vec![json!(a), json!(v)]).collect();
    o.overlays = vec![Overlay::Curvature];
    Ok(o)
}

struct CompSetup {
    grid: Grid,
    source: f64,
    tol: f64,
    fd_cells: f64,
}

fn comp_setup(s: &Setup, opts: &Options) -> Result<CompSetup, CliError> {
    let c = s.file.compliance.clone().ok_or_else(|| invalid("compliance", "a [compliance] table is required"))?;
    let grid = Grid::new(pt(c.min), pt(c.max), c.h).map_err(|e| invalid("compliance.h", e.to_string()))?;
    let tol = opts.tol.or(c.solver_tol).unwrap_or(1e-10);
    Ok(CompSetup { grid, source: c.source, tol, fd_cells: c.fd_cells.unwrap_or(2.0) })
}

fn solve(grid: Grid, source: f64, g: &Graph, tol: f64) -> Result<(GridPoissonProblem, GridSolution), CliError> {
    let p = GridPoissonProblem::with_source(grid, |_| source, g)?;
    let sol = adf_core::compliance::solve_poisson(&p, tol)?;
    Ok((p, sol))
}

fn grid_region(grid: &Grid) -> Option<Region> {
    Region::rectangle(grid.min, grid.max()).ok()
}

fn compliance_solve(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    let c = comp_setup(s, opts)?;
    let mut o = Outcome::new(vec!["h", "compliance", "iterations", "residual", "dual_gap"]);
    let mut levels = vec![c.grid];
    if c.grid.nx % 2 == 0 && c.grid.ny % 2 == 0 && c.grid.nx >= 4 && c.grid.ny >= 4 {
        let coarse = Grid::new(c.grid.min, c.grid.max(), 2.0 * c.grid.h)?;
        levels.insert(0, coarse);
    } else {
        o.warnings.push("grid cannot be coarsened by two; no Richardson extrapolation".into());
    }
    let mut vals = Vec::new();
    let mut fine = None;
    for grid in levels {
        let (p, sol) = solve(grid, c.source, &s.graph, c.tol)?;
        let ci = compliance_integral(&sol, &p);
        let gap = dual_gap(&sol.u, &p);
        o.rows.push(vec![json!(grid.h), json!(ci), json!(sol.iterations), json!(sol.residual), json!(gap)]);
        vals.push(ci);
        fine = Some((p, sol, gap));
    }
    let (p, sol, gap) = fine.expect("at least one level");
    o.set("compliance", *vals.last().unwrap());
    o.set("compliance_with_length", compliance_value(&sol, &p, s.lambda, &s.graph));
    if vals.len() == 2 {
        o.set("richardson", (4.0 * vals[1] - vals[0]) / 3.0);
    }
    o.set("residual", sol.residual);
    o.set("iterations", sol.iterations);
    o.set("dual_gap", gap);
    o.set("solver_tol", c.tol);
    o.set("max_u", sol.u.iter().copied().fold(0.0, f64::max));
    o.set("free_nodes", p.free_count());
    o.region = grid_region(&c.grid);
    Ok(o)
}

fn compliance_derivative(s: &Setup, opts: &Options) -> Result<Outcome, CliError> {
    need_graph(s)?;
    let c = comp_setup(s, opts)?;
    let x = match &s.file.field {
        Some(_) => field(s)?,
        None => Field::constant(&s.graph, Point::new(0.0, 1.0)),
    };
    let (p, sol) = solve(c.grid, c.source, &s.graph, c.tol)?;
    let d = shape_derivative(&sol, &p, &s.graph, s.lambda, &x)?;
    let eps = c.fd_cells * c.grid.h;
    let fd = fd_compliance_oracle(&c.grid, &p.f, &s.graph, s.lambda, &x, eps, c.tol)?;
    let mut o = Outcome::new(vec!["edge", "s", "jump"]);
    for e in 0..s.graph.edge_count() {
        let n = ((s.graph.edge_length(e) / c.grid.h).round() as usize).max(1);
        for (arc, j) in normal_jump(&sol, &p, &s.graph, e, n)? {
            o.rows.push(vec![json!(e), json!(arc), json!(j)]);
        }
    }
    let rel = (d.total - fd.value).abs() / fd.value.abs().max(1e-300);
    o.set("pde_term", d.pde_term);
    o.set("curvature_term", d.curvature_term);
    o.set("total", d.total);
    o.set("fd_eps", eps);
    o.set("fd_value", fd.value);
    o.set("fd_half_step", fd.half_step);
    o.set("fd_noise", fd.noise);
    o.set("relative_difference", rel);
    o.region = grid_region(&c.grid);
    o.overlays = vec![Overlay::Arrows(s.graph.vertices().iter().copied().zip(x.values().iter().copied()).collect())];
    Ok(o)
}
