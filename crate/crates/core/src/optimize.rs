//! Steepest descent on vertex positions with fixed topology.

use crate::geometry::{EmbeddedGraph, Point2};
use crate::measure::QuadratureMeasure;
use crate::variation::{functional_value, shape_gradient};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct DescentConfig<T> {
    /// Largest vertex displacement of the first trial step.
    pub step0: T,
    /// Line-search shrink factor in (0, 1).
    pub backtrack: T,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: T,
    pub max_iters: usize,
    /// Resample every this many accepted steps; 0 disables resampling.
    pub resample_every: usize,
    pub target_edge_len: T,
    /// Stop once the hat residual (max gradient component) drops below.
    pub stop_residual: T,
    /// Weight σ of the smoothing preconditioner `(I + σL)d = −∇F`, L the
    /// graph Laplacian; 0 gives plain steepest descent.
    pub smoothing: T,
    /// Line search gives up once the largest trial displacement falls
    /// below this.
    pub min_step: T,
}

impl<T: Scalar> Default for DescentConfig<T> {
    fn default() -> Self {
        Self {
            step0: T::of(0.05),
            backtrack: T::of(0.5),
            armijo: T::of(1e-4),
            max_iters: 200,
            resample_every: 0,
            target_edge_len: T::of(0.01),
            stop_residual: T::of(1e-4),
            smoothing: T::zero(),
            min_step: T::of(1e-12),
        }
    }
}

impl<T: Scalar> DescentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let ok = self.step0 > z
            && self.backtrack > z
            && self.backtrack < T::one()
            && self.armijo > z
            && self.armijo < T::one()
            && self.max_iters > 0
            && self.target_edge_len > z
            && self.stop_residual >= z
            && self.smoothing >= z
            && self.min_step > z;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid descent configuration: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterate<T> {
    pub graph: EmbeddedGraph<T>,
    pub value: T,
    /// Hat residual: largest component of the shape gradient.
    pub residual_norm: T,
    /// Largest vertex displacement of the step that produced this iterate
    /// (0 for the seed and for resampling).
    pub step: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub iterates: Vec<Iterate<T>>,
    pub converged: bool,
    /// Why the run stopped early, if it did.
    pub diagnostic: Option<String>,
    pub evaluations: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &Iterate<T> {
        self.iterates.last().expect("trajectory holds the seed")
    }

    pub fn values(&self) -> Vec<T> {
        self.iterates.iter().map(|i| i.value).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.iterates.windows(2).all(|w| w[1].value <= w[0].value)
    }
}

fn max_component<T: Scalar>(v: &[Point2<T>]) -> T {
    v.iter().map(|p| p.x.abs().max(p.y.abs())).fold(T::zero(), |a, b| a.max(b))
}

fn max_norm<T: Scalar>(v: &[Point2<T>]) -> T {
    v.iter().map(|p| p.norm()).fold(T::zero(), |a, b| a.max(b))
}

/// Solves `(I + σL) d = rhs` by conjugate gradients; L is the
/// combinatorial graph Laplacian.
fn smooth<T: Scalar>(g: &EmbeddedGraph<T>, rhs: &[Point2<T>], sigma: T) -> Vec<Point2<T>> {
    if sigma == T::zero() {
        return rhs.to_vec();
    }
    let apply = |x: &[Point2<T>]| -> Vec<Point2<T>> {
        let mut y: Vec<Point2<T>> = x.to_vec();
        for &(a, b) in g.edges() {
            let d = (x[a] - x[b]) * sigma;
            y[a] += d;
            y[b] -= d;
        }
        y
    };
    let dot = |a: &[Point2<T>], b: &[Point2<T>]| a.iter().zip(b).fold(T::zero(), |s, (p, q)| s + p.dot(*q));
    let mut x = rhs.to_vec();
    let ax = apply(&x);
    let mut r: Vec<Point2<T>> = rhs.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = dot(rhs, rhs) * T::of(1e-24);
    for _ in 0..4 * rhs.len() + 10 {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
    }
    x
}

fn moved<T: Scalar>(g: &EmbeddedGraph<T>, d: &[Point2<T>], t: T) -> Option<EmbeddedGraph<T>> {
    g.with_vertices(g.vertices().iter().zip(d).map(|(p, v)| *p + *v * t).collect()).ok()
}

/// Armijo backtracking descent along the (optionally smoothed) negative
/// shape gradient. The measure is fixed for the whole run, so F is a
/// deterministic function of the vertex positions.
pub fn minimize<T: Scalar>(
    g0: &EmbeddedGraph<T>,
    mu: &QuadratureMeasure<T>,
    lambda: T,
    cfg: &DescentConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let mut g = g0.clone();
    let mut value = functional_value(&g, mu, lambda)?;
    let mut grad = shape_gradient(&g, mu, lambda)?;
    let mut evaluations = 1;
    let mut iterates = vec![Iterate { graph: g.clone(), value, residual_norm: max_component(&grad), step: T::zero() }];
    // line-search parameter in units of the search direction
    let mut t: Option<T> = None;
    let mut accepted = 0usize;
    let mut diagnostic = None;
    let mut converged = max_component(&grad) <= cfg.stop_residual;
    while !converged && accepted < cfg.max_iters {
        let neg: Vec<Point2<T>> = grad.iter().map(|v| -*v).collect();
        let d = smooth(&g, &neg, cfg.smoothing);
        let dmax = max_norm(&d);
        let slope = grad.iter().zip(&d).fold(T::zero(), |s, (a, b)| s + a.dot(*b));
        if !(dmax > T::zero()) || !(slope < T::zero()) {
            diagnostic = Some("search direction vanished".to_string());
            break;
        }
        let mut tt = t.unwrap_or(cfg.step0 / dmax);
        let found = loop {
            if tt * dmax < cfg.min_step {
                break None;
            }
            if let Some(trial) = moved(&g, &d, tt) {
                let v = functional_value(&trial, mu, lambda)?;
                evaluations += 1;
                if v <= value + cfg.armijo * tt * slope {
                    break Some((trial, v));
                }
            }
            tt = tt * cfg.backtrack;
        };
        let Some((next, v)) = found else {
            diagnostic = Some(format!("line search failed below step {}", cfg.min_step));
            break;
        };
        g = next;
        value = v;
        accepted += 1;
        // let the step grow back after a successful search
        t = Some(tt / cfg.backtrack);
        if cfg.resample_every > 0 && accepted.is_multiple_of(cfg.resample_every) {
            if let Ok(r) = resample(&g, cfg.target_edge_len) {
                let rv = functional_value(&r, mu, lambda)?;
                evaluations += 1;
                if rv <= value {
                    if r.vertex_count() != g.vertex_count() {
                        t = None;
                    }
                    g = r;
                    value = rv;
                }
            }
        }
        grad = shape_gradient(&g, mu, lambda)?;
        let residual_norm = max_component(&grad);
        iterates.push(Iterate { graph: g.clone(), value, residual_norm, step: tt * dmax });
        converged = residual_norm <= cfg.stop_residual;
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("stopped after {} iterations", cfg.max_iters));
    }
    Ok(Trajectory { iterates, converged, diagnostic, evaluations })
}

/// Re-divides every chain of degree-two vertices into edges of roughly
/// `target` length, placing the new vertices at equal arclength along the
/// old polyline. Endpoints and branch vertices keep their exact
/// positions. A chain is refined further if its length would change by
/// more than 0.1%.
pub fn resample<T: Scalar>(g: &EmbeddedGraph<T>, target: T) -> Result<EmbeddedGraph<T>> {
    if !(target > g.min_edge_len()) {
        return Err(Error::InvalidArgument(format!("target edge length {target} must exceed the minimum edge length")));
    }
    if g.edge_count() == 0 {
        return Ok(g.clone());
    }
    let n = g.vertex_count();
    let mut anchor: Vec<bool> = (0..n).map(|v| g.degree(v) != 2).collect();
    if !anchor.iter().any(|a| *a) {
        anchor[0] = true;
    }
    let mut index = vec![usize::MAX; n];
    let mut verts = Vec::new();
    for v in 0..n {
        if anchor[v] {
            index[v] = verts.len();
            verts.push(g.vertices()[v]);
        }
    }
    let mut edges = Vec::new();
    let mut seen = vec![false; g.edge_count()];
    for a in 0..n {
        if !anchor[a] {
            continue;
        }
        for &e0 in g.incident(a) {
            if seen[e0] {
                continue;
            }
            let mut path = vec![g.vertices()[a]];
            let (mut cur, mut e) = (a, e0);
            let end = loop {
                seen[e] = true;
                let next = g.other_end(e, cur);
                path.push(g.vertices()[next]);
                if anchor[next] {
                    break next;
                }
                e = *g.incident(next).iter().find(|&&f| f != e).expect("degree two");
                cur = next;
            };
            let inner = resample_chain(&path, target);
            let mut prev = index[a];
            for p in inner {
                verts.push(p);
                edges.push((prev, verts.len() - 1));
                prev = verts.len() - 1;
            }
            edges.push((prev, index[end]));
        }
    }
    EmbeddedGraph::with_min_edge_len(verts, edges, g.min_edge_len())
}

/// Interior points of the re-divided chain.
fn resample_chain<T: Scalar>(path: &[Point2<T>], target: T) -> Vec<Point2<T>> {
    let cum: Vec<T> = std::iter::once(T::zero())
        .chain(path.windows(2).scan(T::zero(), |s, w| {
            *s = *s + w[0].dist(w[1]);
            Some(*s)
        }))
        .collect();
    let total = *cum.last().expect("nonempty");
    let old_edges = path.len() - 1;
    let mut m = (total / target).round().to_usize().unwrap_or(1).max(1);
    loop {
        let mut pts = Vec::with_capacity(m.saturating_sub(1));
        let mut k = 0;
        for i in 1..m {
            let s = total * T::of(i as f64) / T::of(m as f64);
            while k + 1 < old_edges && cum[k + 1] < s {
                k += 1;
            }
            let seg = cum[k + 1] - cum[k];
            let w = if seg > T::zero() { ((s - cum[k]) / seg).max(T::zero()).min(T::one()) } else { T::zero() };
            pts.push(path[k].lerp(path[k + 1], w));
        }
        let mut len = T::zero();
        let mut prev = path[0];
        for p in pts.iter().chain(std::iter::once(&path[old_edges])) {
            len = len + prev.dist(*p);
            prev = *p;
        }
        if (total - len).abs() <= T::of(1e-3) * total || m >= 64 * old_edges.max(1) {
            return pts;
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::from_points;
    use approx::assert_relative_eq;

    type P = Point2<f64>;

    #[test]
    fn resample_segment() {
        let g = EmbeddedGraph::new(vec![P::new(0.0, 0.0), P::new(1.0, 0.0)], vec![(0, 1)]).unwrap();
        let r = resample(&g, 0.1).unwrap();
        assert_eq!(r.edge_count(), 10);
        assert_eq!(r.vertices()[0], P::new(0.0, 0.0));
        assert_eq!(r.vertices()[1], P::new(1.0, 0.0));
        assert_relative_eq!(r.length(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn resample_polygon_is_identity() {
        let g = EmbeddedGraph::regular_polygon(P::zero(), 0.5, 512).unwrap();
        let r = resample(&g, g.edge_length(0)).unwrap();
        assert_eq!(r.vertex_count(), 512);
        for (a, b) in g.vertices().iter().zip(r.vertices()) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    #[test]
    fn resample_keeps_branch_vertex() {
        let c = P::new(0.1234, -0.05);
        let g = EmbeddedGraph::new(
            vec![c, P::new(1.0, 0.0), P::new(-0.5, 0.8), P::new(-0.5, -0.8)],
            vec![(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        let r = resample(&g, 0.07).unwrap();
        let hub = r.vertices().iter().position(|p| *p == c).unwrap();
        assert_eq!(r.degree(hub), 3);
        assert!((r.length() - g.length()).abs() <= 1e-3 * g.length());
    }

    #[test]
    fn endpoint_moves_toward_atom() {
        let g = EmbeddedGraph::polyline(vec![P::new(0.0, 0.0), P::new(0.5, 0.0), P::new(1.0, 0.0)], false).unwrap();
        let mu = from_points(&[(P::new(3.0, 0.0), 1.0)]).unwrap();
        let cfg = DescentConfig { max_iters: 30, ..DescentConfig::default() };
        let t = minimize(&g, &mu, 0.3, &cfg).unwrap();
        assert!(t.is_monotone());
        let end = t.last();
        assert!(end.value < t.iterates[0].value);
        assert!(end.graph.vertices()[2].x > 1.0);
    }

    #[test]
    fn bad_config() {
        let g = EmbeddedGraph::new(vec![P::new(0.0, 0.0), P::new(1.0, 0.0)], vec![(0, 1)]).unwrap();
        let mu = from_points(&[(P::new(3.0, 0.0), 1.0)]).unwrap();
        let cfg = DescentConfig { backtrack: 1.0, ..DescentConfig::default() };
        assert!(minimize(&g, &mu, 0.3, &cfg).is_err());
    }
}
