//! Planar graphs Σ, nearest-point projection and arc helpers.

use std::collections::HashSet;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::{Error, Result, Scalar};

/// Default minimum edge length accepted by [`EmbeddedGraph::new`].
pub const DEFAULT_MIN_EDGE_LEN: f64 = 1e-9;

/// Relative ridge tolerance: the absolute tolerance is this times the
/// diameter of the graph's bounding box.
pub const DEFAULT_RIDGE_TOL_REL: f64 = 1e-7;

/// A point (or vector) of the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at angle `theta` from the positive x axis.
    #[inline]
    pub fn polar(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(U::of(self.x.to_f64_lossy()), U::of(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> AddAssign for Point2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> SubAssign for Point2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Div<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Point2<T>,
    pub max: Point2<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn from_points(pts: impl IntoIterator<Item = Point2<T>>) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut b = Self { min: first, max: first };
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point2<T>) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(self, o: Self) -> Self {
        let mut b = self;
        b.include(o.min);
        b.include(o.max);
        b
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> T {
        (self.max - self.min).norm()
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn dist_sq(&self, p: Point2<T>) -> T {
        let z = T::zero();
        let dx = (self.min.x - p.x).max(z).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(z).max(p.y - self.max.y);
        dx * dx + dy * dy
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Closest point on the segment `a`–`b` to `x`: `(param, foot, distance)`.
#[inline]
pub fn project_on_segment<T: Scalar>(x: Point2<T>, a: Point2<T>, b: Point2<T>) -> (T, Point2<T>, T) {
    let d = b - a;
    let len_sq = d.norm_sq();
    let t = if len_sq > T::zero() {
        ((x - a).dot(d) / len_sq).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let foot = if t == T::one() { b } else { a + d * t };
    (t, foot, x.dist(foot))
}

/// Connected planar graph Σ with straight edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedGraph<T> {
    vertices: Vec<Point2<T>>,
    edges: Vec<(usize, usize)>,
    incidence: Vec<Vec<usize>>,
    boxes: Vec<Aabb<T>>,
    min_edge_len: T,
}

impl<T: Scalar> EmbeddedGraph<T> {
    /// Validates with the default minimum edge length.
    pub fn new(vertices: Vec<Point2<T>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_min_edge_len(vertices, edges, T::of(DEFAULT_MIN_EDGE_LEN))
    }

    /// The empty set. Only meaningful as the "no crack" case of the
    /// compliance problem; projection onto it is an error.
    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            edges: Vec::new(),
            incidence: Vec::new(),
            boxes: Vec::new(),
            min_edge_len: T::of(DEFAULT_MIN_EDGE_LEN),
        }
    }

    pub fn with_min_edge_len(vertices: Vec<Point2<T>>, edges: Vec<(usize, usize)>, min_edge_len: T) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGraph(format!("vertex {i} has a non-finite coordinate")));
        }
        let n = vertices.len();
        let mut incidence = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} = ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("edge {k} is a self-loop at vertex {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("edge {k} = ({i}, {j}) is a duplicate")));
            }
            let len = vertices[i].dist(vertices[j]);
            if len < min_edge_len {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} = ({i}, {j}) has length {len} below the minimum {min_edge_len}"
                )));
            }
            incidence[i].push(k);
            incidence[j].push(k);
        }
        if n > 0 && !is_connected(n, &edges) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        let boxes = edges
            .iter()
            .map(|&(i, j)| Aabb::from_points([vertices[i], vertices[j]]).expect("two points"))
            .collect();
        Ok(Self { vertices, edges, incidence, boxes, min_edge_len })
    }

    /// Open chain through `points` (closed when `closed` is set).
    pub fn polyline(points: Vec<Point2<T>>, closed: bool) -> Result<Self> {
        let n = points.len();
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        if closed && n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::new(points, edges)
    }

    /// Regular `n`-gon inscribed in the circle of the given radius, first
    /// vertex on the positive x axis.
    pub fn regular_polygon(center: Point2<T>, radius: T, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("a polygon needs at least 3 vertices, got {n}")));
        }
        let step = T::TAU() / T::of(n as f64);
        let pts = (0..n).map(|k| center + Point2::polar(step * T::of(k as f64)) * radius).collect();
        Self::polyline(pts, true)
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge ids incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    /// Endpoint of edge `e` opposite to `v`.
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn edge_points(&self, e: usize) -> (Point2<T>, Point2<T>) {
        let (a, b) = self.edges[e];
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, e: usize) -> T {
        let (a, b) = self.edge_points(e);
        a.dist(b)
    }

    pub fn min_edge_len(&self) -> T {
        self.min_edge_len
    }

    /// Point at parameter `t` along edge `e`.
    pub fn point_on_edge(&self, e: usize, t: T) -> Point2<T> {
        let (a, b) = self.edge_points(e);
        a.lerp(b, t)
    }

    pub fn bounding_box(&self) -> Option<Aabb<T>> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Diagonal of the bounding box; zero for the empty graph.
    pub fn diameter(&self) -> T {
        self.bounding_box().map_or(T::zero(), |b| b.diagonal())
    }

    pub fn default_ridge_tol(&self) -> T {
        T::of(DEFAULT_RIDGE_TOL_REL) * self.diameter()
    }

    /// Same connectivity, new positions (revalidated).
    pub fn with_vertices(&self, vertices: Vec<Point2<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Self::with_min_edge_len(vertices, self.edges.clone(), self.min_edge_len)
    }

    pub fn map_vertices(&self, f: impl Fn(Point2<T>) -> Point2<T>) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(|&p| f(p)).collect())
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddedGraph<U> {
        EmbeddedGraph::with_min_edge_len(
            self.vertices.iter().map(|p| p.cast()).collect(),
            self.edges.clone(),
            U::of(self.min_edge_len.to_f64_lossy()),
        )
        .expect("casting preserves validity")
    }

    /// H¹(Σ): sum of edge lengths.
    pub fn length(&self) -> T {
        (0..self.edges.len()).map(|e| self.edge_length(e)).fold(T::zero(), |a, b| a + b)
    }

    /// Whether `v` lies on a cycle, i.e. some incident edge is not a bridge.
    pub fn on_cycle(&self, v: usize) -> bool {
        self.incidence[v].iter().any(|&e| {
            // edge e lies on a cycle iff its endpoints stay connected without it
            let (a, b) = self.edges[e];
            connected_without(self.vertices.len(), &self.edges, e, a, b)
        })
    }

    /// Projection of `x` with ridge bookkeeping (full scan over edges).
    pub fn project(&self, x: Point2<T>, ridge_tol: T) -> Result<ProjectionResult<T>> {
        project(x, self, ridge_tol)
    }

    /// Nearest point only. Uses a bounding-box prefilter; the foot is
    /// chosen with the same tie-breaking rule as [`project`].
    pub fn nearest(&self, x: Point2<T>, ridge_tol: T) -> Option<Nearest<T>> {
        let mut best = T::infinity();
        let mut cands: Vec<Nearest<T>> = Vec::new();
        let window = |d: T| d + ridge_tol * (T::one() + d);
        for (e, bb) in self.boxes.iter().enumerate() {
            if bb.dist_sq(x) > window(best).powi(2) {
                continue;
            }
            let (a, b) = self.edge_points(e);
            let (t, foot, d) = project_on_segment(x, a, b);
            if d <= window(best) {
                cands.push(Nearest { edge: e, param: t, foot, distance: d });
                best = best.min(d);
            }
        }
        let limit = window(best);
        cands.into_iter().find(|c| c.distance <= limit)
    }

    /// dist(x, Σ).
    pub fn distance(&self, x: Point2<T>) -> T {
        let mut best = T::infinity();
        for (e, bb) in self.boxes.iter().enumerate() {
            if bb.dist_sq(x) > best * best {
                continue;
            }
            let (a, b) = self.edge_points(e);
            best = best.min(project_on_segment(x, a, b).2);
        }
        best
    }
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut comps = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            comps -= 1;
        }
    }
    comps == 1
}

fn connected_without(n: usize, edges: &[(usize, usize)], skip: usize, from: usize, to: usize) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (k, &(a, b)) in edges.iter().enumerate() {
        if k != skip {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Nearest foot on Σ without ridge bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest<T> {
    pub edge: usize,
    pub param: T,
    pub foot: Point2<T>,
    pub distance: T,
}

/// Nearest-point projection π^Σ(x) together with ridge information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionResult<T> {
    pub edge_id: usize,
    pub param: T,
    pub foot: Point2<T>,
    pub distance: T,
    /// `(foot − x)/|foot − x|`; `None` when `x` lies on Σ.
    pub direction: Option<Point2<T>>,
    /// Number of distinct nearest feet; above one on the ridge set.
    pub multiplicity: usize,
    /// Gap between the second-best local minimum of the distance along Σ
    /// and the best one (infinite when the minimum is the only one).
    pub margin: T,
}

impl<T: Scalar> ProjectionResult<T> {
    pub fn on_ridge(&self) -> bool {
        self.multiplicity > 1
    }
}

#[derive(Clone, Copy)]
struct Hit<T> {
    edge: usize,
    param: T,
    foot: Point2<T>,
    distance: T,
}

/// Exact nearest-point projection of `x` onto `g`.
///
/// Every edge is visited. Per-edge feet are reduced to the local minima of
/// the distance along Σ (interior feet, plus vertices at which every
/// incident edge clamps), which drive `multiplicity` and `margin`.
pub fn project<T: Scalar>(x: Point2<T>, g: &EmbeddedGraph<T>, ridge_tol: T) -> Result<ProjectionResult<T>> {
    if !(ridge_tol >= T::zero()) {
        return Err(Error::InvalidArgument(format!("ridge_tol must be nonnegative, got {ridge_tol}")));
    }
    if g.edges.is_empty() {
        return Err(Error::InvalidGraph("projection onto a graph without edges".into()));
    }
    let hits: Vec<Hit<T>> = (0..g.edges.len())
        .map(|e| {
            let (a, b) = g.edge_points(e);
            let (param, foot, distance) = project_on_segment(x, a, b);
            Hit { edge: e, param, foot, distance }
        })
        .collect();
    let best = hits.iter().map(|h| h.distance).fold(T::infinity(), T::min);
    let tol = ridge_tol * (T::one() + best);
    // hits are in edge order and each edge has one param: first within tol wins
    let chosen = *hits.iter().find(|h| h.distance <= best + tol).expect("nonempty");

    let (zero, one) = (T::zero(), T::one());
    let clamps_at = |h: &Hit<T>, v: usize| {
        let (a, b) = g.edges[h.edge];
        (a == v && h.param == zero) || (b == v && h.param == one)
    };
    let mut minima: Vec<Hit<T>> = Vec::new();
    let mut vertex_done = vec![false; g.vertices.len()];
    for h in &hits {
        if h.param > zero && h.param < one {
            minima.push(*h);
            continue;
        }
        let (a, b) = g.edges[h.edge];
        let v = if h.param == zero { a } else { b };
        if vertex_done[v] {
            continue;
        }
        vertex_done[v] = true;
        if g.incidence[v].iter().all(|&e| clamps_at(&hits[e], v)) {
            minima.push(*h);
        }
    }

    let mut reps: Vec<Point2<T>> = Vec::new();
    for m in minima.iter().filter(|m| m.distance <= best + tol) {
        if reps.iter().all(|r| r.dist(m.foot) > ridge_tol) {
            reps.push(m.foot);
        }
    }
    let multiplicity = reps.len().max(1);
    // minima inside the tie window are either the chosen foot or raise the
    // multiplicity; the margin is measured to the next one outside it
    let margin = minima
        .iter()
        .filter(|m| m.distance > best + tol)
        .map(|m| m.distance - best)
        .fold(T::infinity(), T::min);
    let margin = if multiplicity > 1 { zero } else { margin };

    Ok(ProjectionResult {
        edge_id: chosen.edge,
        param: chosen.param,
        foot: chosen.foot,
        distance: chosen.distance,
        direction: (chosen.foot - x).normalized().filter(|_| chosen.distance > zero),
        multiplicity,
        margin,
    })
}

/// H¹(Σ).
pub fn graph_length<T: Scalar>(g: &EmbeddedGraph<T>) -> T {
    g.length()
}

/// `n + 1` points on the circle arc from `angle_start` to `angle_end`,
/// equally spaced in angle; both endpoints are evaluated at the exact
/// input angles.
pub fn arc_polyline<T: Scalar>(
    center: Point2<T>,
    radius: T,
    angle_start: T,
    angle_end: T,
    n: usize,
) -> Result<Vec<Point2<T>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("arc_polyline needs n >= 1".into()));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("arc radius must be positive, got {radius}")));
    }
    let span = angle_end - angle_start;
    let nf = T::of(n as f64);
    Ok((0..=n)
        .map(|k| {
            let angle = match k {
                0 => angle_start,
                k if k == n => angle_end,
                k => angle_start + span * T::of(k as f64) / nf,
            };
            center + Point2::polar(angle) * radius
        })
        .collect())
}

/// Exact nearest-edge queries for points in a fixed box.
///
/// The box is cut into cells; each cell keeps the edges that can hold the
/// nearest foot (or a tie within the ridge window) of some point of the
/// cell. Queries outside the box fall back to the full scan. Results are
/// identical to [`EmbeddedGraph::nearest`] and [`EmbeddedGraph::distance`].
pub struct EdgeIndex<'g, T> {
    g: &'g EmbeddedGraph<T>,
    domain: Aabb<T>,
    cell: T,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
    /// Edge nearest to each cell center, scanned first to seed pruning.
    seed: Vec<u32>,
    ridge_tol: T,
}

impl<'g, T: Scalar> EdgeIndex<'g, T> {
    /// Index for queries in `domain` with roughly `cells` cells.
    pub fn new(g: &'g EmbeddedGraph<T>, domain: Aabb<T>, ridge_tol: T, cells: usize) -> Self {
        let (w, h) = (domain.width(), domain.height());
        let diag = domain.diagonal();
        let tiny = diag * T::of(1e-6) + T::epsilon();
        let area = (w + tiny) * (h + tiny);
        let cell = (area / T::of(cells.max(1) as f64)).sqrt().max(tiny);
        let count = |len: T| (len / cell).ceil().to_usize().unwrap_or(1).max(1);
        let (nx, ny) = (count(w), count(h));
        let half = cell * T::of(0.5);
        let half_diag = cell * T::SQRT_2() * T::of(0.5);
        let mut start = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        let mut seed = Vec::with_capacity(nx * ny);
        start.push(0u32);
        for j in 0..ny {
            for i in 0..nx {
                let lo = Point2::new(domain.min.x + cell * T::of(i as f64), domain.min.y + cell * T::of(j as f64));
                let bx = Aabb { min: lo, max: lo + Point2::new(cell, cell) };
                let center = lo + Point2::new(half, half);
                // every point of the cell is within this distance of Σ
                let (near, dc) = g
                    .boxes
                    .iter()
                    .enumerate()
                    .fold((0, T::infinity()), |(be, bd), (e, eb)| {
                        if eb.dist_sq(center) > bd * bd {
                            return (be, bd);
                        }
                        let (a, b) = g.edge_points(e);
                        let d = project_on_segment(center, a, b).2;
                        if d < bd { (e, d) } else { (be, bd) }
                    });
                seed.push(near as u32);
                let upper = dc + half_diag;
                let reach = upper + ridge_tol * (T::one() + upper);
                for (e, eb) in g.boxes.iter().enumerate() {
                    if box_dist_sq(&bx, eb) <= reach * reach {
                        items.push(e as u32);
                    }
                }
                start.push(items.len() as u32);
            }
        }
        Self { g, domain, cell, nx, ny, start, items, seed, ridge_tol }
    }

    fn candidates(&self, x: Point2<T>) -> Option<(&[u32], usize)> {
        if !self.domain.contains(x) {
            return None;
        }
        let idx = |v: T, lo: T, n: usize| ((v - lo) / self.cell).floor().to_usize().unwrap_or(0).min(n - 1);
        let (i, j) = (idx(x.x, self.domain.min.x, self.nx), idx(x.y, self.domain.min.y, self.ny));
        let c = j * self.nx + i;
        Some((&self.items[self.start[c] as usize..self.start[c + 1] as usize], self.seed[c] as usize))
    }

    pub fn nearest(&self, x: Point2<T>) -> Nearest<T> {
        let Some((cands, seed)) = self.candidates(x) else {
            return self.g.nearest(x, self.ridge_tol).expect("graph has edges");
        };
        let best = self.scan(cands, seed, x);
        let limit = best + self.ridge_tol * (T::one() + best);
        // candidate lists are sorted, so the first edge inside the window
        // is the lexicographic tie-break winner
        cands
            .iter()
            .filter(|&&e| self.g.boxes[e as usize].dist_sq(x) <= limit * limit)
            .find_map(|&e| {
                let e = e as usize;
                let (a, b) = self.g.edge_points(e);
                let (t, foot, d) = project_on_segment(x, a, b);
                (d <= limit).then_some(Nearest { edge: e, param: t, foot, distance: d })
            })
            .expect("minimum lies in the window")
    }

    fn scan(&self, cands: &[u32], seed: usize, x: Point2<T>) -> T {
        let (a, b) = self.g.edge_points(seed);
        let mut best = project_on_segment(x, a, b).2;
        for &e in cands {
            let e = e as usize;
            if self.g.boxes[e].dist_sq(x) > best * best {
                continue;
            }
            let (a, b) = self.g.edge_points(e);
            best = best.min(project_on_segment(x, a, b).2);
        }
        best
    }

    pub fn distance(&self, x: Point2<T>) -> T {
        match self.candidates(x) {
            Some((cands, seed)) => self.scan(cands, seed, x),
            None => self.g.distance(x),
        }
    }
}

fn box_dist_sq<T: Scalar>(a: &Aabb<T>, b: &Aabb<T>) -> T {
    let z = T::zero();
    let dx = (a.min.x - b.max.x).max(z).max(b.min.x - a.max.x);
    let dy = (a.min.y - b.max.y).max(z).max(b.min.y - a.max.y);
    dx * dx + dy * dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type P = Point2<f64>;

    fn seg() -> EmbeddedGraph<f64> {
        EmbeddedGraph::new(vec![P::new(0.0, 0.0), P::new(1.0, 0.0)], vec![(0, 1)]).unwrap()
    }

    #[test]
    fn endpoint_projection() {
        let r = project(P::new(2.0, 0.0), &seg(), 1e-9).unwrap();
        assert_eq!(r.foot, P::new(1.0, 0.0));
        assert_eq!(r.distance, 1.0);
        assert_eq!(r.direction, Some(P::new(-1.0, 0.0)));
        assert_eq!(r.multiplicity, 1);
        assert!(r.margin.is_infinite());
    }

    #[test]
    fn perpendicular_foot() {
        let r = project(P::new(0.3, 0.4), &seg(), 1e-9).unwrap();
        assert_relative_eq!(r.foot.x, 0.3, epsilon = 1e-15);
        assert_relative_eq!(r.foot.y, 0.0);
        assert_relative_eq!(r.distance, 0.4, epsilon = 1e-15);
        let d = r.direction.unwrap();
        assert_relative_eq!(d.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.y, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_v_has_two_feet() {
        let g = EmbeddedGraph::new(
            vec![P::new(0.0, 0.0), P::new(1.0, 1.0), P::new(1.0, -1.0)],
            vec![(0, 1), (0, 2)],
        )
        .unwrap();
        let r = project(P::new(1.0, 0.0), &g, 1e-9).unwrap();
        assert_relative_eq!(r.distance, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_eq!(r.multiplicity, 2);
        assert_eq!(r.margin, 0.0);
        // tie broken towards edge 0
        assert_eq!(r.edge_id, 0);
        assert_relative_eq!(r.foot.x, 0.5, epsilon = 1e-14);
        assert_relative_eq!(r.foot.y, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn brute_force_confirms_two_equidistant_feet() {
        // dense sampling of the V-graph finds the minimum in two places
        let x = P::new(1.0, 0.0);
        let n = 1_000_000;
        let mut best = f64::INFINITY;
        let mut argmins = Vec::new();
        for k in 0..n {
            let s = k as f64 / (n - 1) as f64;
            for p in [P::new(s, s), P::new(s, -s)] {
                let d = p.dist(x);
                if d < best - 1e-12 {
                    best = d;
                    argmins.clear();
                }
                if (d - best).abs() <= 1e-12 {
                    argmins.push(p);
                }
            }
        }
        assert_relative_eq!(best, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-5);
        assert!(argmins.iter().any(|p| p.y > 0.0) && argmins.iter().any(|p| p.y < 0.0));
    }

    #[test]
    fn vertex_foot_is_a_single_local_minimum() {
        // outside a convex corner both edges clamp to the shared vertex
        let g = EmbeddedGraph::new(
            vec![P::new(-1.0, -1.0), P::new(0.0, 0.0), P::new(1.0, -1.0)],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let r = project(P::new(0.0, 1.0), &g, 1e-9).unwrap();
        assert_eq!(r.multiplicity, 1);
        assert!(r.margin.is_infinite());
        assert_eq!(r.foot, P::new(0.0, 0.0));
        // on the concave side the bisector is a ridge
        let r = project(P::new(0.0, -0.5), &g, 1e-9).unwrap();
        assert_eq!(r.multiplicity, 2);
    }

    #[test]
    fn margin_ignores_clamped_neighbours_of_the_foot() {
        // outside a fine polygon the neighbouring edges clamp to vertices
        // almost as close as the true foot; they are not competitors
        let g = EmbeddedGraph::regular_polygon(P::zero(), 0.447_213_595_5, 512).unwrap();
        let tol = g.default_ridge_tol();
        for k in 0..64 {
            let x = P::polar(0.1 * k as f64) * 0.9;
            let r = project(x, &g, tol).unwrap();
            assert_eq!(r.multiplicity, 1);
            // the next local minimum is on the far side
            assert!(r.margin > 0.5, "margin {} at {x:?}", r.margin);
        }
    }

    #[test]
    fn lengths() {
        let tri = EmbeddedGraph::polyline(vec![P::new(0.0, 0.0), P::new(1.0, 0.0), P::new(0.0, 1.0)], true).unwrap();
        assert_relative_eq!(graph_length(&tri), 3.414_21, epsilon = 1e-5);
        let one = EmbeddedGraph::new(vec![P::new(0.0, 0.0), P::new(3.0, 4.0)], vec![(0, 1)]).unwrap();
        assert_eq!(graph_length(&one), 5.0);
        let ngon = EmbeddedGraph::regular_polygon(P::zero(), 1.0, 64).unwrap();
        let chord = 128.0 * (std::f64::consts::PI / 64.0).sin();
        assert_relative_eq!(graph_length(&ngon), chord, epsilon = 1e-13);
    }

    #[test]
    fn validation_errors() {
        let p = vec![P::new(0.0, 0.0), P::new(1.0, 0.0), P::new(2.0, 0.0)];
        assert!(matches!(EmbeddedGraph::new(p.clone(), vec![(0, 3)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(EmbeddedGraph::new(p.clone(), vec![(1, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(
            EmbeddedGraph::new(p.clone(), vec![(0, 1), (1, 0), (1, 2)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(EmbeddedGraph::new(p.clone(), vec![(0, 1)]), Err(Error::InvalidGraph(_))));
        let short = vec![P::new(0.0, 0.0), P::new(1e-12, 0.0)];
        assert!(matches!(EmbeddedGraph::new(short, vec![(0, 1)]), Err(Error::InvalidGraph(_))));
        assert!(EmbeddedGraph::new(p, vec![(0, 1), (1, 2)]).is_ok());
        assert!(project(P::zero(), &EmbeddedGraph::<f64>::empty(), 0.0).is_err());
        assert!(project(P::zero(), &seg(), -1.0).is_err());
    }

    #[test]
    fn cycles() {
        let sq = EmbeddedGraph::regular_polygon(P::zero(), 1.0, 4).unwrap();
        assert!((0..4).all(|v| sq.on_cycle(v)));
        assert!(!seg().on_cycle(0));
        let lollipop = EmbeddedGraph::new(
            vec![P::new(0.0, 0.0), P::new(1.0, 0.0), P::new(1.0, 1.0), P::new(-1.0, 0.0)],
            vec![(0, 1), (1, 2), (2, 0), (0, 3)],
        )
        .unwrap();
        assert!(lollipop.on_cycle(0));
        assert!(!lollipop.on_cycle(3));
    }

    #[test]
    fn arcs() {
        let q = arc_polyline(P::zero(), 1.0, 0.0, std::f64::consts::FRAC_PI_2, 2).unwrap();
        let g = EmbeddedGraph::polyline(q, false).unwrap();
        assert_relative_eq!(g.length(), 1.530_73, epsilon = 1e-5);
        let pi = std::f64::consts::PI;
        let top = arc_polyline(P::new(0.2, -0.1), 0.7, 0.0, pi, 33).unwrap();
        let bottom = arc_polyline(P::new(0.2, -0.1), 0.7, pi, 2.0 * pi, 17).unwrap();
        assert_eq!(top.last(), bottom.first());
        let one = arc_polyline(P::zero(), 2.0, 0.0, 1.0, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0], P::new(2.0, 0.0));
        assert!(arc_polyline(P::zero(), 1.0, 0.0, 1.0, 0).is_err());
        assert!(arc_polyline(P::zero(), 0.0, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn nearest_agrees_with_project() {
        let g = EmbeddedGraph::regular_polygon(P::new(0.1, 0.2), 0.5, 37).unwrap();
        for k in 0..200 {
            let x = P::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos());
            let p = project(x, &g, 1e-9).unwrap();
            let n = g.nearest(x, 1e-9).unwrap();
            assert_eq!((p.edge_id, p.param), (n.edge, n.param));
            assert_eq!(g.distance(x), p.distance);
        }
    }
}
