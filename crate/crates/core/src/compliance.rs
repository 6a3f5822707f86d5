//! Dirichlet compliance with Σ as an internal crack, on a uniform grid.
//!
//! `C(Σ) = ∫ u_Σ f dx + λ H¹(Σ)` where `−Δu = f` in `Ω∖Σ` and `u = 0` on
//! `∂Ω ∪ Σ`. Σ is realized by masking every node within h/2 of it. The
//! shape derivative is
//!
//! ```text
//! δC(X) = ∫_Σ ((∂u⁺/∂n)² − (∂u⁻/∂n)²) ⟨X, n⟩ dH¹ − λ ⟨H_Σ, X⟩,
//! ```
//!
//! with n the left normal of each edge and "+" the side opposite to n.

use crate::geometry::{EmbeddedGraph, Point2};
use crate::variation::{curvature_pairing, OnSigmaField};
use crate::{Error, Result};

type P = Point2<f64>;

/// Node grid on a rectangle; node `(i, j)` sits at `min + h·(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub min: P,
    pub h: f64,
    /// Cells along x and y; there are `(nx + 1)·(ny + 1)` nodes.
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// The rectangle's sides must be integer multiples of `h`.
    pub fn new(min: P, max: P, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(max.x > min.x) || !(max.y > min.y) {
            return Err(Error::InvalidArgument("grid needs h > 0 and a nonempty rectangle".into()));
        }
        let cells = |len: f64| -> Result<usize> {
            let n = (len / h).round();
            if (n * h - len).abs() > 1e-9 * len.max(1.0) || n < 2.0 {
                return Err(Error::InvalidArgument(format!("side {len} is not a multiple (>= 2) of h = {h}")));
            }
            Ok(n as usize)
        };
        Ok(Self { min, h, nx: cells(max.x - min.x)?, ny: cells(max.y - min.y)? })
    }

    pub fn unit_square(h: f64) -> Result<Self> {
        Self::new(P::new(0.0, 0.0), P::new(1.0, 1.0), h)
    }

    pub fn max(&self) -> P {
        self.node(self.nx, self.ny)
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node(&self, i: usize, j: usize) -> P {
        P::new(self.min.x + self.h * i as f64, self.min.y + self.h * j as f64)
    }

    pub fn on_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    fn contains(&self, x: P) -> bool {
        let m = self.max();
        x.x >= self.min.x && x.x <= m.x && x.y >= self.min.y && x.y <= m.y
    }

    /// Bilinear interpolation of nodal values.
    pub fn interpolate(&self, u: &[f64], x: P) -> f64 {
        let s = (x.x - self.min.x) / self.h;
        let t = (x.y - self.min.y) / self.h;
        let i = (s.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (t.floor().max(0.0) as usize).min(self.ny - 1);
        let (a, b) = (s - i as f64, t - j as f64);
        let v = |di: usize, dj: usize| u[self.index(i + di, j + dj)];
        (1.0 - a) * (1.0 - b) * v(0, 0) + a * (1.0 - b) * v(1, 0) + (1.0 - a) * b * v(0, 1) + a * b * v(1, 1)
    }
}

/// Dirichlet mask: the outer boundary plus every node within h/2 of Σ.
pub fn rasterize(g: &EmbeddedGraph<f64>, grid: &Grid) -> Result<Vec<bool>> {
    if let Some(v) = g.vertices().iter().position(|p| !grid.contains(*p)) {
        return Err(Error::InvalidArgument(format!("vertex {v} of Σ lies outside the grid rectangle")));
    }
    let mut mask = vec![false; grid.node_count()];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if grid.on_boundary(i, j) {
                mask[grid.index(i, j)] = true;
            }
        }
    }
    let r = 0.5 * grid.h;
    for e in 0..g.edge_count() {
        let (a, b) = g.edge_points(e);
        let lo = |v: f64, m: f64| (((v - r - m) / grid.h).floor().max(0.0)) as usize;
        let hi = |v: f64, m: f64, n: usize| ((((v + r - m) / grid.h).ceil()) as usize).min(n);
        let (i0, i1) = (lo(a.x.min(b.x), grid.min.x), hi(a.x.max(b.x), grid.min.x, grid.nx));
        let (j0, j1) = (lo(a.y.min(b.y), grid.min.y), hi(a.y.max(b.y), grid.min.y, grid.ny));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let x = grid.node(i, j);
                if crate::geometry::project_on_segment(x, a, b).2 <= r {
                    mask[grid.index(i, j)] = true;
                }
            }
        }
    }
    Ok(mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoissonProblem {
    pub grid: Grid,
    /// Source at every node.
    pub f: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridPoissonProblem {
    pub fn new(grid: Grid, f: Vec<f64>, g: &EmbeddedGraph<f64>) -> Result<Self> {
        if f.len() != grid.node_count() {
            return Err(Error::InvalidArgument(format!("source has {} values for {} nodes", f.len(), grid.node_count())));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("source values must be finite".into()));
        }
        let mask = rasterize(g, &grid)?;
        Ok(Self { grid, f, mask })
    }

    /// Source given by a function of position.
    pub fn with_source(grid: Grid, f: impl Fn(P) -> f64, g: &EmbeddedGraph<f64>) -> Result<Self> {
        let vals = (0..=grid.ny).flat_map(|j| (0..=grid.nx).map(move |i| (i, j))).map(|(i, j)| f(grid.node(i, j))).collect();
        Self::new(grid, vals, g)
    }

    pub fn free_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    /// `A u = (4u − Σ neighbours)/h²` on free nodes, zero on masked ones.
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let inv = 1.0 / (g.h * g.h);
        let w = g.nx + 1;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let k = g.index(i, j);
                out[k] = if self.mask[k] {
                    0.0
                } else {
                    (4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - w] - u[k + w]) * inv
                };
            }
        }
    }

    /// `‖f + Δ_h u‖∞` over free nodes.
    pub fn residual_inf(&self, u: &[f64]) -> f64 {
        let mut au = vec![0.0; u.len()];
        self.apply(u, &mut au);
        (0..u.len()).filter(|k| !self.mask[*k]).map(|k| (self.f[k] - au[k]).abs()).fold(0.0, f64::max)
    }

    fn source_scale(&self) -> f64 {
        (0..self.f.len()).filter(|k| !self.mask[*k]).map(|k| self.f[k].abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub u: Vec<f64>,
    /// `‖f + Δ_h u‖∞ / ‖f‖∞` over free nodes.
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

/// Conjugate gradients on the free nodes until the relative ∞-norm
/// residual drops to `tol`.
pub fn solve_poisson(p: &GridPoissonProblem, tol: f64) -> Result<GridSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = p.grid.node_count();
    let scale = p.source_scale();
    let mut u = vec![0.0; n];
    if scale == 0.0 {
        return Ok(GridSolution { u, residual: 0.0, iterations: 0, tolerance: tol });
    }
    let cap = 20 * (p.grid.nx + p.grid.ny + 2) * 20 + 1000;
    let mut iterations = 0;
    let free: Vec<bool> = p.mask.iter().map(|m| !m).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut ap = vec![0.0; n];
    // restarts refresh the recursively updated residual
    for _restart in 0..5 {
        p.apply(&u, &mut ap);
        let mut r: Vec<f64> = (0..n).map(|k| if free[k] { p.f[k] - ap[k] } else { 0.0 }).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        loop {
            let rinf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rinf <= 0.5 * tol * scale {
                break;
            }
            if iterations >= cap {
                let residual = p.residual_inf(&u) / scale;
                return Err(Error::Solver {
                    message: format!("conjugate gradients did not reach {tol} in {cap} iterations"),
                    residual,
                });
            }
            p.apply(&d, &mut ap);
            let alpha = rr / dot(&d, &ap);
            for k in 0..n {
                u[k] += alpha * d[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                d[k] = r[k] + beta * d[k];
            }
            iterations += 1;
        }
        let residual = p.residual_inf(&u) / scale;
        if residual <= tol {
            return Ok(GridSolution { u, residual, iterations, tolerance: tol });
        }
    }
    let residual = p.residual_inf(&u) / scale;
    Err(Error::Solver { message: "residual drifted above the tolerance after restarts".into(), residual })
}

/// `h² Σ u f`.
pub fn compliance_integral(sol: &GridSolution, p: &GridPoissonProblem) -> f64 {
    let h2 = p.grid.h * p.grid.h;
    h2 * sol.u.iter().zip(&p.f).map(|(u, f)| u * f).sum::<f64>()
}

/// `h² Σ u f + λ H¹(Σ)`.
pub fn compliance_value(sol: &GridSolution, p: &GridPoissonProblem, lambda: f64, g: &EmbeddedGraph<f64>) -> f64 {
    compliance_integral(sol, p) + lambda * g.length()
}

/// `Σ_links (u_a − u_b)²`, the discrete `∫|∇u|²` of the 5-point stencil.
pub fn gradient_energy(u: &[f64], grid: &Grid) -> f64 {
    let mut s = 0.0;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let k = grid.index(i, j);
            if i < grid.nx {
                s += (u[k + 1] - u[k]).powi(2);
            }
            if j < grid.ny {
                s += (u[k + grid.nx + 1] - u[k]).powi(2);
            }
        }
    }
    s
}

/// `|∫(2fu − |∇u|²) − ∫fu|`; zero exactly at the discrete solution.
pub fn dual_gap(u: &[f64], p: &GridPoissonProblem) -> f64 {
    let h2 = p.grid.h * p.grid.h;
    let fu = h2 * u.iter().zip(&p.f).map(|(u, f)| u * f).sum::<f64>();
    (2.0 * fu - gradient_energy(u, &p.grid) - fu).abs()
}

/// Left unit normal of edge `e`.
pub fn edge_normal(g: &EmbeddedGraph<f64>, e: usize) -> P {
    let (a, b) = g.edge_points(e);
    ((b - a) / g.edge_length(e)).perp()
}

fn one_sided_derivative(sol: &GridSolution, grid: &Grid, x0: P, dir: P) -> f64 {
    let u = |k: f64| grid.interpolate(&sol.u, x0 + dir * (k * grid.h));
    (-2.5 * u(1.0) + 4.0 * u(2.0) - 1.5 * u(3.0)) / grid.h
}

/// `(s, (∂u⁺/∂n)² − (∂u⁻/∂n)²)` at `samples` equally spaced stations
/// (cell midpoints in arclength) along edge `e`.
pub fn normal_jump(
    sol: &GridSolution,
    p: &GridPoissonProblem,
    g: &EmbeddedGraph<f64>,
    e: usize,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if e >= g.edge_count() || samples == 0 {
        return Err(Error::InvalidArgument(format!("bad edge {e} or sample count {samples}")));
    }
    let grid = &p.grid;
    let n = edge_normal(g, e);
    let len = g.edge_length(e);
    let inside = |x: P| grid.contains(x);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = (k as f64 + 0.5) / samples as f64;
        let x0 = g.point_on_edge(e, t);
        if !inside(x0 + n * (3.0 * grid.h)) || !inside(x0 - n * (3.0 * grid.h)) {
            return Err(Error::Geometry(format!(
                "the normal stencil of edge {e} leaves the grid at s = {}",
                t * len
            )));
        }
        let plus = one_sided_derivative(sol, grid, x0, -n);
        let minus = one_sided_derivative(sol, grid, x0, n);
        out.push((t * len, plus * plus - minus * minus));
    }
    Ok(out)
}

/// Split of the compliance shape derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplianceDerivative {
    /// `∫_Σ jump·⟨X, n⟩`.
    pub pde_term: f64,
    /// `⟨H_Σ, X⟩`.
    pub curvature_term: f64,
    pub total: f64,
}

/// Line quadrature of `jump·⟨X, n⟩` (stations spaced about `h` apart)
/// minus `λ⟨H_Σ, X⟩`. Edges on which `⟨X, n⟩` vanishes are skipped.
pub fn shape_derivative(
    sol: &GridSolution,
    p: &GridPoissonProblem,
    g: &EmbeddedGraph<f64>,
    lambda: f64,
    x: &OnSigmaField<f64>,
) -> Result<ComplianceDerivative> {
    let curvature_term = curvature_pairing(g, x)?;
    let mut pde_term = 0.0;
    for e in 0..g.edge_count() {
        let n = edge_normal(g, e);
        let (a, b) = g.edges()[e];
        let (xa, xb) = (x.values()[a].dot(n), x.values()[b].dot(n));
        if xa == 0.0 && xb == 0.0 {
            continue;
        }
        let len = g.edge_length(e);
        let samples = ((len / p.grid.h).round() as usize).max(1);
        let ds = len / samples as f64;
        for (s, jump) in normal_jump(sol, p, g, e, samples)? {
            let t = s / len;
            pde_term += jump * ((1.0 - t) * xa + t * xb) * ds;
        }
    }
    Ok(ComplianceDerivative { pde_term, curvature_term, total: pde_term - lambda * curvature_term })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdCompliance {
    /// `(C(Σ + εX) − C(Σ − εX)) / 2ε`.
    pub value: f64,
    /// Same quotient at ε/2.
    pub half_step: f64,
    /// `|value − half_step|`, a proxy for rasterization noise.
    pub noise: f64,
}

/// Central difference of the compliance functional with full
/// re-rasterization and re-solve. `eps` must be at least `2h`.
pub fn fd_compliance_oracle(
    grid: &Grid,
    f: &[f64],
    g: &EmbeddedGraph<f64>,
    lambda: f64,
    x: &OnSigmaField<f64>,
    eps: f64,
    tol: f64,
) -> Result<FdCompliance> {
    if !(eps >= 2.0 * grid.h * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("eps = {eps} is below 2h = {}", 2.0 * grid.h)));
    }
    let value_at = |s: f64| -> Result<f64> {
        let gp = x.displace(g, s)?;
        let p = GridPoissonProblem::new(*grid, f.to_vec(), &gp)?;
        let sol = solve_poisson(&p, tol)?;
        Ok(compliance_value(&sol, &p, lambda, &gp))
    };
    let quotient = |e: f64| -> Result<f64> { Ok((value_at(e)? - value_at(-e)?) / (2.0 * e)) };
    let value = quotient(eps)?;
    let half_step = quotient(0.5 * eps)?;
    Ok(FdCompliance { value, half_step, noise: (value - half_step).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(a: P, b: P) -> EmbeddedGraph<f64> {
        EmbeddedGraph::new(vec![a, b], vec![(0, 1)]).unwrap()
    }

    #[test]
    fn axis_aligned_mask() {
        let grid = Grid::unit_square(1.0 / 64.0).unwrap();
        let g = segment(P::new(0.25, 0.5), P::new(0.75, 0.5));
        let mask = rasterize(&g, &grid).unwrap();
        for j in 1..64 {
            for i in 1..64 {
                let expect = j == 32 && (16..=48).contains(&i);
                assert_eq!(mask[grid.index(i, j)], expect, "({i}, {j})");
            }
        }
        let empty = rasterize(&EmbeddedGraph::empty(), &grid).unwrap();
        assert_eq!(empty.iter().filter(|m| **m).count(), 4 * 64);
        assert!(rasterize(&segment(P::new(0.5, 0.5), P::new(1.5, 0.5)), &grid).is_err());
    }

    #[test]
    fn zero_source() {
        let grid = Grid::unit_square(1.0 / 16.0).unwrap();
        let p = GridPoissonProblem::with_source(grid, |_| 0.0, &EmbeddedGraph::empty()).unwrap();
        let s = solve_poisson(&p, 1e-10).unwrap();
        assert!(s.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dual_gap_detects_perturbation() {
        let grid = Grid::unit_square(1.0 / 32.0).unwrap();
        let p = GridPoissonProblem::with_source(grid, |_| 1.0, &EmbeddedGraph::empty()).unwrap();
        let s = solve_poisson(&p, 1e-10).unwrap();
        let gap = dual_gap(&s.u, &p);
        assert!(gap < 1e-9, "{gap}");
        let mut v = s.u.clone();
        for (k, m) in p.mask.iter().enumerate() {
            if !m {
                v[k] += 1e-3 * ((k * 7919 % 13) as f64 / 13.0 - 0.5);
            }
        }
        assert!(dual_gap(&v, &p) > gap);
    }

    #[test]
    fn grid_rejects_misaligned_sides() {
        assert!(Grid::new(P::new(0.0, 0.0), P::new(1.0, 1.0), 0.3).is_err());
    }
}
