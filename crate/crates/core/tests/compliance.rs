use adf_core::compliance::*;
use adf_core::{Field, Graph, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `−Δu = 1` on the unit square, u = 0 on the boundary, by double sine series.
fn series_u(x: f64, y: f64) -> f64 {
    let mut s = 0.0;
    for m in (1..400).step_by(2) {
        for n in (1..400).step_by(2) {
            let (mf, nf) = (m as f64, n as f64);
            s += 16.0 / (PI.powi(4) * mf * nf * (mf * mf + nf * nf)) * (mf * PI * x).sin() * (nf * PI * y).sin();
        }
    }
    s
}

fn series_compliance() -> f64 {
    let mut s = 0.0;
    for m in (1..2000).step_by(2) {
        for n in (1..2000).step_by(2) {
            let (mf, nf) = (m as f64, n as f64);
            s += 64.0 / (PI.powi(6) * mf * mf * nf * nf * (mf * mf + nf * nf));
        }
    }
    s
}

fn solve_empty(n: usize) -> (GridPoissonProblem, GridSolution) {
    let grid = Grid::unit_square(1.0 / n as f64).unwrap();
    let p = GridPoissonProblem::with_source(grid, |_| 1.0, &Graph::empty()).unwrap();
    let s = solve_poisson(&p, 1e-11).unwrap();
    (p, s)
}

#[test]
fn series_oracle_values() {
    assert!((series_u(0.5, 0.5) - 0.07367).abs() < 1e-5);
    assert!((series_compliance() - 0.035144).abs() < 1e-6);
}

#[test]
fn empty_crack_center_value_and_order() {
    let exact = series_compliance();
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let (p, s) = solve_empty(n);
            (compliance_integral(&s, &p) - exact).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "observed order {order}");
    }
    let (p, s) = solve_empty(128);
    let mid = s.u[p.grid.index(64, 64)];
    assert!((mid - series_u(0.5, 0.5)).abs() < 1e-4, "{mid}");
}

#[test]
fn richardson_compliance() {
    let (p1, s1) = solve_empty(64);
    let (p2, s2) = solve_empty(128);
    let r = (4.0 * compliance_integral(&s2, &p2) - compliance_integral(&s1, &p1)) / 3.0;
    assert!((r - series_compliance()).abs() / series_compliance() < 1e-3, "{r}");
}

#[test]
fn dual_gap_within_solver_tolerance() {
    let tol = 1e-8;
    let grid = Grid::unit_square(1.0 / 64.0).unwrap();
    let g = Graph::polyline(vec![Point::new(0.2, 0.3), Point::new(0.7, 0.6)], false).unwrap();
    let p = GridPoissonProblem::with_source(grid, |x| 1.0 + x.x, &g).unwrap();
    let s = solve_poisson(&p, tol).unwrap();
    assert!(s.residual <= tol);
    let c = compliance_integral(&s, &p);
    assert!(dual_gap(&s.u, &p) <= 10.0 * tol * c.max(1.0), "{}", dual_gap(&s.u, &p));
}

#[test]
fn comparison_under_mask_growth() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = Grid::unit_square(1.0 / 48.0).unwrap();
    for _ in 0..10 {
        let k = rng.gen_range(2..5);
        let pts: Vec<Point> = (0..=k).map(|_| Point::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))).collect();
        let small = Graph::polyline(pts[..k].to_vec(), false).unwrap();
        let large = Graph::polyline(pts, false).unwrap();
        let solve = |g: &Graph| {
            let p = GridPoissonProblem::with_source(grid, |_| 1.0, g).unwrap();
            let s = solve_poisson(&p, 1e-11).unwrap();
            (compliance_integral(&s, &p), s.u)
        };
        let (c0, u0) = solve(&small);
        let (c1, u1) = solve(&large);
        assert!(c1 <= c0 + 1e-12, "{c1} > {c0}");
        assert!(u1.iter().zip(&u0).all(|(a, b)| *a <= *b + 1e-9));
    }
}

#[test]
fn solver_rejects_bad_input() {
    let grid = Grid::unit_square(0.25).unwrap();
    assert!(GridPoissonProblem::new(grid, vec![1.0; 3], &Graph::empty()).is_err());
    let p = GridPoissonProblem::with_source(grid, |_| 1.0, &Graph::empty()).unwrap();
    assert!(solve_poisson(&p, 0.0).is_err());
}

#[test]
fn full_width_crack_derivative_matches_fd() {
    let h = 1.0 / 128.0;
    let grid = Grid::unit_square(h).unwrap();
    let g = Graph::polyline((0..=8).map(|i| Point::new(i as f64 / 8.0, 0.25)).collect(), false).unwrap();
    let x = Field::constant(&g, Point::new(0.0, 1.0));
    let p = GridPoissonProblem::with_source(grid, |_| 1.0, &g).unwrap();
    let s = solve_poisson(&p, 1e-11).unwrap();
    let d = shape_derivative(&s, &p, &g, 0.1, &x).unwrap();
    let fd = fd_compliance_oracle(&grid, &p.f, &g, 0.1, &x, 2.0 * h, 1e-11).unwrap();
    assert!((d.total - fd.value).abs() <= 0.01 * fd.value.abs(), "{} vs {}", d.total, fd.value);
    // moving toward the larger side reduces compliance
    assert!(d.total < 0.0);
}

#[test]
fn symmetric_crack_derivative_vanishes() {
    let h = 1.0 / 128.0;
    let grid = Grid::unit_square(h).unwrap();
    let g = Graph::polyline(vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)], false).unwrap();
    let x = Field::constant(&g, Point::new(0.0, 1.0));
    let p = GridPoissonProblem::with_source(grid, |_| 1.0, &g).unwrap();
    let s = solve_poisson(&p, 1e-11).unwrap();
    let d = shape_derivative(&s, &p, &g, 0.1, &x).unwrap();
    assert!(d.total.abs() < 1e-8, "{}", d.total);
}

#[test]
fn fd_oracle_rejects_subgrid_step() {
    let grid = Grid::unit_square(1.0 / 32.0).unwrap();
    let g = Graph::polyline(vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)], false).unwrap();
    let x = Field::constant(&g, Point::new(0.0, 1.0));
    let f = vec![1.0; grid.node_count()];
    assert!(fd_compliance_oracle(&grid, &f, &g, 0.1, &x, grid.h, 1e-8).is_err());
}
