//! The curved corner: two circular arcs of radius R meeting at O, the
//! domain that makes the convex corner stationary, and the scalar
//! quantities of the non-convex test.
//!
//! Coordinates: the chord line v is the x-axis, the symmetry line u the
//! y-axis. With `c = R cos α` the arc centers are `C₁ = (c, 0)` and
//! `C₂ = (−c, 0)`, the arcs run from `Q = (c − R, 0)` and `P = (R − c, 0)`
//! up to `O = (0, R sin α)`, and α is the angle between v and the ray C₁O.

use std::f64::consts::{FRAC_PI_2, PI};

use super::Scene;
use crate::geometry::{arc_polyline, EmbeddedGraph, Point2};
use crate::measure::Region;
use crate::{Error, Result};

type P = Point2<f64>;

/// Angular samples used for the polar pieces of the domain.
const RADIAL_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerParams {
    pub lambda: f64,
    /// Arc radius (both arcs).
    pub radius: f64,
    /// Angle at the arc centers, `π/2 − φ`.
    pub alpha: f64,
    /// Half-width of the rectangles hung below the endpoints.
    pub k: f64,
}

impl CornerParams {
    pub fn new(lambda: f64, radius: f64, alpha: f64, k: f64) -> Result<Self> {
        let p = Self { lambda, radius, alpha, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.radius > 0.0) || !self.lambda.is_finite() || !self.radius.is_finite() {
            return Err(Error::InvalidArgument("corner needs lambda > 0 and R > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, π/2), got {}", self.alpha)));
        }
        let kmax = self.radius * (1.0 - self.alpha.cos());
        if !(self.k > 0.0 && self.k < kmax) {
            return Err(Error::InvalidArgument(format!("k must lie in (0, R(1 − cos α)) = (0, {kmax}), got {}", self.k)));
        }
        Ok(())
    }

    /// `b = √(R² + 2λ) − R`.
    pub fn b(&self) -> f64 {
        (self.radius * self.radius + 2.0 * self.lambda).sqrt() - self.radius
    }

    /// Radius `√(2λ)` of the sector at O.
    pub fn r(&self) -> f64 {
        (2.0 * self.lambda).sqrt()
    }

    pub fn phi(&self) -> f64 {
        FRAC_PI_2 - self.alpha
    }

    /// Depth of the rectangles below P and Q.
    pub fn h(&self) -> Result<f64> {
        solve_rect_height(self.k, self.lambda)
    }

    /// Outer radius `f(θ) = √(2R² + 2λ − (R cos α / cos θ)²)` of the region
    /// outside an arc, θ measured at the arc center from the chord.
    pub fn f(&self, theta: f64) -> f64 {
        let r = self.radius;
        let s = r * self.alpha.cos() / theta.cos();
        (2.0 * r * r + 2.0 * self.lambda - s * s).sqrt()
    }

    pub fn points(&self) -> CornerPoints {
        let (r, a) = (self.radius, self.alpha);
        let c = r * a.cos();
        CornerPoints {
            c1: P::new(c, 0.0),
            c2: P::new(-c, 0.0),
            o: P::new(0.0, r * a.sin()),
            p: P::new(r - c, 0.0),
            q: P::new(c - r, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerPoints {
    pub c1: P,
    pub c2: P,
    pub o: P,
    pub p: P,
    pub q: P,
}

/// Σ = arcs QO and OP as polylines with `n_arc` segments per full circle;
/// Ω = A ∪ B ∪ C ∪ D ∪ E ∪ F ∪ G.
pub fn corner_domain(p: &CornerParams, n_arc: usize) -> Result<Scene<f64>> {
    p.validate()?;
    if n_arc == 0 {
        return Err(Error::InvalidArgument("n_arc must be positive".into()));
    }
    let CornerParams { lambda, radius: rr, alpha, k } = *p;
    let pts = p.points();
    let f_alpha = p.f(alpha);
    if (f_alpha - (rr + p.b())).abs() > 1e-12 * (1.0 + rr) {
        return Err(Error::DegenerateConstruction(format!("f(α) = {f_alpha} differs from R + b = {}", rr + p.b())));
    }
    let h = p.h()?;
    let c = pts.c1.x;

    let n = ((n_arc as f64) * alpha / (2.0 * PI)).ceil().max(1.0) as usize;
    // Q → O about C₁, then O → P about C₂
    let left = arc_polyline(pts.c1, rr, PI, PI - alpha, n)?;
    let right = arc_polyline(pts.c2, rr, alpha, 0.0, n)?;
    let mut verts = left;
    verts.extend(right.into_iter().skip(1));
    let graph = EmbeddedGraph::polyline(verts, false)?;

    // ψ is the angle at the arc center measured from the chord
    let inner_b = |psi: f64| c / psi.cos();
    let left_psi = |theta: f64| PI - theta;
    let inside_left = Region::radial_graph_sector(
        pts.c1,
        PI - alpha,
        PI,
        RADIAL_SAMPLES,
        |t| inner_b(left_psi(t)),
        |_| rr,
    )?;
    let outside_left =
        Region::radial_graph_sector(pts.c1, PI - alpha, PI, RADIAL_SAMPLES, |_| rr, |t| p.f(left_psi(t)))?;
    let inside_right = Region::radial_graph_sector(pts.c2, 0.0, alpha, RADIAL_SAMPLES, inner_b, |_| rr)?;
    let outside_right = Region::radial_graph_sector(pts.c2, 0.0, alpha, RADIAL_SAMPLES, |_| rr, |t| p.f(t))?;
    let rect_p = Region::rectangle(P::new(pts.p.x - k, -h), P::new(pts.p.x + k, 0.0))?;
    let rect_q = Region::rectangle(P::new(pts.q.x - k, -h), P::new(pts.q.x + k, 0.0))?;
    let sector_o = Region::annular_sector(pts.o, 0.0, p.r(), alpha, PI - alpha)?;
    let region = Region::union(vec![inside_right, inside_left, outside_left, outside_right, rect_p, sector_o, rect_q])?;
    Scene::new(
        graph,
        region,
        lambda,
        format!("corner: lambda {lambda}, R {rr}, alpha {alpha}, k {k}, rectangle depth {h}"),
    )
}

/// Left side of the rectangle condition:
/// `k√(k² + h²) + h² ln((k + √(k² + h²))/h) − k²`.
pub fn rect_integral(k: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let s = (k * k + h * h).sqrt();
    k * s + h * h * ((k + s) / h).ln() - k * k
}

/// Depth `h` with `−∫_{−k}^{k} ∫_{−h}^{0} y (z² + y²)^{−1/2} dy dz = λ`, by
/// bisection to 1e-12.
pub fn solve_rect_height(k: f64, lambda: f64) -> Result<f64> {
    if !(k > 0.0) || !(lambda > 0.0) || !k.is_finite() || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("need k > 0 and lambda > 0, got {k}, {lambda}")));
    }
    let g = |h: f64| rect_integral(k, h) - lambda;
    let mut hi = k.max(lambda.sqrt());
    let mut grow = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Solver { message: "no sign change found for the rectangle depth".into(), residual: g(hi) });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature on `[a, b]`; `tol` is relative to the
/// magnitude of the first Simpson estimate.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol * whole.abs().max(f64::MIN_POSITIVE), 40)
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("phi must lie in (0, π/2), got {phi}")));
    }
    Ok(())
}

/// `h(φ) = (1/sin φ) ∫₀^φ cos(φ − θ)/cos²θ dθ` by adaptive quadrature.
pub fn h_of_phi(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    let integrand = |t: f64| (phi - t).cos() / (t.cos() * t.cos());
    Ok(adaptive_simpson(&integrand, 0.0, phi, 1e-13) / phi.sin())
}

/// `h(φ) = cot φ · ln(sec φ + tan φ) + sec φ − 1`.
pub fn h_of_phi_closed_form(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    let sec = 1.0 / phi.cos();
    Ok((sec + phi.tan()).ln() / phi.tan() + sec - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerTest {
    /// `4λ / (b₁² + b₂²)`.
    pub ratio: f64,
    pub h: f64,
    /// True when `ratio ≥ h(φ)`, which rules out stationarity.
    pub non_stationary: bool,
}

/// Sufficient condition for a non-convex curved corner (arc radii `R₁`,
/// `R₂`, angle φ) not to be stationary.
pub fn corner_nonstationary_test(lambda: f64, r1: f64, r2: f64, phi: f64) -> Result<CornerTest> {
    if !(lambda > 0.0) || !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::InvalidArgument("need lambda, R1, R2 > 0".into()));
    }
    let b = |r: f64| (r * r + 2.0 * lambda).sqrt() - r;
    let ratio = 4.0 * lambda / (b(r1).powi(2) + b(r2).powi(2));
    // b² < 2λ for every R > 0
    debug_assert!(ratio > 1.0);
    let h = h_of_phi(phi)?;
    Ok(CornerTest { ratio, h, non_stationary: ratio >= h })
}

/// `g(γ) = ∫₀^γ cos(γ − θ)/cos²θ dθ − sin γ
///       = cos γ · ln(sec γ + tan γ) + tan γ − 2 sin γ`.
pub fn gamma_equation(gamma: f64) -> f64 {
    let (s, c) = gamma.sin_cos();
    c * ((1.0 + s) / c).ln() + s / c - 2.0 * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaReport {
    /// `(γ, g(γ))` on the scan grid.
    pub profile: Vec<(f64, f64)>,
    /// Roots refined by bisection inside each sign-change bracket.
    pub roots: Vec<f64>,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub summary: String,
}

/// Scans `g` on `(0, π/2)` with the given step and refines every sign
/// change. Reports "no interior root" with the profile when there is none.
pub fn gamma_threshold(resolution: f64) -> Result<GammaReport> {
    if !(resolution > 0.0) || resolution >= FRAC_PI_2 {
        return Err(Error::InvalidArgument(format!("resolution must lie in (0, π/2), got {resolution}")));
    }
    let n = (FRAC_PI_2 / resolution).ceil() as usize;
    let profile: Vec<(f64, f64)> = (1..n)
        .map(|i| i as f64 * resolution)
        .filter(|g| *g < FRAC_PI_2)
        .map(|g| (g, gamma_equation(g)))
        .collect();
    let mut roots = Vec::new();
    for w in profile.windows(2) {
        let ((a, ga), (b, gb)) = (w[0], w[1]);
        if ga == 0.0 {
            roots.push(a);
        } else if ga.signum() != gb.signum() && gb != 0.0 {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-14 {
                let m = 0.5 * (lo + hi);
                if gamma_equation(m).signum() == ga.signum() {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    let positive = profile.iter().filter(|p| p.1 > 0.0).count();
    let negative = profile.iter().filter(|p| p.1 < 0.0).count();
    let zero = profile.len() - positive - negative;
    let summary = if roots.is_empty() {
        let min = profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        format!(
            "no interior root: g > 0 at {positive} of {} grid points (min {min:.3e}); g(0.9425) = {:.6}",
            profile.len(),
            gamma_equation(0.9425)
        )
    } else {
        format!("{} root(s) in (0, π/2): {:?}", roots.len(), roots)
    };
    Ok(GammaReport { profile, roots, positive, negative, zero, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_constants() {
        let p = CornerParams::new(0.125, 1.0, PI / 6.0, 0.1).unwrap();
        assert_relative_eq!(p.b(), 1.25f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.b(), 0.118_03, epsilon = 1e-5);
        assert_relative_eq!(p.r(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.f(0.0), 1.224_74, epsilon = 1e-5);
        assert_relative_eq!(p.f(p.alpha), 1.118_03, epsilon = 1e-5);
        assert!((p.f(p.alpha) - 1.0 - p.b()).abs() < 1e-12);
        assert!(CornerParams::new(0.125, 1.0, PI / 6.0, 0.2).is_err());
    }

    #[test]
    fn rectangle_depth() {
        let h = solve_rect_height(0.5, 0.125).unwrap();
        assert!((h - 0.257_25).abs() < 1e-5, "{h}");
        assert!((rect_integral(0.5, h) - 0.125).abs() < 1e-9);
        let mut last = 0.0;
        for lambda in [0.2, 0.1, 0.01, 1e-3, 1e-5] {
            let h = solve_rect_height(0.5, lambda).unwrap();
            assert!(last == 0.0 || h < last);
            last = h;
        }
    }

    #[test]
    fn h_values() {
        assert_relative_eq!(h_of_phi(PI / 4.0).unwrap(), 1.295_59, epsilon = 1e-5);
        assert_relative_eq!(h_of_phi(0.1).unwrap(), 1.003_35, epsilon = 1e-5);
        // series 1 + φ²/3 + O(φ⁴)
        assert!((h_of_phi(0.01).unwrap() - (1.0 + 1e-4 / 3.0)).abs() < 1e-8);
        assert_relative_eq!(h_of_phi(1.2).unwrap(), 2.410_40, epsilon = 1e-5);
        assert!(h_of_phi(0.0).is_err());
        assert!(h_of_phi(FRAC_PI_2).is_err());
    }

    #[test]
    fn nonstationary_example() {
        let t = corner_nonstationary_test(0.125, 1.0, 1.0, PI / 4.0).unwrap();
        assert_relative_eq!(t.ratio, 17.944, epsilon = 1e-3);
        assert!(t.non_stationary);
        let small = corner_nonstationary_test(0.125, 1e-8, 1e-8, PI / 4.0).unwrap();
        assert!(small.ratio > 1.0 && small.ratio < 1.0 + 1e-6);
    }

    #[test]
    fn gamma_profile() {
        let r = gamma_threshold(1e-3).unwrap();
        assert_eq!(r.profile.len(), 1570);
        assert!(r.roots.is_empty());
        assert!(r.summary.starts_with("no interior root"));
        assert!(gamma_equation(1e-4).abs() < 1e-11);
    }
}
