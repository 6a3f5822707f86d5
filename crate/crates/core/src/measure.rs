//! Regions Ω and their midpoint-rule discretization into quadrature
//! measures μ.

use rayon::prelude::*;

use crate::geometry::{Aabb, Point2};
use crate::sum::pairwise;
use crate::{Error, Result, Scalar};

/// Planar region. Boundaries count as inside.
#[derive(Clone, Debug, PartialEq)]
pub enum Region<T> {
    Disk {
        center: Point2<T>,
        radius: T,
    },
    Rectangle {
        min: Point2<T>,
        max: Point2<T>,
    },
    /// Simple polygon, counter-clockwise.
    Polygon(Vec<Point2<T>>),
    /// `{ r_in ≤ |x − c| ≤ r_out }` intersected with the angular range
    /// `[angle_start, angle_end]`, angles counter-clockwise from +x.
    AnnularSector {
        center: Point2<T>,
        r_in: T,
        r_out: T,
        angle_start: T,
        angle_end: T,
    },
    /// Polar region `inner(θ) ≤ |x − c| ≤ outer(θ)` for θ in
    /// `[angle_start, angle_end]`, radii sampled at equally spaced angles
    /// (first sample at `angle_start`, last at `angle_end`) and linearly
    /// interpolated in between.
    RadialGraphSector {
        center: Point2<T>,
        angle_start: T,
        angle_end: T,
        inner: Vec<T>,
        outer: Vec<T>,
    },
    Union(Vec<Region<T>>),
    Difference(Box<Region<T>>, Box<Region<T>>),
}

/// Slack used for comparisons on curved boundaries, in units of epsilon.
const BOUNDARY_ULPS: f64 = 64.0;

impl<T: Scalar> Region<T> {
    pub fn disk(center: Point2<T>, radius: T) -> Result<Self> {
        let r = Region::Disk { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn rectangle(min: Point2<T>, max: Point2<T>) -> Result<Self> {
        let r = Region::Rectangle { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn polygon(vertices: Vec<Point2<T>>) -> Result<Self> {
        let r = Region::Polygon(vertices);
        r.validate()?;
        Ok(r)
    }

    pub fn annular_sector(center: Point2<T>, r_in: T, r_out: T, angle_start: T, angle_end: T) -> Result<Self> {
        let r = Region::AnnularSector { center, r_in, r_out, angle_start, angle_end };
        r.validate()?;
        Ok(r)
    }

    /// Samples `inner` and `outer` at `samples` equally spaced angles.
    pub fn radial_graph_sector(
        center: Point2<T>,
        angle_start: T,
        angle_end: T,
        samples: usize,
        inner: impl Fn(T) -> T,
        outer: impl Fn(T) -> T,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidArgument("a radial sector needs at least two samples".into()));
        }
        let step = (angle_end - angle_start) / T::of((samples - 1) as f64);
        let angle = |k: usize| if k + 1 == samples { angle_end } else { angle_start + step * T::of(k as f64) };
        let r = Region::RadialGraphSector {
            center,
            angle_start,
            angle_end,
            inner: (0..samples).map(|k| inner(angle(k))).collect(),
            outer: (0..samples).map(|k| outer(angle(k))).collect(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn union(parts: Vec<Region<T>>) -> Result<Self> {
        let r = Region::Union(parts);
        r.validate()?;
        Ok(r)
    }

    pub fn difference(base: Region<T>, minus: Region<T>) -> Result<Self> {
        let r = Region::Difference(Box::new(base), Box::new(minus));
        r.validate()?;
        Ok(r)
    }

    /// Checks that every primitive has positive area.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let z = T::zero();
        match self {
            Region::Disk { center, radius } => {
                if !center.is_finite() || !(*radius > z) || !radius.is_finite() {
                    return bad(format!("disk radius must be positive and finite, got {radius}"));
                }
            }
            Region::Rectangle { min, max } => {
                if !min.is_finite() || !max.is_finite() || !(max.x > min.x) || !(max.y > min.y) {
                    return bad("rectangle needs max > min in both coordinates".into());
                }
            }
            Region::Polygon(v) => {
                if v.len() < 3 {
                    return bad("polygon needs at least three vertices".into());
                }
                if !(signed_area(v) > z) {
                    return bad("polygon must be counter-clockwise with positive area".into());
                }
                if !is_simple(v) {
                    return bad("polygon is not simple".into());
                }
            }
            Region::AnnularSector { r_in, r_out, angle_start, angle_end, center } => {
                if !center.is_finite() || !(*r_in >= z) || !(*r_out > *r_in) || !r_out.is_finite() {
                    return bad(format!("annular sector needs 0 <= r_in < r_out, got {r_in}, {r_out}"));
                }
                if !(*angle_end > *angle_start) || *angle_end - *angle_start > T::TAU() {
                    return bad("annular sector angle range must be nonempty and at most 2π".into());
                }
            }
            Region::RadialGraphSector { inner, outer, angle_start, angle_end, center } => {
                if !center.is_finite() || inner.len() != outer.len() || inner.len() < 2 {
                    return bad("radial sector needs matching inner/outer samples (at least two)".into());
                }
                if !(*angle_end > *angle_start) || *angle_end - *angle_start > T::TAU() {
                    return bad("radial sector angle range must be nonempty and at most 2π".into());
                }
                if inner.iter().chain(outer).any(|r| !(*r >= z) || !r.is_finite()) {
                    return bad("radial sector radii must be finite and nonnegative".into());
                }
                if inner.iter().zip(outer).any(|(a, b)| a > b) || !inner.iter().zip(outer).any(|(a, b)| a < b) {
                    return bad("radial sector needs inner <= outer with positive area".into());
                }
            }
            Region::Union(parts) => {
                if parts.is_empty() {
                    return bad("empty union".into());
                }
                for p in parts {
                    p.validate()?;
                }
            }
            Region::Difference(a, b) => {
                a.validate()?;
                b.validate()?;
            }
        }
        Ok(())
    }

    /// Membership test; boundary points count as inside.
    pub fn contains(&self, x: Point2<T>) -> bool {
        let slack = T::one() + T::of(BOUNDARY_ULPS) * T::epsilon();
        match self {
            Region::Disk { center, radius } => (x - *center).norm_sq() <= *radius * *radius * slack,
            Region::Rectangle { min, max } => x.x >= min.x && x.x <= max.x && x.y >= min.y && x.y <= max.y,
            Region::Polygon(v) => polygon_contains(v, x),
            Region::AnnularSector { center, r_in, r_out, angle_start, angle_end } => {
                let d = x - *center;
                let rho = d.norm();
                if rho > *r_out * slack || rho * slack < *r_in {
                    return false;
                }
                if rho == T::zero() {
                    return *r_in == T::zero();
                }
                angle_in_range(d.y.atan2(d.x), *angle_start, *angle_end).is_some()
            }
            Region::RadialGraphSector { center, angle_start, angle_end, inner, outer } => {
                let d = x - *center;
                let rho = d.norm();
                if rho == T::zero() {
                    return inner.iter().any(|r| *r == T::zero());
                }
                let Some(theta) = angle_in_range(d.y.atan2(d.x), *angle_start, *angle_end) else {
                    return false;
                };
                let (lo, hi) = interpolate_radii(inner, outer, *angle_start, *angle_end, theta);
                rho * slack >= lo && rho <= hi * slack
            }
            Region::Union(parts) => parts.iter().any(|p| p.contains(x)),
            Region::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    /// Bounding box (conservative for curved radial sectors).
    pub fn bounding_box(&self) -> Aabb<T> {
        match self {
            Region::Disk { center, radius } => Aabb {
                min: *center - Point2::new(*radius, *radius),
                max: *center + Point2::new(*radius, *radius),
            },
            Region::Rectangle { min, max } => Aabb { min: *min, max: *max },
            Region::Polygon(v) => Aabb::from_points(v.iter().copied()).expect("validated polygon"),
            Region::AnnularSector { center, r_in, r_out, angle_start, angle_end } => {
                let mut pts = vec![
                    *center + Point2::polar(*angle_start) * *r_in,
                    *center + Point2::polar(*angle_end) * *r_in,
                    *center + Point2::polar(*angle_start) * *r_out,
                    *center + Point2::polar(*angle_end) * *r_out,
                ];
                pts.extend(cardinal_points(*center, *r_out, *angle_start, *angle_end));
                Aabb::from_points(pts).expect("nonempty")
            }
            Region::RadialGraphSector { center, angle_start, angle_end, inner, outer } => {
                let n = outer.len();
                let step = (*angle_end - *angle_start) / T::of((n - 1) as f64);
                let mut pts = Vec::with_capacity(4 * n);
                for k in 0..n - 1 {
                    let a0 = *angle_start + step * T::of(k as f64);
                    let a1 = if k + 2 == n { *angle_end } else { a0 + step };
                    let r = outer[k].max(outer[k + 1]);
                    pts.push(*center + Point2::polar(a0) * r);
                    pts.push(*center + Point2::polar(a1) * r);
                    pts.push(*center + Point2::polar(a0) * inner[k]);
                    pts.push(*center + Point2::polar(a1) * inner[k + 1]);
                    pts.extend(cardinal_points(*center, r, a0, a1));
                }
                Aabb::from_points(pts).expect("nonempty")
            }
            Region::Union(parts) => parts
                .iter()
                .map(|p| p.bounding_box())
                .reduce(|a, b| a.union(b))
                .expect("validated union"),
            Region::Difference(a, _) => a.bounding_box(),
        }
    }

    /// Exact area for primitives; `None` for composite regions.
    pub fn area(&self) -> Option<T> {
        let half = T::of(0.5);
        match self {
            Region::Disk { radius, .. } => Some(T::PI() * *radius * *radius),
            Region::Rectangle { min, max } => Some((max.x - min.x) * (max.y - min.y)),
            Region::Polygon(v) => Some(signed_area(v)),
            Region::AnnularSector { r_in, r_out, angle_start, angle_end, .. } => {
                Some(half * (*angle_end - *angle_start) * (*r_out * *r_out - *r_in * *r_in))
            }
            Region::RadialGraphSector { .. } | Region::Union(_) | Region::Difference(..) => None,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Region<U> {
        let c = |v: T| U::of(v.to_f64_lossy());
        match self {
            Region::Disk { center, radius } => Region::Disk { center: center.cast(), radius: c(*radius) },
            Region::Rectangle { min, max } => Region::Rectangle { min: min.cast(), max: max.cast() },
            Region::Polygon(v) => Region::Polygon(v.iter().map(|p| p.cast()).collect()),
            Region::AnnularSector { center, r_in, r_out, angle_start, angle_end } => Region::AnnularSector {
                center: center.cast(),
                r_in: c(*r_in),
                r_out: c(*r_out),
                angle_start: c(*angle_start),
                angle_end: c(*angle_end),
            },
            Region::RadialGraphSector { center, angle_start, angle_end, inner, outer } => Region::RadialGraphSector {
                center: center.cast(),
                angle_start: c(*angle_start),
                angle_end: c(*angle_end),
                inner: inner.iter().map(|v| c(*v)).collect(),
                outer: outer.iter().map(|v| c(*v)).collect(),
            },
            Region::Union(parts) => Region::Union(parts.iter().map(|p| p.cast()).collect()),
            Region::Difference(a, b) => Region::Difference(Box::new(a.cast()), Box::new(b.cast())),
        }
    }
}

/// Maps `theta` into `[start, start + 2π)` and returns it if it falls in
/// `[start, end]` (with a tiny angular slack).
fn angle_in_range<T: Scalar>(theta: T, start: T, end: T) -> Option<T> {
    let tau = T::TAU();
    let slack = T::of(1e-12);
    let mut a = theta;
    while a < start - slack {
        a = a + tau;
    }
    while a > start + tau - slack {
        a = a - tau;
    }
    if a <= end + slack {
        Some(a.max(start).min(end))
    } else if a - tau >= start - slack {
        Some(start)
    } else {
        None
    }
}

fn interpolate_radii<T: Scalar>(inner: &[T], outer: &[T], start: T, end: T, theta: T) -> (T, T) {
    let n = inner.len();
    let s = (theta - start) / (end - start) * T::of((n - 1) as f64);
    let k = s.floor().to_usize().unwrap_or(0).min(n - 2);
    let w = (s - T::of(k as f64)).max(T::zero()).min(T::one());
    let lerp = |v: &[T]| v[k] + (v[k + 1] - v[k]) * w;
    (lerp(inner), lerp(outer))
}

fn cardinal_points<T: Scalar>(center: Point2<T>, r: T, a0: T, a1: T) -> Vec<Point2<T>> {
    let half_pi = T::FRAC_PI_2();
    let first = (a0 / half_pi).ceil().to_i64().unwrap_or(0);
    let last = (a1 / half_pi).floor().to_i64().unwrap_or(-1);
    (first..=last).map(|k| center + Point2::polar(half_pi * T::of(k as f64)) * r).collect()
}

pub(crate) fn signed_area<T: Scalar>(v: &[Point2<T>]) -> T {
    let n = v.len();
    let s = (0..n).map(|i| v[i].cross(v[(i + 1) % n])).fold(T::zero(), |a, b| a + b);
    s * T::of(0.5)
}

fn segments_intersect<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>, d: Point2<T>) -> bool {
    let o = |p: Point2<T>, q: Point2<T>, r: Point2<T>| (q - p).cross(r - p);
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    let z = T::zero();
    ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z))
}

fn is_simple<T: Scalar>(v: &[Point2<T>]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn polygon_contains<T: Scalar>(v: &[Point2<T>], x: Point2<T>) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        // on-edge counts as inside
        let ab = b - a;
        if (x - a).cross(ab) == T::zero() && (x - a).dot(ab) >= T::zero() && (x - b).dot(-ab) >= T::zero() {
            return true;
        }
        if (a.y > x.y) != (b.y > x.y) {
            let xc = a.x + (x.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x.x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// One quadrature node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample<T> {
    pub point: Point2<T>,
    pub weight: T,
}

/// Finite measure μ as weighted sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureMeasure<T> {
    samples: Vec<Sample<T>>,
    total_mass: T,
    atomic: bool,
    cell_size: Option<T>,
}

impl<T: Scalar> QuadratureMeasure<T> {
    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True for measures built from explicit atoms, which do not vanish on
    /// sets of finite length.
    pub fn is_atomic(&self) -> bool {
        self.atomic
    }

    /// Bounding box of the sample points.
    pub fn bounding_box(&self) -> Option<Aabb<T>> {
        Aabb::from_points(self.samples.iter().map(|s| s.point))
    }

    /// Grid spacing when built by [`discretize_region`].
    pub fn cell_size(&self) -> Option<T> {
        self.cell_size
    }

    /// The zero measure. Kept separate from the constructors, which reject
    /// empty sample sets.
    pub fn zero() -> Self {
        Self { samples: Vec::new(), total_mass: T::zero(), atomic: false, cell_size: None }
    }

    /// Keeps the samples for which `keep` holds.
    pub fn filtered(&self, mut keep: impl FnMut(usize, &Sample<T>) -> bool) -> Self {
        let samples: Vec<Sample<T>> =
            self.samples.iter().enumerate().filter(|(i, s)| keep(*i, s)).map(|(_, s)| *s).collect();
        let weights: Vec<T> = samples.iter().map(|s| s.weight).collect();
        Self { total_mass: pairwise(&weights), samples, atomic: self.atomic, cell_size: self.cell_size }
    }

    pub fn translated(&self, by: Point2<T>) -> Self {
        let mut m = self.clone();
        for s in &mut m.samples {
            s.point += by;
        }
        m
    }

    pub fn cast<U: Scalar>(&self) -> QuadratureMeasure<U> {
        let samples: Vec<Sample<U>> = self
            .samples
            .iter()
            .map(|s| Sample { point: s.point.cast(), weight: U::of(s.weight.to_f64_lossy()) })
            .collect();
        let weights: Vec<U> = samples.iter().map(|s| s.weight).collect();
        QuadratureMeasure {
            total_mass: pairwise(&weights),
            samples,
            atomic: self.atomic,
            cell_size: self.cell_size.map(|h| U::of(h.to_f64_lossy())),
        }
    }
}

/// Midpoint rule on the grid of cell size `h` anchored at the lower-left
/// corner of the region's bounding box. Samples are emitted row by row
/// (y outer, x inner).
pub fn discretize_region<T: Scalar>(r: &Region<T>, h: T) -> Result<QuadratureMeasure<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("cell size must be positive, got {h}")));
    }
    r.validate()?;
    let bb = r.bounding_box();
    let cells = |len: T| -> usize {
        let c = (len / h - T::of(1e-9)).ceil();
        c.to_usize().unwrap_or(0).max(1)
    };
    let (nx, ny) = (cells(bb.width()), cells(bb.height()));
    let half = T::of(0.5);
    let weight = h * h;
    let rows: Vec<Vec<Sample<T>>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let y = bb.min.y + (T::of(j as f64) + half) * h;
            (0..nx)
                .filter_map(|i| {
                    let p = Point2::new(bb.min.x + (T::of(i as f64) + half) * h, y);
                    r.contains(p).then_some(Sample { point: p, weight })
                })
                .collect()
        })
        .collect();
    let samples: Vec<Sample<T>> = rows.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::DegenerateMeasure(format!("no cell center of the h = {h} grid lies in the region")));
    }
    let weights: Vec<T> = samples.iter().map(|s| s.weight).collect();
    Ok(QuadratureMeasure { total_mass: pairwise(&weights), samples, atomic: false, cell_size: Some(h) })
}

/// Atomic measure with exactly the given atoms.
pub fn from_points<T: Scalar>(pts: &[(Point2<T>, T)]) -> Result<QuadratureMeasure<T>> {
    if pts.is_empty() {
        return Err(Error::DegenerateMeasure("no atoms given".into()));
    }
    if let Some((p, w)) = pts.iter().find(|(p, w)| !(*w > T::zero()) || !w.is_finite() || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "atom at ({}, {}) has nonpositive or non-finite weight {w}",
            p.x, p.y
        )));
    }
    let samples: Vec<Sample<T>> = pts.iter().map(|&(point, weight)| Sample { point, weight }).collect();
    let weights: Vec<T> = samples.iter().map(|s| s.weight).collect();
    Ok(QuadratureMeasure { total_mass: pairwise(&weights), samples, atomic: true, cell_size: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    type P = Point2<f64>;

    #[test]
    fn membership() {
        let d = Region::disk(P::zero(), 1.0).unwrap();
        assert!(d.contains(P::new(0.5, 0.0)));
        assert!(d.contains(P::new(1.0, 0.0)));
        let ring = Region::difference(d.clone(), Region::disk(P::zero(), 0.5).unwrap()).unwrap();
        assert!(!ring.contains(P::new(0.25, 0.0)));
        assert!(ring.contains(P::new(0.75, 0.0)));
        let sec = Region::annular_sector(P::zero(), 1.0, 2.0, 0.0, FRAC_PI_2).unwrap();
        assert!(sec.contains(P::polar(FRAC_PI_4) * 1.5));
        assert!(!sec.contains(P::polar(-FRAC_PI_4) * 1.5));
        assert!(!sec.contains(P::polar(FRAC_PI_4) * 0.5));
        let wrap = Region::annular_sector(P::zero(), 0.0, 1.0, FRAC_PI_2, 3.0 * FRAC_PI_2).unwrap();
        assert!(wrap.contains(P::new(-0.5, 0.0)));
        assert!(wrap.contains(P::new(-0.5, -0.0)));
        assert!(!wrap.contains(P::new(0.5, 0.0)));
        assert!(wrap.contains(P::zero()));
        let tri = Region::polygon(vec![P::new(0.0, 0.0), P::new(1.0, 0.0), P::new(0.0, 1.0)]).unwrap();
        assert!(tri.contains(P::new(0.2, 0.2)));
        assert!(tri.contains(P::new(0.5, 0.5)));
        assert!(!tri.contains(P::new(0.6, 0.6)));
    }

    #[test]
    fn invalid_regions() {
        assert!(Region::disk(P::zero(), 0.0).is_err());
        assert!(Region::rectangle(P::new(0.0, 0.0), P::new(0.0, 1.0)).is_err());
        assert!(Region::polygon(vec![P::new(0.0, 0.0), P::new(0.0, 1.0), P::new(1.0, 0.0)]).is_err());
        let bowtie = vec![P::new(0.0, 0.0), P::new(1.0, 1.0), P::new(1.0, 0.0), P::new(0.0, 1.0)];
        assert!(Region::polygon(bowtie).is_err());
        assert!(Region::annular_sector(P::zero(), 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Region::<f64>::union(vec![]).is_err());
    }

    #[test]
    fn radial_sector_matches_annulus() {
        let a = Region::annular_sector(P::new(0.3, -0.2), 0.5, 1.0, 0.2, 1.7).unwrap();
        let b = Region::radial_graph_sector(P::new(0.3, -0.2), 0.2, 1.7, 5, |_| 0.5, |_| 1.0).unwrap();
        for k in 0..500 {
            let x = P::new(0.3 + 1.1 * (k as f64 * 0.77).cos(), -0.2 + 1.1 * (k as f64 * 0.31).sin());
            assert_eq!(a.contains(x), b.contains(x), "{x:?}");
        }
    }

    #[test]
    fn midpoint_masses() {
        let d = discretize_region(&Region::disk(P::zero(), 1.0).unwrap(), 0.01).unwrap();
        assert!((d.total_mass() - PI).abs() / PI < 5e-3);
        let r = discretize_region(&Region::rectangle(P::new(0.0, 0.0), P::new(2.0, 1.0)).unwrap(), 0.1).unwrap();
        assert_eq!(r.len(), 200);
        assert_relative_eq!(r.total_mass(), 2.0, epsilon = 1e-12);
        let a = Region::rectangle(P::new(0.0, 0.0), P::new(1.0, 1.0)).unwrap();
        let b = Region::rectangle(P::new(2.0, 0.0), P::new(3.0, 1.0)).unwrap();
        let u = discretize_region(&Region::union(vec![a.clone(), b.clone()]).unwrap(), 0.1).unwrap();
        let ma = discretize_region(&a, 0.1).unwrap().total_mass();
        let mb = discretize_region(&b, 0.1).unwrap().total_mass();
        assert_relative_eq!(u.total_mass(), ma + mb, epsilon = 1e-12);
        // row-major ordering
        let s = r.samples();
        assert!(s[0].point.y == s[19].point.y && s[0].point.x < s[19].point.x && s[20].point.y > s[0].point.y);
    }

    #[test]
    fn degenerate_measures() {
        assert!(matches!(from_points::<f64>(&[]), Err(Error::DegenerateMeasure(_))));
        assert!(from_points(&[(P::new(0.0, 0.0), 0.0)]).is_err());
        let m = from_points(&[(P::new(3.0, 4.0), 1.0)]).unwrap();
        assert_eq!(m.total_mass(), 1.0);
        assert!(m.is_atomic());
        let m = from_points(&[(P::new(0.0, 0.0), 2.0), (P::new(1.0, 0.0), 3.0)]).unwrap();
        assert_eq!(m.total_mass(), 5.0);
        assert!(discretize_region(&Region::disk(P::zero(), 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn disk_mass_converges_under_refinement() {
        let d = Region::disk(P::new(0.1, 0.05), 1.0).unwrap();
        let errs: Vec<f64> =
            [0.04, 0.02, 0.01].iter().map(|&h| (discretize_region(&d, h).unwrap().total_mass() - PI).abs()).collect();
        // first order or better, up to the noise of lattice counts
        assert!(errs[2] < 0.04 * 2.0 * PI, "{errs:?}");
        assert!(errs[2] < errs[0], "{errs:?}");
    }
}
