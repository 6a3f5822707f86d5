//! Static SVG figures in scene units, y up.

use std::f64::consts::TAU;
use std::fmt::Write;

use adf_core::variation::CurvatureDistribution;
use adf_core::{Graph, Point, Region};

pub enum Overlay {
    /// Segments from sample points to their nearest feet on Σ.
    Quiver(Vec<(Point, Point)>),
    /// Points near the ridge set.
    Ridge(Vec<Point>),
    /// Arrows `(base, vector)`; used for descent directions.
    Arrows(Vec<(Point, Point)>),
    /// `−H_Σ` at the vertices carrying an atom.
    Curvature,
    /// Another network drawn faintly (e.g. the starting point of a descent).
    Ghost(Graph),
}

pub struct Figure {
    pub region: Option<Region>,
    pub graph: Graph,
    pub overlays: Vec<Overlay>,
}

const WIDTH: f64 = 720.0;

struct View {
    min: Point,
    scale: f64,
    height: f64,
}

impl View {
    fn x(&self, p: Point) -> f64 {
        (p.x - self.min.x) * self.scale
    }
    fn y(&self, p: Point) -> f64 {
        self.height - (p.y - self.min.y) * self.scale
    }
    fn xy(&self, p: Point) -> String {
        format!("{:.3},{:.3}", self.x(p), self.y(p))
    }
}

fn region_outlines(r: &Region, out: &mut Vec<Vec<Point>>) {
    match r {
        Region::Disk { center, radius } => {
            out.push((0..=256).map(|k| *center + Point::polar(TAU * k as f64 / 256.0) * *radius).collect())
        }
        Region::Rectangle { min, max } => out.push(vec![
            *min,
            Point::new(max.x, min.y),
            *max,
            Point::new(min.x, max.y),
            *min,
        ]),
        Region::Polygon(v) => {
            let mut v = v.clone();
            v.push(v[0]);
            out.push(v);
        }
        Region::AnnularSector { center, r_in, r_out, angle_start, angle_end } => {
            let n = 128;
            let at = |k: usize, r: f64| *center + Point::polar(angle_start + (angle_end - angle_start) * k as f64 / n as f64) * r;
            let mut v: Vec<Point> = (0..=n).map(|k| at(k, *r_out)).collect();
            v.extend((0..=n).rev().map(|k| at(k, *r_in)));
            v.push(v[0]);
            out.push(v);
        }
        Region::RadialGraphSector { center, angle_start, angle_end, inner, outer } => {
            let n = inner.len() - 1;
            let at = |k: usize, r: f64| *center + Point::polar(angle_start + (angle_end - angle_start) * k as f64 / n as f64) * r;
            let stride = (n / 256).max(1);
            let mut ks: Vec<usize> = (0..=n).step_by(stride).collect();
            if *ks.last().unwrap() != n {
                ks.push(n);
            }
            let mut v: Vec<Point> = ks.iter().map(|&k| at(k, outer[k])).collect();
            v.extend(ks.iter().rev().map(|&k| at(k, inner[k])));
            v.push(v[0]);
            out.push(v);
        }
        Region::Union(parts) => parts.iter().for_each(|p| region_outlines(p, out)),
        Region::Difference(a, b) => {
            region_outlines(a, out);
            region_outlines(b, out);
        }
    }
}

fn polyline(s: &mut String, v: &View, pts: &[Point], style: &str) {
    let d: Vec<String> = pts.iter().map(|p| v.xy(*p)).collect();
    let _ = writeln!(s, r#"<polyline points="{}" {style}/>"#, d.join(" "));
}

fn graph_edges(s: &mut String, v: &View, g: &Graph, style: &str) {
    for e in 0..g.edge_count() {
        let (a, b) = g.edge_points(e);
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" {style}/>"#,
            v.x(a),
            v.y(a),
            v.x(b),
            v.y(b)
        );
    }
}

fn arrow(s: &mut String, v: &View, from: Point, to: Point, color: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="1" marker-end="url(#head)"/>"#,
        v.x(from),
        v.y(from),
        v.x(to),
        v.y(to)
    );
}

/// Renders the figure as a standalone SVG document.
pub fn render_svg(fig: &Figure) -> String {
    let mut outlines = Vec::new();
    if let Some(r) = &fig.region {
        region_outlines(r, &mut outlines);
    }
    let mut pts: Vec<Point> = outlines.iter().flatten().copied().collect();
    pts.extend_from_slice(fig.graph.vertices());
    if pts.is_empty() {
        pts.push(Point::zero());
    }
    let (mut min, mut max) = (pts[0], pts[0]);
    for p in &pts {
        min = Point::new(min.x.min(p.x), min.y.min(p.y));
        max = Point::new(max.x.max(p.x), max.y.max(p.y));
    }
    let pad = 0.05 * (max.x - min.x).max(max.y - min.y).max(1e-6);
    min -= Point::new(pad, pad);
    max += Point::new(pad, pad);
    let scale = WIDTH / (max.x - min.x);
    let height = (max.y - min.y) * scale;
    let v = View { min, scale, height };
    let unit = 1.0 / scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.3} {height:.3}">"#
    );
    s.push_str(
        r#"<defs><marker id="head" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>
<rect width="100%" height="100%" fill="white"/>
"#,
    );
    for o in &outlines {
        polyline(&mut s, &v, o, r##"fill="#eef3fb" stroke="#7a8fb0" stroke-width="1""##);
    }
    for ov in &fig.overlays {
        match ov {
            Overlay::Quiver(segs) => {
                for (a, b) in segs {
                    arrow(&mut s, &v, *a, *b, "#9aa5b1");
                }
            }
            Overlay::Ridge(p) => {
                for q in p {
                    let _ = writeln!(s, r##"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="#d9822b"/>"##, v.x(*q), v.y(*q));
                }
            }
            Overlay::Ghost(g) => graph_edges(&mut s, &v, g, r##"stroke="#b8b8b8" stroke-width="1.5" stroke-dasharray="4 3""##),
            Overlay::Arrows(_) | Overlay::Curvature => {}
        }
    }
    graph_edges(&mut s, &v, &fig.graph, r##"stroke="#1b2a41" stroke-width="2""##);
    for ov in &fig.overlays {
        match ov {
            Overlay::Arrows(a) => {
                let longest = a.iter().map(|(_, d)| d.norm()).fold(0.0, f64::max);
                if longest > 0.0 {
                    // longest arrow is 40 px
                    let k = 40.0 * unit / longest;
                    for (p, d) in a.iter().filter(|(_, d)| d.norm() > 1e-3 * longest) {
                        arrow(&mut s, &v, *p, *p + *d * k, "#c0392b");
                    }
                }
            }
            Overlay::Curvature if !fig.graph.is_empty() => {
                let h = CurvatureDistribution::of(&fig.graph);
                for (p, a) in fig.graph.vertices().iter().zip(&h.atoms) {
                    if a.norm() > 1e-9 {
                        // atoms have norm at most the vertex degree
                        arrow(&mut s, &v, *p, *p - *a * (30.0 * unit), "#2e7d32");
                    }
                }
            }
            _ => {}
        }
    }
    s.push_str("</svg>\n");
    s
}
