//! Deterministic SVG rendering of trajectories, diagrams and regions.
//!
//! Coordinates are printed with a fixed number of decimals so identical
//! inputs give byte-identical documents.

use std::fmt::Write as _;

use crate::classify::{AllowedIntervals, CausticCurve, CausticKind, DiagramCell, DiagramScan, OrbitLabel};
use crate::coords::{elliptic_to_q, q_to_elliptic, EllipticPoint, QPoint};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::PhysConfig;

pub const ELECTRON: &str = "#ff8c00";
pub const POSITRON: &str = "#1f5fd6";
pub const CENTER_OF_MASS: &str = "#d62020";
pub const COULOMB: &str = "#e00000";
pub const CAUSTIC: &str = "#000000";
pub const SHADE: &str = "#c8c8c8";
pub const LINE1: &str = "#d62020";
pub const LINE2: &str = "#1f5fd6";
pub const DISCRIMINANT: &str = "#1a9e3a";

const PANEL: f64 = 480.0;
const MARGIN: f64 = 40.0;
const REGION_RASTER: usize = 240;
const CURVE_POINTS: usize = 400;

#[derive(Debug, Clone, Copy)]
struct Bounds {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Bounds {
    fn of(points: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let mut b: Option<Bounds> = None;
        for (x, y) in points {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            b = Some(match b {
                None => Bounds { x0: x, x1: x, y0: y, y1: y },
                Some(b) => Bounds {
                    x0: b.x0.min(x),
                    x1: b.x1.max(x),
                    y0: b.y0.min(y),
                    y1: b.y1.max(y),
                },
            });
        }
        b
    }

    /// Square box around the data with a 5% pad, for equal axis scales.
    fn squared(self) -> Self {
        let cx = 0.5 * (self.x0 + self.x1);
        let cy = 0.5 * (self.y0 + self.y1);
        let half = 0.5 * (self.x1 - self.x0).max(self.y1 - self.y0).max(1e-9) * 1.05;
        Bounds {
            x0: cx - half,
            x1: cx + half,
            y0: cy - half,
            y1: cy + half,
        }
    }
}

/// Maps data coordinates into one square panel.
#[derive(Debug, Clone, Copy)]
struct Panel {
    left: f64,
    top: f64,
    b: Bounds,
}

impl Panel {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = PANEL / (self.b.x1 - self.b.x0);
        let sy = PANEL / (self.b.y1 - self.b.y0);
        (self.left + (x - self.b.x0) * sx, self.top + PANEL - (y - self.b.y0) * sy)
    }

    fn dx(&self) -> f64 {
        (self.b.x1 - self.b.x0) / PANEL
    }

    fn dy(&self) -> f64 {
        (self.b.y1 - self.b.y0) / PANEL
    }
}

struct Doc {
    out: String,
    clips: usize,
}

impl Doc {
    fn new(width: f64, height: f64) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = width,
            h = height
        );
        let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>");
        Doc { out, clips: 0 }
    }

    /// Frame with min/max tick labels; later content is clipped to it.
    fn open_panel(&mut self, p: &Panel, xlabel: &str, ylabel: &str, title: &str) {
        let id = self.clips;
        self.clips += 1;
        let _ = writeln!(
            self.out,
            "<clipPath id=\"c{id}\"><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{PANEL}\" height=\"{PANEL}\"/></clipPath>",
            p.left, p.top
        );
        let _ = writeln!(
            self.out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>",
            p.left, p.top
        );
        let text = |o: &mut String, x: f64, y: f64, anchor: &str, s: &str| {
            let _ = writeln!(
                o,
                "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{s}</text>"
            );
        };
        let bottom = p.top + PANEL;
        text(&mut self.out, p.left, bottom + 14.0, "start", &tick(p.b.x0));
        text(&mut self.out, p.left + PANEL, bottom + 14.0, "end", &tick(p.b.x1));
        text(&mut self.out, p.left + 0.5 * PANEL, bottom + 28.0, "middle", xlabel);
        text(&mut self.out, p.left - 4.0, bottom, "end", &tick(p.b.y0));
        text(&mut self.out, p.left - 4.0, p.top + 10.0, "end", &tick(p.b.y1));
        text(&mut self.out, p.left - 4.0, p.top + 0.5 * PANEL, "end", ylabel);
        text(&mut self.out, p.left + 0.5 * PANEL, p.top - 8.0, "middle", title);
        let _ = writeln!(self.out, "<g clip-path=\"url(#c{id})\">");
    }

    fn close_panel(&mut self) {
        self.out.push_str("</g>\n");
    }

    fn polyline(&mut self, p: &Panel, pts: &[(f64, f64)], color: &str, width: f64, dashed: bool) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::with_capacity(pts.len() * 16);
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (u, v) = p.px(x, y);
            let _ = write!(d, "{}{u:.2},{v:.2}", if i == 0 { "" } else { " " });
        }
        let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            self.out,
            "<polyline points=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash}/>"
        );
    }

    fn dot(&mut self, p: &Panel, x: f64, y: f64, r: f64, color: &str) {
        let (u, v) = p.px(x, y);
        let _ = writeln!(self.out, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"{r}\" fill=\"{color}\"/>");
    }

    /// Filled rectangle in data coordinates spanning `[x0, x1] x [y0, y1]`.
    fn cell(&mut self, p: &Panel, x0: f64, x1: f64, y0: f64, y1: f64, color: &str) {
        let (a, b) = p.px(x0, y1);
        let (c, d) = p.px(x1, y0);
        let _ = writeln!(
            self.out,
            "<rect x=\"{a:.2}\" y=\"{b:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" stroke=\"none\" shape-rendering=\"crispEdges\"/>",
            c - a,
            d - b
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Points of a caustic in the `q` plane, one polyline per connected arc.
fn caustic_arcs(c: &CausticCurve, cfg: &PhysConfig, reach: f64) -> Vec<Vec<(f64, f64)>> {
    let n = CURVE_POINTS;
    match c.kind {
        CausticKind::Ellipse => {
            // Run v from -1 to 1 over the upper half, then back over the lower.
            let mut pts = Vec::with_capacity(2 * n + 1);
            for k in 0..=2 * n {
                let s = std::f64::consts::PI * k as f64 / n as f64;
                let (v, sign) = if k <= n { (-s.cos(), 1) } else { (-s.cos(), -1) };
                let q = elliptic_to_q(EllipticPoint { u: c.parameter, v, sign_q2: sign }, cfg);
                pts.push((q.q1, q.q2));
            }
            vec![pts]
        }
        CausticKind::Hyperbola => {
            // u grows until the arc leaves the plotted window.
            let u_max = (reach / cfg.a).max(1.0) + 1.0;
            let mut pts = Vec::with_capacity(2 * n + 1);
            for k in -(n as i64)..=(n as i64) {
                let t = k as f64 / n as f64;
                let u = 1.0 + (u_max - 1.0) * t * t;
                let sign = if k < 0 { -1 } else { 1 };
                let q = elliptic_to_q(EllipticPoint { u, v: c.parameter, sign_q2: sign }, cfg);
                pts.push((q.q1, q.q2));
            }
            vec![pts]
        }
    }
}

fn caustic_bounds(caustics: &[CausticCurve], cfg: &PhysConfig) -> Option<Bounds> {
    let ellipses: Vec<f64> = caustics
        .iter()
        .filter(|c| c.kind == CausticKind::Ellipse)
        .map(|c| c.parameter)
        .collect();
    let u = ellipses.iter().copied().fold(f64::NAN, f64::max);
    if u.is_finite() {
        let qx = cfg.a * u;
        let qy = cfg.a * (u * u - 1.0).max(0.0).sqrt();
        Some(Bounds { x0: -qx, x1: qx, y0: -qy, y1: qy })
    } else {
        None
    }
}

fn draw_caustics(doc: &mut Doc, p: &Panel, caustics: &[CausticCurve], cfg: &PhysConfig) {
    let reach = 2.0 * (p.b.x1.abs().max(p.b.x0.abs()) + p.b.y1.abs().max(p.b.y0.abs()));
    for c in caustics {
        for arc in caustic_arcs(c, cfg, reach) {
            doc.polyline(p, &arc, CAUSTIC, 1.2, false);
        }
    }
}

/// Relative orbit in the `q` plane beside the two particle paths.
///
/// Particle 1 is the positron, particle 2 the electron.
pub fn trajectory_svg(traj: &Trajectory, cfg: &PhysConfig, caustics: &[CausticCurve]) -> Result<String> {
    if traj.samples.is_empty() {
        return Err(Error::EmptyPlot);
    }
    let rel: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.q.q1, s.q.q2)).collect();
    let mut rb = Bounds::of(rel.iter().copied().chain([(-cfg.a, 0.0)])).ok_or(Error::EmptyPlot)?;
    if let Some(cb) = caustic_bounds(caustics, cfg) {
        // Keep the whole allowed region in view when it is bounded and not huge.
        if (cb.x1 - cb.x0) < 4.0 * (rb.x1 - rb.x0).max(rb.y1 - rb.y0) + 1e-9 {
            rb = Bounds::of([(rb.x0, rb.y0), (rb.x1, rb.y1), (cb.x0, cb.y0), (cb.x1, cb.y1)]).unwrap();
        }
    }
    let p1: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.state.x1, s.state.y1)).collect();
    let p2: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.state.x2, s.state.y2)).collect();
    let cm: Vec<(f64, f64)> = p1
        .iter()
        .zip(&p2)
        .map(|(a, b)| (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1)))
        .collect();
    let lb = Bounds::of(p1.iter().chain(&p2).copied()).ok_or(Error::EmptyPlot)?;

    let left = Panel { left: MARGIN + 20.0, top: MARGIN, b: rb.squared() };
    let right = Panel { left: 2.0 * MARGIN + 40.0 + PANEL, top: MARGIN, b: lb.squared() };
    let mut doc = Doc::new(right.left + PANEL + MARGIN, PANEL + 2.0 * MARGIN + 20.0);

    doc.open_panel(&left, "q1", "q2", "relative orbit");
    draw_caustics(&mut doc, &left, caustics, cfg);
    doc.polyline(&left, &rel, "#404040", 0.8, false);
    doc.dot(&left, -cfg.a, 0.0, 4.0, COULOMB);
    doc.close_panel();

    doc.open_panel(&right, "x", "y", "particles");
    doc.polyline(&right, &p1, POSITRON, 1.0, false);
    doc.polyline(&right, &p2, ELECTRON, 1.0, false);
    doc.polyline(&right, &cm, CENTER_OF_MASS, 1.0, true);
    let n = p1.len();
    for &i in &[0, n / 2, n - 1] {
        doc.dot(&right, p1[i].0, p1[i].1, 3.0, POSITRON);
        doc.dot(&right, p2[i].0, p2[i].1, 3.0, ELECTRON);
    }
    doc.close_panel();
    Ok(doc.finish())
}

fn forbidden(c: &DiagramCell) -> bool {
    c.labels.is_empty() || c.labels.contains(&OrbitLabel::Forbidden)
}

/// Bifurcation diagram in the `(lambda_a, h_a)` plane.
pub fn diagram_svg(scan: &DiagramScan) -> Result<String> {
    if scan.cells.is_empty() {
        return Err(Error::EmptyPlot);
    }
    let ls = &scan.lambda_values;
    let hs = &scan.h_values;
    let b = Bounds::of(scan.cells.iter().map(|c| (c.lambda_a, c.h_a))).ok_or(Error::EmptyPlot)?;
    let b = if b.x1 > b.x0 && b.y1 > b.y0 {
        b
    } else {
        Bounds { x0: b.x0 - 0.5, x1: b.x1 + 0.5, y0: b.y0 - 0.5, y1: b.y1 + 0.5 }
    };
    let p = Panel { left: MARGIN + 20.0, top: MARGIN, b };
    let mut doc = Doc::new(PANEL + 2.0 * MARGIN + 20.0, PANEL + 2.0 * MARGIN + 20.0);
    doc.open_panel(&p, "lambda_a", "h_a", &format!("alpha_a = {}", tick(scan.alpha_a)));

    let half = |v: &[f64], i: usize| -> (f64, f64) {
        let lo = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
        let hi = if i + 1 == v.len() { v[i] } else { 0.5 * (v[i] + v[i + 1]) };
        (lo, hi)
    };
    // Forbidden cells, merged into runs along each row.
    for (r, _) in hs.iter().enumerate() {
        let row = &scan.cells[r * ls.len()..(r + 1) * ls.len()];
        let mut c = 0;
        while c < row.len() {
            if !forbidden(&row[c]) {
                c += 1;
                continue;
            }
            let start = c;
            while c < row.len() && forbidden(&row[c]) {
                c += 1;
            }
            let (x0, _) = half(ls, start);
            let (_, x1) = half(ls, c - 1);
            let (y0, y1) = half(hs, r);
            doc.cell(&p, x0, x1, y0, y1, SHADE);
        }
    }
    doc.polyline(&p, &scan.line1, LINE1, 1.5, false);
    doc.polyline(&p, &scan.line2, LINE2, 1.5, false);
    for &(l, h) in &scan.discriminant_locus {
        doc.dot(&p, l, h, 1.2, DISCRIMINANT);
    }
    doc.close_panel();
    Ok(doc.finish())
}

/// Allowed region in the `q` plane with its caustics and the Coulomb center.
pub fn region_svg(intervals: &AllowedIntervals, caustics: &[CausticCurve], cfg: &PhysConfig) -> Result<String> {
    if intervals.is_forbidden() {
        return Err(Error::ForbiddenRegion);
    }
    let b = caustic_bounds(caustics, cfg)
        .map(|cb| Bounds {
            x0: cb.x0.min(-cfg.a),
            ..cb
        })
        .unwrap_or(Bounds { x0: -3.0 * cfg.a, x1: 3.0 * cfg.a, y0: -3.0 * cfg.a, y1: 3.0 * cfg.a })
        .squared();
    let p = Panel { left: MARGIN + 20.0, top: MARGIN, b };
    let mut doc = Doc::new(PANEL + 2.0 * MARGIN + 20.0, PANEL + 2.0 * MARGIN + 20.0);
    doc.open_panel(&p, "q1", "q2", "allowed region");

    let n = REGION_RASTER;
    let (wx, wy) = (p.dx() * PANEL / n as f64, p.dy() * PANEL / n as f64);
    for j in 0..n {
        let y = b.y0 + (j as f64 + 0.5) * wy;
        let mut i = 0;
        while i < n {
            let inside = |i: usize| {
                let e = q_to_elliptic(QPoint::new(b.x0 + (i as f64 + 0.5) * wx, y), cfg);
                intervals.contains(e.u, e.v, 0.0)
            };
            if !inside(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && inside(i) {
                i += 1;
            }
            doc.cell(
                &p,
                b.x0 + start as f64 * wx,
                b.x0 + i as f64 * wx,
                b.y0 + j as f64 * wy,
                b.y0 + (j + 1) as f64 * wy,
                SHADE,
            );
        }
    }
    draw_caustics(&mut doc, &p, caustics, cfg);
    doc.dot(&p, 0.0, 0.0, 2.5, "#000000");
    doc.dot(&p, -cfg.a, 0.0, 4.0, COULOMB);
    doc.close_panel();
    Ok(doc.finish())
}
