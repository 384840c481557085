//! Plain SVG drawings of plans and simulated runs.
//!
//! World coordinates are in meters with y pointing up; the document flips
//! the axis once in a top-level group. Numbers are printed with fixed
//! precision so output is byte-stable.

use std::fmt::Write;

use coverplan_core::decompose::ConvexCell;
use coverplan_core::geometry::{Point2, Polygon};
use coverplan_core::sim::{SimReport, WorldSpec};
use coverplan_core::stitch::CoveragePlan;
use coverplan_core::sweep::SweepPath;

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

struct Canvas {
    body: String,
    lo: Point2,
    hi: Point2,
    stroke: f64,
}

impl Canvas {
    fn new(lo: Point2, hi: Point2) -> Self {
        let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
        let lo = Point2::new(lo.x - pad, lo.y - pad);
        let hi = Point2::new(hi.x + pad, hi.y + pad);
        Canvas {
            body: String::new(),
            lo,
            hi,
            stroke: 0.004 * (hi.x - lo.x).max(hi.y - lo.y),
        }
    }

    fn open_group(&mut self, id: &str) {
        let _ = writeln!(self.body, "<g id=\"{id}\">");
    }

    fn close_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    fn polygon(&mut self, p: &Polygon, fill: &str, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"{:.4}\"/>",
            points(p.vertices()),
            width * self.stroke
        );
    }

    fn polyline(&mut self, pts: &[Point2], stroke: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{:.4}\" stroke-linejoin=\"round\"/>",
            points(pts),
            width * self.stroke
        );
    }

    fn circle(&mut self, c: Point2, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"{:.4}\" fill=\"{fill}\"/>",
            c.x,
            c.y,
            r * self.stroke
        );
    }

    fn finish(self) -> String {
        let w = self.hi.x - self.lo.x;
        let h = self.hi.y - self.lo.y;
        let scale = 800.0 / w.max(h);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{:.4} {:.4} {:.4} {:.4}\">",
            w * scale,
            h * scale,
            self.lo.x,
            -self.hi.y,
            w,
            h
        );
        out.push_str("<g transform=\"scale(1,-1)\">\n");
        out.push_str(&self.body);
        out.push_str("</g>\n</svg>\n");
        out
    }
}

fn points(pts: &[Point2]) -> String {
    let mut s = String::new();
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.4},{:.4}", p.x, p.y);
    }
    s
}

fn bounds_of<'a>(pts: impl IntoIterator<Item = &'a Point2>) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.is_finite() {
        return (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
    }
    (lo, hi)
}

/// Layers: `polygon`, `cells`, `sweeps`, `classic` (when given), `path` and
/// `start`.
pub fn plan_svg(
    polygon: &Polygon,
    cells: &[ConvexCell],
    sweeps: &[SweepPath],
    plan: &CoveragePlan,
    classic: Option<&CoveragePlan>,
    start: Point2,
) -> String {
    let (lo, hi) = bounds_of(polygon.vertices().iter().chain(std::iter::once(&start)));
    let mut c = Canvas::new(lo, hi);
    c.open_group("polygon");
    c.polygon(polygon, "#f4f4f4", "#222222", 1.5);
    c.close_group();
    c.open_group("cells");
    for (i, cell) in cells.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        c.polygon(&cell.polygon, color, "#555555", 0.5);
    }
    c.close_group();
    c.open_group("sweeps");
    for s in sweeps {
        for line in &s.lines {
            c.polyline(&[line.left, line.right], "#ffffff", 0.4);
        }
    }
    c.close_group();
    if let Some(classic) = classic {
        c.open_group("classic");
        c.polyline(&classic.waypoints, "#888888", 0.6);
        c.close_group();
    }
    c.open_group("path");
    c.polyline(&plan.waypoints, "#111111", 0.8);
    c.close_group();
    c.open_group("start");
    c.circle(start, 3.0, "#d62728");
    c.close_group();
    c.finish()
}

/// Layers: `boundary`, `obstacles`, `plan`, `trajectory` and `replans`.
pub fn trajectory_svg(world: &WorldSpec, plan: &CoveragePlan, report: &SimReport) -> String {
    let (lo, hi) = bounds_of(world.boundary.vertices());
    let mut c = Canvas::new(lo, hi);
    c.open_group("boundary");
    c.polygon(&world.boundary, "#f4f4f4", "#222222", 1.5);
    for e in &world.events {
        if e.op == coverplan_core::sim::EventOp::MoveBoundary {
            c.polygon(&e.geometry, "none", "#222222", 0.8);
        }
    }
    c.close_group();
    c.open_group("obstacles");
    for e in &world.events {
        if e.op == coverplan_core::sim::EventOp::AddObstacle {
            c.polygon(&e.geometry, "#7f7f7f", "#222222", 0.8);
        }
    }
    c.close_group();
    c.open_group("plan");
    c.polyline(&plan.waypoints, "#9ecae1", 0.6);
    c.close_group();
    c.open_group("trajectory");
    c.polyline(&report.trajectory, "#08519c", 0.8);
    c.close_group();
    c.open_group("replans");
    for r in &report.replans {
        c.polygon(&r.new_polygon, "none", "#d62728", 0.8);
        c.circle(r.start, 3.0, "#d62728");
    }
    c.close_group();
    c.finish()
}
