//! Boustrophedon sweeps inside convex cells.
//!
//! Lines run parallel to the sweep direction and are spaced one coverage
//! radius apart; the first and last lines sit half a radius inside the cell.
//! Connectors between consecutive lines are straight, which stays inside the
//! cell because cells are convex.

use alloc::vec::Vec;

use crate::decompose::ConvexCell;
use crate::error::{Error, Result};
use crate::geometry::{msa_direction, Point2, Polygon, EPS};

/// One sweep line clipped to the cell; `left` has the smaller coordinate
/// along the sweep direction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepLine {
    pub left: Point2,
    pub right: Point2,
}

impl SweepLine {
    pub fn length(&self) -> f64 {
        self.left.distance(self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPath {
    /// Lines in offset order, starting next to the reference edge.
    pub lines: Vec<SweepLine>,
    pub direction: Point2,
    /// Waypoints for `endpoint_pairs[0]`.
    pub waypoints: Vec<Point2>,
    pub sweep_count: usize,
    pub turn_count: usize,
    /// Realized polyline length of `waypoints`.
    pub length: f64,
    /// `[first-line-left, first-line-right, last-line-left, last-line-right]`
    /// starts with their induced ends.
    pub endpoint_pairs: [(Point2, Point2); 4],
    /// Set when the cell is no wider than the radius and a single midline
    /// pass is emitted.
    pub degenerate: bool,
}

impl SweepPath {
    /// Waypoints when entering through `endpoint_pairs[pair]`.
    pub fn oriented(&self, pair: usize) -> Vec<Point2> {
        let n = self.lines.len();
        let from_last = pair >= 2;
        let mut on_left = pair % 2 == 0;
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let line = if from_last { self.lines[n - 1 - j] } else { self.lines[j] };
            if on_left {
                out.push(line.left);
                out.push(line.right);
            } else {
                out.push(line.right);
                out.push(line.left);
            }
            on_left = !on_left;
        }
        out
    }

    pub fn oriented_length(&self, pair: usize) -> f64 {
        polyline_length(&self.oriented(pair))
    }

    pub fn line_lengths(&self) -> Vec<f64> {
        self.lines.iter().map(SweepLine::length).collect()
    }
}

/// Sum of Euclidean segment lengths.
pub fn path_length(waypoints: &[Point2]) -> Result<f64> {
    if waypoints.len() < 2 {
        return Err(Error::Degenerate("path length needs at least 2 waypoints"));
    }
    Ok(polyline_length(waypoints))
}

pub(crate) fn polyline_length(waypoints: &[Point2]) -> f64 {
    waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// U-turns in the path: one per connector.
pub fn turn_count(path: &SweepPath) -> usize {
    path.sweep_count.saturating_sub(1)
}

/// Number of lines needed to sweep `span` at spacing `r`.
pub fn sweep_count_for_span(span: f64, r: f64) -> usize {
    let n = libm::ceil(span / r - EPS);
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

/// Boustrophedon along the cell's cached MSA direction.
pub fn boustrophedon(cell: &ConvexCell, r: f64) -> Result<SweepPath> {
    sweep_along(&cell.polygon, cell.msa.direction, r)
}

/// Boustrophedon along the MSA direction of a convex polygon.
pub fn boustrophedon_polygon(p: &Polygon, r: f64) -> Result<SweepPath> {
    let msa = msa_direction(p)?;
    sweep_along(p, msa.direction, r)
}

pub fn endpoint_pairs(cell: &ConvexCell, r: f64) -> Result<[(Point2, Point2); 4]> {
    Ok(boustrophedon(cell, r)?.endpoint_pairs)
}

/// Boustrophedon of a convex polygon with lines parallel to `direction`.
pub fn sweep_along(p: &Polygon, direction: Point2, r: f64) -> Result<SweepPath> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Precondition("coverage radius must be positive"));
    }
    let d = direction.normalized();
    if !d.is_finite() {
        return Err(Error::Precondition("sweep direction must be non-zero"));
    }
    let normal = d.perp();
    let (hmin, hmax) = p
        .vertices()
        .iter()
        .map(|v| v.dot(normal))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)));
    let span = hmax - hmin;
    let n = sweep_count_for_span(span, r);
    let degenerate = n == 1;

    let mut lines = Vec::with_capacity(n);
    for k in 0..n {
        let offset = if degenerate {
            0.5 * span
        } else {
            ((k as f64 + 0.5) * r).min(span - 0.5 * r)
        };
        if let Some(line) = chord(p, d, normal, hmin + offset) {
            lines.push(line);
        }
    }
    if lines.is_empty() {
        return Err(Error::Degenerate("no sweep line intersects the cell"));
    }

    let mut path = SweepPath {
        sweep_count: lines.len(),
        turn_count: lines.len() - 1,
        lines,
        direction: d,
        waypoints: Vec::new(),
        length: 0.0,
        endpoint_pairs: [(Point2::default(), Point2::default()); 4],
        degenerate,
    };
    for pair in 0..4 {
        let w = path.oriented(pair);
        path.endpoint_pairs[pair] = (w[0], w[w.len() - 1]);
    }
    path.waypoints = path.oriented(0);
    path.length = polyline_length(&path.waypoints);
    Ok(path)
}

/// Intersection of the line `{q : q·normal = h}` with a convex polygon.
fn chord(p: &Polygon, d: Point2, normal: Point2, h: f64) -> Option<SweepLine> {
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    let mut hit = |q: Point2| {
        let t = q.dot(d);
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    };
    for i in 0..p.len() {
        let (a, b) = p.edge(i);
        let (ha, hb) = (a.dot(normal), b.dot(normal));
        if (ha - h) * (hb - h) > 0.0 {
            continue;
        }
        if (ha - hb).abs() <= f64::EPSILON * ha.abs().max(1.0) {
            if (ha - h).abs() <= EPS {
                hit(a);
                hit(b);
            }
            continue;
        }
        let s = (h - ha) / (hb - ha);
        hit(a.lerp(b, s));
    }
    if tmin > tmax {
        return None;
    }
    let at = |t: f64| d * t + normal * h;
    Some(SweepLine {
        left: at(tmin),
        right: at(tmax),
    })
}
