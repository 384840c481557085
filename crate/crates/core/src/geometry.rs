//! Polygon primitives: orientation, convexity, simplification, ear-clipping
//! triangulation and the minimum-span sweep direction of convex cells.
//!
//! All lengths are meters. Polygons are counter-clockwise and implicitly
//! closed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Absolute tolerance for coincidence and convexity predicates.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(from = "[f64; 2]", into = "[f64; 2]")
)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Point2::new(libm::cos(theta), libm::sin(theta))
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        self + (other - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of triangle `abc`; positive when counter-clockwise.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    p.distance(closest_point_on_segment(p, a, b))
}

pub fn closest_point_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return a;
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let straddles = |a: f64, b: f64| (a > EPS && b < -EPS) || (a < -EPS && b > EPS);
    if straddles(d1, d2) && straddles(d3, d4) {
        return true;
    }
    let on = |d: f64, p: Point2, a: Point2, b: Point2| {
        d.abs() <= EPS && point_segment_distance(p, a, b) <= EPS
    };
    on(d1, p1, q1, q2) || on(d2, p2, q1, q2) || on(d3, q1, p1, p2) || on(d4, q2, p1, p2)
}

/// Shoelace area of a raw vertex loop; positive iff counter-clockwise.
pub fn signed_area(vertices: &[Point2]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::Degenerate("signed area needs at least 3 vertices"));
    }
    Ok(shoelace(vertices))
}

pub(crate) fn shoelace(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// True when no two edges of the loop intersect other than adjacent edges
/// at their shared vertex.
pub fn is_simple_loop(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        // Adjacent edge folding back onto this one.
        let c = vertices[(i + 2) % n];
        if orient(a, b, c).abs() <= EPS * (b - a).norm().max(1.0) && (b - a).dot(c - b) < 0.0 {
            return false;
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let p = vertices[j];
            let q = vertices[(j + 1) % n];
            if segments_intersect(a, b, p, q) {
                return false;
            }
        }
    }
    true
}

/// A simple, counter-clockwise polygon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "RawPolygon", into = "RawPolygon")
)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawPolygon {
    vertices: Vec<Point2>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawPolygon> for Polygon {
    type Error = Error;
    fn try_from(raw: RawPolygon) -> Result<Self> {
        Polygon::from_loop(raw.vertices)
    }
}

#[cfg(feature = "serde")]
impl From<Polygon> for RawPolygon {
    fn from(p: Polygon) -> Self {
        RawPolygon {
            vertices: p.vertices,
        }
    }
}

impl Polygon {
    /// Validates and wraps a counter-clockwise vertex loop.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        Self::validate_basic(&vertices)?;
        if shoelace(&vertices) <= 0.0 {
            return Err(Error::InvalidPolygon("vertices must be counter-clockwise"));
        }
        if !is_simple_loop(&vertices) {
            return Err(Error::InvalidPolygon("polygon is self-intersecting"));
        }
        Ok(Polygon { vertices })
    }

    /// Like [`Polygon::new`] but accepts either orientation.
    pub fn from_loop(mut vertices: Vec<Point2>) -> Result<Self> {
        Self::validate_basic(&vertices)?;
        if shoelace(&vertices) < 0.0 {
            vertices.reverse();
        }
        Polygon::new(vertices)
    }

    fn validate_basic(vertices: &[Point2]) -> Result<()> {
        if vertices.len() < 3 {
            return Err(Error::Degenerate("polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].distance(vertices[(i + 1) % n]) <= EPS {
                return Err(Error::InvalidPolygon("coincident consecutive vertices"));
            }
        }
        Ok(())
    }

    /// Skips the O(n²) simplicity scan; callers guarantee validity.
    pub(crate) fn from_trusted(vertices: Vec<Point2>) -> Self {
        debug_assert!(vertices.len() >= 3 && shoelace(&vertices) > 0.0);
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                a.distance(b)
            })
            .sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let n = self.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(a.distance(*b));
            }
        }
        best
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn closest_boundary_point(&self, p: Point2) -> Point2 {
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let c = closest_point_on_segment(p, a, b);
            let d = c.distance(p);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    /// Even-odd crossing test. Points on the boundary give an unspecified
    /// answer; pair with [`Polygon::distance_to_boundary`] when that matters.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        let n = self.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True when the segment `ab` crosses or touches the polygon boundary.
    pub fn segment_hits_boundary(&self, a: Point2, b: Point2) -> bool {
        (0..self.len()).any(|i| {
            let (p, q) = self.edge(i);
            segments_intersect(a, b, p, q)
        })
    }

    pub fn translated(&self, by: Point2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }
}

/// Convexity predicate; collinear consecutive edges are tolerated.
pub fn is_convex(p: &Polygon) -> bool {
    let v = p.vertices();
    let n = v.len();
    (0..n).all(|i| {
        let prev = v[(i + n - 1) % n];
        let cur = v[i];
        let next = v[(i + 1) % n];
        (cur - prev).cross(next - cur) >= -EPS
    })
}

/// Douglas-Peucker simplification of an open polyline. Endpoints are kept and
/// every dropped point lies within `tolerance` of the simplified chain.
pub fn simplify_polyline(points: &[Point2], tolerance: f64) -> Vec<Point2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let keep = douglas_peucker_mask(points, tolerance);
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

fn douglas_peucker_mask(points: &[Point2], tolerance: f64) -> Vec<bool> {
    let n = points.len();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (points[lo], points[hi]);
        let mut far = lo;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = point_segment_distance(*p, a, b);
            if d > far_d {
                far_d = d;
                far = i;
            }
        }
        if far_d > tolerance {
            keep[far] = true;
            stack.push((lo, far));
            stack.push((far, hi));
        }
    }
    keep
}

/// Douglas-Peucker on a closed loop. The loop is anchored at the vertex
/// farthest from the centroid and split again at the vertex farthest from that
/// anchor; both halves are simplified as open chains. Surviving vertices keep
/// their original cyclic order.
pub fn simplify_loop(points: &[Point2], tolerance: f64) -> Vec<Point2> {
    let n = points.len();
    if n <= 3 {
        return points.to_vec();
    }
    let area2 = 2.0 * shoelace(points);
    let centroid = if area2.abs() > EPS {
        let mut c = Point2::default();
        for i in 0..n {
            let p = points[i];
            let q = points[(i + 1) % n];
            let k = p.cross(q);
            c = c + (p + q) * k;
        }
        c * (1.0 / (3.0 * area2))
    } else {
        points.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / n as f64)
    };
    let anchor = argmax(points.iter().map(|p| p.distance(centroid)));
    let split = argmax(points.iter().map(|p| p.distance(points[anchor])));
    if split == anchor {
        return points.to_vec();
    }
    // Walk from anchor to split and from split back to anchor.
    let chain = |from: usize, to: usize| -> Vec<usize> {
        let mut idx = vec![from];
        let mut i = from;
        while i != to {
            i = (i + 1) % n;
            idx.push(i);
        }
        idx
    };
    let mut keep = vec![false; n];
    for ids in [chain(anchor, split), chain(split, anchor)] {
        let pts: Vec<Point2> = ids.iter().map(|&i| points[i]).collect();
        for (k, &i) in douglas_peucker_mask(&pts, tolerance).iter().zip(&ids) {
            if *k {
                keep[i] = true;
            }
        }
    }
    if keep.iter().filter(|&&k| k).count() < 3 {
        // Only the two anchors survived; retain the vertex farthest from
        // their chord so the loop still encloses area.
        let (a, b) = (points[anchor], points[split]);
        let third = argmax(points.iter().map(|p| point_segment_distance(*p, a, b)));
        keep[third] = true;
    }
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Doubly linked ring over polygon vertex indices, used by ear clipping.
#[derive(Debug, Clone)]
pub(crate) struct VertexRing<'a> {
    pts: &'a [Point2],
    prev: Vec<usize>,
    next: Vec<usize>,
    alive: Vec<bool>,
    len: usize,
}

impl<'a> VertexRing<'a> {
    pub(crate) fn new(pts: &'a [Point2]) -> Self {
        let n = pts.len();
        VertexRing {
            pts,
            prev: (0..n).map(|i| (i + n - 1) % n).collect(),
            next: (0..n).map(|i| (i + 1) % n).collect(),
            alive: vec![true; n],
            len: n,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn prev(&self, i: usize) -> usize {
        self.prev[i]
    }

    pub(crate) fn next(&self, i: usize) -> usize {
        self.next[i]
    }

    pub(crate) fn remove(&mut self, i: usize) {
        debug_assert!(self.alive[i]);
        let (p, n) = (self.prev[i], self.next[i]);
        self.next[p] = n;
        self.prev[n] = p;
        self.alive[i] = false;
        self.len -= 1;
    }

    pub(crate) fn triangle(&self, i: usize) -> [usize; 3] {
        [self.prev[i], i, self.next[i]]
    }

    /// Convex corner whose triangle holds no other live vertex (boundary
    /// contact counts as blocking).
    pub(crate) fn is_ear(&self, i: usize) -> bool {
        if !self.alive[i] || self.len < 3 {
            return false;
        }
        let [ia, ib, ic] = self.triangle(i);
        let (a, b, c) = (self.pts[ia], self.pts[ib], self.pts[ic]);
        if orient(a, b, c) <= EPS {
            return false;
        }
        let mut j = self.next[ic];
        while j != ia {
            let p = self.pts[j];
            let coincident = p.distance(a) <= EPS || p.distance(b) <= EPS || p.distance(c) <= EPS;
            if !coincident
                && orient(a, b, p) >= -EPS
                && orient(b, c, p) >= -EPS
                && orient(c, a, p) >= -EPS
            {
                return false;
            }
            j = self.next[j];
        }
        true
    }

    /// First ear at or after `start` in counter-clockwise order.
    pub(crate) fn find_ear_from(&self, start: usize) -> Option<usize> {
        let mut i = start;
        for _ in 0..self.len {
            if self.is_ear(i) {
                return Some(i);
            }
            i = self.next[i];
        }
        None
    }
}

/// Ear-clipping triangulation into `n - 2` index triples.
///
/// Clipping starts at `start_index`; when the current candidate is not an ear
/// the scan advances counter-clockwise, and after each clip it continues from
/// the clipped vertex's successor.
pub fn triangulate_ear_clip(p: &Polygon, start_index: usize) -> Result<Vec<[usize; 3]>> {
    let n = p.len();
    if start_index >= n {
        return Err(Error::Precondition("start index out of range"));
    }
    let mut ring = VertexRing::new(p.vertices());
    let mut tris = Vec::with_capacity(n - 2);
    let mut cur = start_index;
    while ring.len() > 3 {
        let ear = ring
            .find_ear_from(cur)
            .ok_or(Error::InvalidPolygon("no ear found; polygon is not simple"))?;
        tris.push(ring.triangle(ear));
        cur = ring.next(ear);
        ring.remove(ear);
    }
    tris.push(ring.triangle(cur));
    Ok(tris)
}

/// Span of a convex polygon measured from one of its edges.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeSpan {
    pub edge_index: usize,
    pub span: f64,
    pub farthest_vertex_index: usize,
    /// Unit vector along the edge.
    pub direction: Point2,
}

/// Longest altitude from the line through edge `edge_index` to a vertex not
/// on that edge.
pub fn edge_span(p: &Polygon, edge_index: usize) -> Result<EdgeSpan> {
    if !is_convex(p) {
        return Err(Error::Precondition("edge span requires a convex polygon"));
    }
    edge_span_unchecked(p, edge_index)
}

fn edge_span_unchecked(p: &Polygon, edge_index: usize) -> Result<EdgeSpan> {
    let n = p.len();
    if edge_index >= n {
        return Err(Error::Precondition("edge index out of range"));
    }
    let (a, b) = p.edge(edge_index);
    let direction = (b - a).normalized();
    let mut span = 0.0;
    let mut farthest = (edge_index + 2) % n;
    for m in 0..n {
        if m == edge_index || m == (edge_index + 1) % n {
            continue;
        }
        let d = direction.cross(p.vertex(m) - a).abs();
        if d > span {
            span = d;
            farthest = m;
        }
    }
    Ok(EdgeSpan {
        edge_index,
        span,
        farthest_vertex_index: farthest,
        direction,
    })
}

/// Minimum-span sweep direction of a convex polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Msa {
    pub edge_index: usize,
    pub direction: Point2,
    pub span: f64,
}

/// Edge with the smallest span; near-ties (within [`EPS`]) go to the lowest
/// edge index.
pub fn msa_direction(p: &Polygon) -> Result<Msa> {
    if !is_convex(p) {
        return Err(Error::Precondition("MSA direction requires a convex polygon"));
    }
    let mut best = edge_span_unchecked(p, 0)?;
    for i in 1..p.len() {
        let s = edge_span_unchecked(p, i)?;
        if s.span < best.span - EPS {
            best = s;
        }
    }
    Ok(Msa {
        edge_index: best.edge_index,
        direction: best.direction,
        span: best.span,
    })
}
