//! Convex decomposition by ear clipping with greedy MSA-cost merging.
//!
//! Clipping starts at the polygon vertex nearest the requested start point.
//! Every clipped ear is offered to the current cell; the merge is kept when
//! the union stays convex and shortens the total boustrophedon length,
//! otherwise the ear opens a new cell.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{is_convex, msa_direction, Msa, Point2, Polygon, VertexRing, EPS};
use crate::sweep::boustrophedon;

/// Tolerance for deciding a point lies on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Savings at or below this are treated as zero.
const MERGE_SAVING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexCell {
    pub polygon: Polygon,
    /// Indices (in clip order) of the ear triangles merged into this cell.
    pub source_triangles: Vec<usize>,
    pub msa: Msa,
}

impl ConvexCell {
    pub fn new(polygon: Polygon, source_triangles: Vec<usize>) -> Result<Self> {
        if source_triangles.is_empty() {
            return Err(Error::Precondition("cell needs at least one source triangle"));
        }
        let msa = msa_direction(&polygon)?;
        Ok(ConvexCell {
            polygon,
            source_triangles,
            msa,
        })
    }

    pub fn area(&self) -> f64 {
        self.polygon.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StartKind {
    OnBoundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartSpec {
    pub point: Point2,
    pub kind: StartKind,
}

/// Accepts boundary and outside start points; interior points are rejected.
pub fn classify_start(p: &Polygon, p0: Point2) -> Result<StartSpec> {
    if !p0.is_finite() {
        return Err(Error::Precondition("start point must be finite"));
    }
    let kind = if p.distance_to_boundary(p0) <= BOUNDARY_TOLERANCE {
        StartKind::OnBoundary
    } else if p.contains(p0) {
        return Err(Error::UnsupportedStart);
    } else {
        StartKind::Outside
    };
    Ok(StartSpec { point: p0, kind })
}

/// Index of the vertex nearest `p0`; ties go to the lowest index.
pub fn nearest_vertex(p: &Polygon, p0: Point2) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in p.vertices().iter().enumerate() {
        let d = v.distance(p0);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Union of two cells sharing exactly one full edge, with that edge removed.
pub fn merge_polygons(a: &Polygon, b: &Polygon) -> Result<Polygon> {
    let (na, nb) = (a.len(), b.len());
    let same = |p: Point2, q: Point2| p.distance(q) <= EPS;
    let mut shared = None;
    let mut count = 0;
    for i in 0..na {
        let (u, v) = a.edge(i);
        for j in 0..nb {
            let (s, t) = b.edge(j);
            if same(u, t) && same(v, s) {
                count += 1;
                shared = Some((i, j));
            }
        }
    }
    let (i, j) = match (count, shared) {
        (1, Some(ij)) => ij,
        _ => return Err(Error::Precondition("cells must share exactly one full edge")),
    };
    let mut out = Vec::with_capacity(na + nb - 2);
    // a from vertex i+1 around to vertex i ...
    for k in 0..na {
        out.push(a.vertex(i + 1 + k));
    }
    // ... then b strictly between its copies of a[i] and a[i+1].
    for k in 0..nb - 2 {
        out.push(b.vertex(j + 2 + k));
    }
    Ok(Polygon::from_trusted(out))
}

/// Path-length saving from merging `a` and `b`; zero when the union is not
/// convex.
pub fn merge_cost(a: &ConvexCell, b: &ConvexCell, r: f64) -> Result<f64> {
    if a.source_triangles.iter().any(|t| b.source_triangles.contains(t)) {
        return Err(Error::Precondition("cannot merge overlapping cells"));
    }
    let merged = merge_polygons(&a.polygon, &b.polygon)?;
    merge_cost_with(a, b, &merged, r)
}

fn merge_cost_with(a: &ConvexCell, b: &ConvexCell, merged: &Polygon, r: f64) -> Result<f64> {
    if !is_convex(merged) {
        return Ok(0.0);
    }
    let mut tris = a.source_triangles.clone();
    tris.extend_from_slice(&b.source_triangles);
    let m = ConvexCell::new(merged.clone(), tris)?;
    let la = boustrophedon(a, r)?.length;
    let lb = boustrophedon(b, r)?.length;
    let lm = boustrophedon(&m, r)?.length;
    Ok(la + lb - lm)
}

/// One accepted merge, kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    pub cell: ConvexCell,
    pub ear: ConvexCell,
    pub saving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub cells: Vec<ConvexCell>,
    pub merges: Vec<MergeRecord>,
    /// Vertex nearest the start point, where clipping began.
    pub start_vertex: usize,
    /// Ear triangles as input-vertex index triples, in clip order.
    pub triangles: Vec<[usize; 3]>,
}

/// Convex decomposition of `p` for a robot of coverage radius `r` starting
/// from `p0`.
pub fn decompose_msa(p: &Polygon, p0: Point2, r: f64) -> Result<Vec<ConvexCell>> {
    decompose_msa_traced(p, p0, r).map(|d| d.cells)
}

pub fn decompose_msa_traced(p: &Polygon, p0: Point2, r: f64) -> Result<Decomposition> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Precondition("coverage radius must be positive"));
    }
    classify_start(p, p0)?;
    let n = p.len();
    let pts = p.vertices();
    let start_vertex = nearest_vertex(p, p0);
    let mut ring = VertexRing::new(pts);

    let triangle_cell = |tri: [usize; 3], id: usize| -> Result<ConvexCell> {
        let poly = Polygon::from_trusted(vec![pts[tri[0]], pts[tri[1]], pts[tri[2]]]);
        ConvexCell::new(poly, vec![id])
    };

    let first = ring
        .find_ear_from(start_vertex)
        .ok_or(Error::InvalidPolygon("no ear found; polygon is not simple"))?;
    let tri = ring.triangle(first);
    let mut triangles = vec![tri];
    let mut current = triangle_cell(tri, 0)?;
    let (mut lo, mut hi) = (ring.prev(first), ring.next(first));
    ring.remove(first);

    let mut cells: Vec<ConvexCell> = Vec::new();
    let mut merges = Vec::new();

    while triangles.len() < n - 2 {
        let id = triangles.len();
        // Frontier candidates: the vertices on either side of the last
        // diagonal, the successor side first.
        let mut candidates: Vec<usize> = vec![hi];
        if ring.len() > 3 && lo != hi {
            candidates.push(lo);
        }
        let mut best: Option<(usize, ConvexCell, Option<Polygon>, f64)> = None;
        for &k in &candidates {
            if !ring.is_ear(k) {
                continue;
            }
            let ear = triangle_cell(ring.triangle(k), id)?;
            let merged = merge_polygons(&current.polygon, &ear.polygon)?;
            let saving = merge_cost_with(&current, &ear, &merged, r)?;
            let better = match &best {
                None => true,
                Some((_, _, _, s)) => saving > *s,
            };
            if better {
                best = Some((k, ear, Some(merged), saving));
            }
        }

        let (k, ear, merged, saving) = match best {
            Some(b) => b,
            None => {
                // Neither frontier vertex is an ear: restart elsewhere.
                let k = ring
                    .find_ear_from(hi)
                    .ok_or(Error::InvalidPolygon("no ear found; polygon is not simple"))?;
                let ear = triangle_cell(ring.triangle(k), id)?;
                (k, ear, None, 0.0)
            }
        };

        triangles.push(ring.triangle(k));
        match merged {
            Some(m) if saving > MERGE_SAVING_EPS => {
                let mut tris = current.source_triangles.clone();
                tris.push(id);
                let grown = ConvexCell::new(m, tris)?;
                merges.push(MergeRecord {
                    cell: current,
                    ear,
                    saving,
                });
                current = grown;
            }
            _ => {
                cells.push(core::mem::replace(&mut current, ear));
            }
        }
        lo = ring.prev(k);
        hi = ring.next(k);
        ring.remove(k);
    }
    cells.push(current);

    Ok(Decomposition {
        cells,
        merges,
        start_vertex,
        triangles,
    })
}
