//! Joining per-cell sweeps into one continuous coverage path.
//!
//! [`stitch_modified`] chains cells greedily through their four admissible
//! entry/exit pairs. [`stitch_classic`] is the centroid-TSP baseline: cell
//! order from a shortest centroid path, each cell entered through its default
//! pair or that pair reversed.

use alloc::vec;
use alloc::vec::Vec;

use crate::decompose::{decompose_msa, ConvexCell};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon, EPS};
use crate::sweep::{boustrophedon, sweep_along, SweepPath};

/// Exact dynamic programming is used up to this many cells.
pub const HELD_KARP_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoveragePlan {
    pub cell_order: Vec<usize>,
    /// Pair index (0..4) used for each visited cell, parallel to `cell_order`.
    pub chosen_pairs: Vec<usize>,
    pub waypoints: Vec<Point2>,
    /// Half-open waypoint range of each visited cell.
    pub segments: Vec<(usize, usize)>,
    pub total_length: f64,
    pub transition_length: f64,
    pub turn_total: usize,
    /// Sweep-line lengths of every cell, in visit order.
    pub line_lengths: Vec<f64>,
}

impl CoveragePlan {
    fn assemble(sweeps: &[SweepPath], order: Vec<usize>, pairs: Vec<usize>) -> Self {
        let mut waypoints: Vec<Point2> = Vec::new();
        let mut segments = Vec::with_capacity(order.len());
        let mut cell_length = 0.0;
        let mut transition_length = 0.0;
        let mut turn_total = 0;
        let mut line_lengths = Vec::new();
        for (&c, &pair) in order.iter().zip(&pairs) {
            let s = &sweeps[c];
            let w = s.oriented(pair);
            if let Some(last) = waypoints.last() {
                transition_length += last.distance(w[0]);
            }
            cell_length += s.oriented_length(pair);
            turn_total += s.turn_count;
            line_lengths.extend(s.line_lengths());
            let start = waypoints.len();
            waypoints.extend_from_slice(&w);
            segments.push((start, waypoints.len()));
        }
        CoveragePlan {
            cell_order: order,
            chosen_pairs: pairs,
            waypoints,
            segments,
            total_length: cell_length + transition_length,
            transition_length,
            turn_total,
            line_lengths,
        }
    }
}

fn check_inputs(cells: &[ConvexCell], sweeps: &[SweepPath]) -> Result<()> {
    if cells.is_empty() || sweeps.is_empty() {
        return Err(Error::Empty("no cells to stitch"));
    }
    if cells.len() != sweeps.len() {
        return Err(Error::Precondition("one sweep per cell required"));
    }
    Ok(())
}

/// `4n × 4n` end-to-start distances: entry `[4i + p][4j + q]` is the hop
/// from the end of cell `i` (pair `p`) to the start of cell `j` (pair `q`).
pub fn transition_matrix(sweeps: &[SweepPath]) -> Vec<Vec<f64>> {
    let n = sweeps.len();
    let mut m = vec![vec![0.0; 4 * n]; 4 * n];
    for (i, si) in sweeps.iter().enumerate() {
        for p in 0..4 {
            let end = si.endpoint_pairs[p].1;
            for (j, sj) in sweeps.iter().enumerate() {
                for q in 0..4 {
                    m[4 * i + p][4 * j + q] = end.distance(sj.endpoint_pairs[q].0);
                }
            }
        }
    }
    m
}

/// Entry shared by both stitchers: among the cells that contain the vertex
/// nearest `p0`, the `(cell, pair)` whose start point is nearest `p0`.
pub fn entry_cell(cells: &[ConvexCell], sweeps: &[SweepPath], p0: Point2) -> Result<(usize, usize)> {
    check_inputs(cells, sweeps)?;
    let anchor = cells
        .iter()
        .flat_map(|c| c.polygon.vertices().iter().copied())
        .fold((Point2::default(), f64::INFINITY), |best, v| {
            let d = v.distance(p0);
            if d < best.1 {
                (v, d)
            } else {
                best
            }
        })
        .0;

    let mut first: Option<(usize, usize, f64)> = None;
    for (c, cell) in cells.iter().enumerate() {
        if !cell.polygon.vertices().iter().any(|v| v.distance(anchor) <= EPS) {
            continue;
        }
        for pair in 0..4 {
            let d = sweeps[c].endpoint_pairs[pair].0.distance(p0);
            if first.is_none_or(|(_, _, bd)| d < bd) {
                first = Some((c, pair, d));
            }
        }
    }
    first
        .map(|(c, p, _)| (c, p))
        .ok_or(Error::Precondition("no cell touches the start vertex"))
}

/// Greedy chaining over the four entry pairs of every cell.
///
/// The first cell comes from [`entry_cell`]. Each later step picks the unvisited
/// `(cell, pair)` whose start is nearest the current end; ties go to the
/// lowest `(cell, pair)`.
pub fn stitch_modified(cells: &[ConvexCell], sweeps: &[SweepPath], p0: Point2) -> Result<CoveragePlan> {
    check_inputs(cells, sweeps)?;
    let n = cells.len();

    let (c0, p0_pair) = entry_cell(cells, sweeps, p0)?;

    let mut visited = vec![false; n];
    let mut order = vec![c0];
    let mut pairs = vec![p0_pair];
    visited[c0] = true;
    let mut end = sweeps[c0].endpoint_pairs[p0_pair].1;
    for _ in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for (c, s) in sweeps.iter().enumerate() {
            if visited[c] {
                continue;
            }
            for pair in 0..4 {
                let d = end.distance(s.endpoint_pairs[pair].0);
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((c, pair, d));
                }
            }
        }
        let (c, pair, _) = best.expect("unvisited cell remains");
        visited[c] = true;
        order.push(c);
        pairs.push(pair);
        end = sweeps[c].endpoint_pairs[pair].1;
    }
    Ok(CoveragePlan::assemble(sweeps, order, pairs))
}

/// Centroid-TSP baseline.
///
/// Both stitchers share [`entry_cell`]; from there the order is the
/// shortest open path through the cell centroids, and each later cell uses
/// pair 0 or its reverse, whichever begins nearer the previous end.
pub fn stitch_classic(cells: &[ConvexCell], sweeps: &[SweepPath], p0: Point2) -> Result<CoveragePlan> {
    check_inputs(cells, sweeps)?;
    let centroids: Vec<Point2> = cells.iter().map(|c| c.polygon.centroid()).collect();
    let (start, first) = entry_cell(cells, sweeps, p0)?;
    let order = centroid_order(&centroids, start);

    let mut pairs = Vec::with_capacity(order.len());
    pairs.push(first);
    let mut end = sweeps[start].endpoint_pairs[first].1;
    for &c in &order[1..] {
        let s = &sweeps[c];
        let rev = reverse_of_default(s);
        let pair = if s.endpoint_pairs[rev].0.distance(end) < s.endpoint_pairs[0].0.distance(end) {
            rev
        } else {
            0
        };
        pairs.push(pair);
        end = s.endpoint_pairs[pair].1;
    }
    Ok(CoveragePlan::assemble(sweeps, order, pairs))
}

/// Pair whose traversal is pair 0 run backwards.
fn reverse_of_default(s: &SweepPath) -> usize {
    let end = s.endpoint_pairs[0].1;
    (0..4).find(|&q| s.endpoint_pairs[q].0 == end).unwrap_or(0)
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, v) in values.enumerate() {
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Visit order minimizing the open centroid path from `start`: Held-Karp up
/// to [`HELD_KARP_LIMIT`] cells, nearest neighbour beyond.
pub fn centroid_order(centroids: &[Point2], start: usize) -> Vec<usize> {
    let n = centroids.len();
    if n <= 2 {
        let mut order = vec![start];
        order.extend((0..n).filter(|&i| i != start));
        return order;
    }
    if n > HELD_KARP_LIMIT {
        return nearest_neighbour_order(centroids, start);
    }
    // Nodes other than `start`, re-indexed 0..m.
    let others: Vec<usize> = (0..n).filter(|&i| i != start).collect();
    let m = others.len();
    let dist = |a: usize, b: usize| centroids[a].distance(centroids[b]);
    let full = (1usize << m) - 1;
    let mut cost = vec![f64::INFINITY; (1 << m) * m];
    let mut parent = vec![usize::MAX; (1 << m) * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = dist(start, others[j]);
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = here + dist(others[j], others[k]);
                if c < cost[next * m + k] {
                    cost[next * m + k] = c;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let mut last = argmin((0..m).map(|j| cost[full * m + j]));
    let mut mask = full;
    let mut rev = Vec::with_capacity(m);
    loop {
        rev.push(others[last]);
        let p = parent[mask * m + last];
        mask &= !(1 << last);
        if p == usize::MAX {
            break;
        }
        last = p;
    }
    let mut order = vec![start];
    order.extend(rev.into_iter().rev());
    order
}

fn nearest_neighbour_order(centroids: &[Point2], start: usize) -> Vec<usize> {
    let n = centroids.len();
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut order = vec![start];
    let mut cur = start;
    for _ in 1..n {
        let next = argmin((0..n).map(|j| {
            if visited[j] {
                f64::INFINITY
            } else {
                centroids[cur].distance(centroids[j])
            }
        }));
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// Uni-directional baseline: every cell swept with vertical lines, stitched
/// with the classic centroid order.
pub fn stitch_uniform_direction(cells: &[ConvexCell], r: f64, p0: Point2) -> Result<CoveragePlan> {
    let sweeps = cells
        .iter()
        .map(|c| sweep_along(&c.polygon, Point2::new(0.0, 1.0), r))
        .collect::<Result<Vec<_>>>()?;
    stitch_classic(cells, &sweeps, p0)
}

/// Everything the offline planner produces for one polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedArea {
    pub cells: Vec<ConvexCell>,
    pub sweeps: Vec<SweepPath>,
    pub plan: CoveragePlan,
}

/// Decompose, sweep and stitch (modified rule) in one call.
pub fn plan_area(p: &Polygon, p0: Point2, r: f64) -> Result<PlannedArea> {
    let cells = decompose_msa(p, p0, r)?;
    let sweeps = cells
        .iter()
        .map(|c| boustrophedon(c, r))
        .collect::<Result<Vec<_>>>()?;
    let plan = stitch_modified(&cells, &sweeps, p0)?;
    Ok(PlannedArea { cells, sweeps, plan })
}

/// One row of the classic-versus-new comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRow {
    pub vertices: usize,
    pub turns_baseline: usize,
    pub turns_new: usize,
    pub length_classic: f64,
    pub length_new: f64,
}

impl ComparisonRow {
    pub fn turn_delta(&self) -> i64 {
        self.turns_baseline as i64 - self.turns_new as i64
    }

    pub fn length_delta(&self) -> f64 {
        self.length_classic - self.length_new
    }
}

/// Turns come from the uni-directional `baseline`, lengths from the classic
/// stitching; both are compared against `new`.
pub fn compare(
    vertices: usize,
    baseline: &CoveragePlan,
    classic: &CoveragePlan,
    new: &CoveragePlan,
) -> ComparisonRow {
    ComparisonRow {
        vertices,
        turns_baseline: baseline.turn_total,
        turns_new: new.turn_total,
        length_classic: classic.total_length,
        length_new: new.total_length,
    }
}
