//! Online replanning: compare what the robot currently sees against the map
//! it planned on, and restart the offline planner when they disagree by more
//! than a threshold.
//!
//! The observed boundary is traced from the occupancy grid, its vertices are
//! split into inliers (close to the reference boundary) and outliers, and the
//! area error is the difference between the observed loop and the loop of
//! inliers alone.

use alloc::vec;
use alloc::vec::Vec;

use crate::covergrid::{CellState, OccupancyGrid};
use crate::error::{Error, Result};
use crate::geometry::{is_simple_loop, shoelace, simplify_loop, Point2, Polygon};
use crate::stitch::CoveragePlan;

/// Douglas-Peucker tolerance applied to traced boundaries.
pub const DEFAULT_DP_TOLERANCE: f64 = 0.10;

/// Inlier distance as a multiple of the grid resolution.
pub const INLIER_TOLERANCE_CELLS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreaError {
    pub observed_vertices: Vec<Point2>,
    pub inliers: Vec<Point2>,
    pub outliers: Vec<Point2>,
    pub error: f64,
    pub threshold: f64,
    pub replan: bool,
}

impl AreaError {
    pub fn evaluate(
        observed: &Polygon,
        reference: &Polygon,
        dist_tol: f64,
        threshold: f64,
    ) -> Result<Self> {
        let (inliers, outliers) = classify_inliers(observed.vertices(), reference, dist_tol);
        let error = area_error(observed.vertices(), &inliers)?;
        Ok(AreaError {
            observed_vertices: observed.vertices().to_vec(),
            inliers,
            outliers,
            error,
            threshold,
            replan: error > threshold,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "action", rename_all = "snake_case"))]
pub enum ReplanAction {
    Continue,
    ReplanFrom { polygon: Polygon, start: Point2 },
}

/// Boundary of the free region around `robot`, simplified with `tolerance`.
pub fn extract_boundary(occ: &OccupancyGrid, robot: Point2, tolerance: f64) -> Result<Polygon> {
    extract_boundary_with_prior(occ, robot, tolerance, None)
}

/// As [`extract_boundary`], but unknown cells whose centers lie inside
/// `prior` count as free, so parts of the map not yet observed keep their
/// reference shape instead of showing up as missing area.
pub fn extract_boundary_with_prior(
    occ: &OccupancyGrid,
    robot: Point2,
    tolerance: f64,
    prior: Option<&Polygon>,
) -> Result<Polygon> {
    let frame = *occ.frame();
    let passable: Vec<bool> = (0..frame.height)
        .flat_map(|iy| (0..frame.width).map(move |ix| (ix, iy)))
        .map(|(ix, iy)| match occ.get(ix, iy) {
            CellState::Free => true,
            CellState::Occupied => false,
            CellState::Unknown => prior.is_some_and(|p| p.contains(frame.cell_center(ix, iy))),
        })
        .collect();

    let seed = seed_cell(occ, &passable, robot).ok_or(Error::NoFreeRegion)?;
    let region = flood(frame.width, frame.height, &passable, seed);

    let loops = trace_loops(frame.width, frame.height, &region);
    let outer = loops
        .into_iter()
        .map(|l| {
            let pts: Vec<Point2> = l
                .iter()
                .map(|&(vx, vy)| {
                    Point2::new(
                        frame.origin.x + vx as f64 * frame.resolution,
                        frame.origin.y + vy as f64 * frame.resolution,
                    )
                })
                .collect();
            (shoelace(&pts), pts)
        })
        .filter(|(a, _)| *a > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::NoFreeRegion)?
        .1;

    let mut tol = tolerance;
    for _ in 0..6 {
        let simplified = simplify_loop(&outer, tol);
        if simplified.len() >= 3 && is_simple_loop(&simplified) {
            if let Ok(p) = Polygon::from_loop(simplified) {
                return Ok(p);
            }
        }
        tol *= 0.5;
    }
    Polygon::from_loop(outer)
}

fn seed_cell(occ: &OccupancyGrid, passable: &[bool], robot: Point2) -> Option<(usize, usize)> {
    let frame = occ.frame();
    if let Some((ix, iy)) = frame.cell_of(robot) {
        if passable[frame.index(ix, iy)] {
            return Some((ix, iy));
        }
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for iy in 0..frame.height {
        for ix in 0..frame.width {
            if occ.get(ix, iy) != CellState::Free {
                continue;
            }
            let d = frame.cell_center(ix, iy).distance(robot);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some(((ix, iy), d));
            }
        }
    }
    best.map(|(c, _)| c)
}

fn flood(w: usize, h: usize, passable: &[bool], seed: (usize, usize)) -> Vec<bool> {
    let mut region = vec![false; w * h];
    let mut stack = vec![seed];
    region[seed.1 * w + seed.0] = true;
    while let Some((x, y)) = stack.pop() {
        let mut visit = |nx: usize, ny: usize| {
            let i = ny * w + nx;
            if passable[i] && !region[i] {
                region[i] = true;
                stack.push((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
    region
}

/// Closed cell-edge loops around `region`, region on the left. Collinear
/// runs are merged, so each returned vertex is a corner in lattice
/// coordinates. At saddle vertices the trace turns left, which keeps
/// diagonally touching cells in separate loops.
fn trace_loops(w: usize, h: usize, region: &[bool]) -> Vec<Vec<(usize, usize)>> {
    // Direction codes: 0 = +x, 1 = +y, 2 = -x, 3 = -y.
    const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && region[y as usize * w + x as usize]
    };
    let vw = w as i64 + 1;
    let vid = |x: i64, y: i64| (y * vw + x) as usize;

    // Per lattice vertex: bit d set when a boundary edge leaves in direction d.
    let mut out = vec![0u8; (vw * (h as i64 + 1)) as usize];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !inside(x, y) {
                continue;
            }
            if !inside(x, y - 1) {
                out[vid(x, y)] |= 1 << 0;
            }
            if !inside(x + 1, y) {
                out[vid(x + 1, y)] |= 1 << 1;
            }
            if !inside(x, y + 1) {
                out[vid(x + 1, y + 1)] |= 1 << 2;
            }
            if !inside(x - 1, y) {
                out[vid(x, y + 1)] |= 1 << 3;
            }
        }
    }
    let next_dir = |bits: u8, incoming: u8| -> u8 {
        let left = (incoming + 1) % 4;
        if bits & (1 << left) != 0 {
            left
        } else {
            bits.trailing_zeros() as u8
        }
    };

    let mut used = vec![0u8; out.len()];
    let mut loops = Vec::new();
    for start in 0..out.len() {
        for d0 in 0..4u8 {
            if out[start] & (1 << d0) == 0 || used[start] & (1 << d0) != 0 {
                continue;
            }
            let (sx, sy) = (start as i64 % vw, start as i64 / vw);
            let (mut x, mut y, mut d) = (sx, sy, d0);
            let mut corners = Vec::new();
            loop {
                used[vid(x, y)] |= 1 << d;
                x += STEP[d as usize].0;
                y += STEP[d as usize].1;
                let nd = next_dir(out[vid(x, y)], d);
                if nd != d {
                    corners.push((x as usize, y as usize));
                }
                if (x, y) == (sx, sy) && nd == d0 {
                    break;
                }
                d = nd;
            }
            if corners.len() >= 3 {
                loops.push(corners);
            }
        }
    }
    loops
}

/// Splits `observed` into vertices within `dist_tol` of `reference`'s
/// boundary and the rest. Both lists keep the input order.
pub fn classify_inliers(
    observed: &[Point2],
    reference: &Polygon,
    dist_tol: f64,
) -> (Vec<Point2>, Vec<Point2>) {
    observed
        .iter()
        .partition(|p| reference.distance_to_boundary(**p) <= dist_tol)
}

/// Absolute area difference between the observed loop and its inlier loop.
///
/// Fewer than three inliers, or an inlier loop that self-intersects, gives
/// the full observed area.
pub fn area_error(observed: &[Point2], inliers: &[Point2]) -> Result<f64> {
    if observed.len() < 3 {
        return Err(Error::Degenerate("observed boundary needs 3 vertices"));
    }
    let observed_area = shoelace(observed).abs();
    if inliers.len() < 3 || !is_simple_loop(inliers) {
        return Ok(observed_area);
    }
    Ok((observed_area - shoelace(inliers).abs()).abs())
}

/// Mean sweep-line length times the coverage radius.
pub fn replan_threshold(plan: &CoveragePlan, r: f64) -> Result<f64> {
    if plan.line_lengths.is_empty() {
        return Err(Error::Empty("plan has no sweep lines"));
    }
    let mean = plan.line_lengths.iter().sum::<f64>() / plan.line_lengths.len() as f64;
    Ok(mean * r)
}

/// Continue unless `error` strictly exceeds `threshold`.
pub fn decide(error: f64, threshold: f64, polygon: &Polygon, current_pose: Point2) -> ReplanAction {
    if error > threshold {
        ReplanAction::ReplanFrom {
            polygon: polygon.clone(),
            start: current_pose,
        }
    } else {
        ReplanAction::Continue
    }
}

/// Start point for a replan on `polygon`: `pose` itself when it is on or
/// outside the boundary, otherwise the nearest boundary point. The flag is
/// true when the pose was moved.
pub fn snap_start(polygon: &Polygon, pose: Point2) -> (Point2, bool) {
    if polygon.contains(pose) && polygon.distance_to_boundary(pose) > crate::decompose::BOUNDARY_TOLERANCE {
        (polygon.closest_boundary_point(pose), true)
    } else {
        (pose, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covergrid::GridFrame;
    use crate::geometry::Point2 as P;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![P::new(x0, y0), P::new(x1, y0), P::new(x1, y1), P::new(x0, y1)]).unwrap()
    }

    /// Synthetic grid: cells inside `free` are free, cells in any of
    /// `blocked` are occupied, cells outside `free` but in the frame are
    /// occupied walls, and the rest stay unknown.
    fn room_grid(free: &Polygon, blocked: &[Polygon], res: f64) -> OccupancyGrid {
        let frame = GridFrame::covering(free, res, 2.0 * res).unwrap();
        let mut occ = OccupancyGrid::new(frame);
        for iy in 0..frame.height {
            for ix in 0..frame.width {
                let c = frame.cell_center(ix, iy);
                let state = if blocked.iter().any(|b| b.contains(c)) {
                    CellState::Occupied
                } else if free.contains(c) {
                    CellState::Free
                } else if free.distance_to_boundary(c) < 1.5 * res {
                    CellState::Occupied
                } else {
                    CellState::Unknown
                };
                occ.set(ix, iy, state);
            }
        }
        occ
    }

    #[test]
    fn rectangle_room_gives_four_vertices() {
        let room = rect(0.0, 0.0, 10.0, 6.0);
        let occ = room_grid(&room, &[], 0.05);
        let b = extract_boundary(&occ, P::new(5.0, 3.0), DEFAULT_DP_TOLERANCE).unwrap();
        assert_eq!(b.len(), 4);
        assert!((b.area() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn wall_box_adds_notch() {
        let room = rect(0.0, 0.0, 10.0, 6.0);
        let bx = rect(4.0, 4.0, 6.0, 6.5);
        let occ = room_grid(&room, &[bx], 0.05);
        let b = extract_boundary(&occ, P::new(5.0, 2.0), DEFAULT_DP_TOLERANCE).unwrap();
        assert_eq!(b.len(), 8);
        assert!((b.area() - 56.0).abs() < 1e-9, "{}", b.area());
    }

    #[test]
    fn unknown_grid_is_error() {
        let frame = GridFrame::new(P::new(0.0, 0.0), 0.1, 10, 10).unwrap();
        let occ = OccupancyGrid::new(frame);
        assert_eq!(extract_boundary(&occ, P::new(0.5, 0.5), 0.1), Err(Error::NoFreeRegion));
    }

    #[test]
    fn prior_fills_unknown_cells() {
        let room = rect(0.0, 0.0, 4.0, 4.0);
        let mut occ = room_grid(&room, &[], 0.1);
        for iy in 0..occ.frame().height {
            for ix in 0..occ.frame().width {
                let c = occ.frame().cell_center(ix, iy);
                if c.x > 2.0 && room.contains(c) {
                    occ.set(ix, iy, CellState::Unknown);
                }
            }
        }
        let seen = extract_boundary(&occ, P::new(1.0, 1.0), 0.1).unwrap();
        assert!((seen.area() - 8.0).abs() < 1e-9);
        let fused = extract_boundary_with_prior(&occ, P::new(1.0, 1.0), 0.1, Some(&room)).unwrap();
        assert!((fused.area() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn saddle_cells_form_separate_loops() {
        let mut region = vec![false; 4];
        region[0] = true;
        region[3] = true;
        let loops = trace_loops(2, 2, &region);
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|l| l.len() == 4));
    }

    #[test]
    fn inlier_examples() {
        let reference = rect(0.0, 0.0, 10.0, 10.0);
        let tol = 0.15;
        let same = reference.vertices().to_vec();
        let (i, o) = classify_inliers(&same, &reference, tol);
        assert_eq!((i.len(), o.len()), (4, 0));

        let mut moved = same.clone();
        moved[2] = P::new(10.0 - 10.0 * tol, 10.0 - 10.0 * tol);
        let (i, o) = classify_inliers(&moved, &reference, tol);
        assert_eq!(o, vec![moved[2]]);
        assert_eq!(i.len(), 3);

        let shifted: Vec<P> = same.iter().map(|&p| p + P::new(2.0 * tol, 2.0 * tol)).collect();
        let (i, o) = classify_inliers(&shifted, &reference, tol);
        assert!(i.is_empty() && o.len() == 4);
    }

    #[test]
    fn area_error_examples() {
        let full = rect(0.0, 0.0, 10.0, 10.0);
        let v = full.vertices();
        assert_eq!(area_error(v, v).unwrap(), 0.0);
        assert_eq!(area_error(v, &[]).unwrap(), 100.0);
        assert!(area_error(&v[..2], &[]).is_err());

        // Corner bite: (10,8) and (8,10) stay on the reference boundary.
        let bite = [
            P::new(0.0, 0.0),
            P::new(10.0, 0.0),
            P::new(10.0, 8.0),
            P::new(8.0, 8.0),
            P::new(8.0, 10.0),
            P::new(0.0, 10.0),
        ];
        let (inl, out) = classify_inliers(&bite, &full, 0.15);
        assert_eq!(out, vec![P::new(8.0, 8.0)]);
        assert!((area_error(&bite, &inl).unwrap() - 2.0).abs() < 1e-12);

        // Mid-wall notch 2 wide, 2 deep: both inner corners are outliers.
        let notch = [
            P::new(0.0, 0.0),
            P::new(10.0, 0.0),
            P::new(10.0, 10.0),
            P::new(6.0, 10.0),
            P::new(6.0, 8.0),
            P::new(4.0, 8.0),
            P::new(4.0, 10.0),
            P::new(0.0, 10.0),
        ];
        let (inl, out) = classify_inliers(&notch, &full, 0.15);
        assert_eq!(out.len(), 2);
        assert!((area_error(&notch, &inl).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let plan = |lines: Vec<f64>| CoveragePlan {
            cell_order: vec![0],
            chosen_pairs: vec![0],
            waypoints: vec![],
            segments: vec![],
            total_length: 0.0,
            transition_length: 0.0,
            turn_total: 0,
            line_lengths: lines,
        };
        assert_eq!(replan_threshold(&plan(vec![10.0; 4]), 0.5).unwrap(), 5.0);
        assert_eq!(replan_threshold(&plan(vec![7.0]), 0.25).unwrap(), 1.75);
        assert_eq!(replan_threshold(&plan(vec![10.0, 10.0, 4.0, 4.0]), 0.5).unwrap(), 3.5);
        assert!(replan_threshold(&plan(vec![]), 0.5).is_err());
    }

    #[test]
    fn decide_is_strict() {
        let p = rect(0.0, 0.0, 1.0, 1.0);
        let pose = P::new(0.5, 0.5);
        assert_eq!(decide(4.0, 5.0, &p, pose), ReplanAction::Continue);
        assert_eq!(decide(5.0, 5.0, &p, pose), ReplanAction::Continue);
        assert_eq!(
            decide(6.0, 5.0, &p, pose),
            ReplanAction::ReplanFrom { polygon: p.clone(), start: pose }
        );
    }

    #[test]
    fn self_consistent_after_replan() {
        let room = rect(0.0, 0.0, 10.0, 6.0);
        let occ = room_grid(&room, &[rect(4.0, 4.0, 6.0, 6.5)], 0.05);
        let observed = extract_boundary(&occ, P::new(5.0, 2.0), DEFAULT_DP_TOLERANCE).unwrap();
        let e = AreaError::evaluate(&observed, &observed, 0.15, 1.0).unwrap();
        assert_eq!(e.error, 0.0);
        assert!(!e.replan);
    }

    #[test]
    fn snapping_moves_interior_pose_only() {
        let p = rect(0.0, 0.0, 4.0, 2.0);
        assert_eq!(snap_start(&p, P::new(1.0, 0.5)), (P::new(1.0, 0.0), true));
        assert_eq!(snap_start(&p, P::new(5.0, 1.0)), (P::new(5.0, 1.0), false));
        assert_eq!(snap_start(&p, P::new(4.0, 1.0)), (P::new(4.0, 1.0), false));
    }
}
