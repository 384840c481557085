//! Deterministic 2D world: a point robot follows a [`CoveragePlan`], a
//! ray-cast LiDAR fills an [`OccupancyGrid`], and scripted world changes
//! exercise the replanning loop.
//!
//! The robot's true position follows the plan exactly. Its estimated pose is
//! the true pose plus optional Gaussian noise, and everything the robot
//! "believes" (occupancy, coverage credit, boundary checks) is driven by the
//! estimate. Obstacles that block the current segment are skirted along an
//! offset of their convex hull.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::covergrid::{best_heading, headings, CellState, CoverageGrid, GridFrame, OccupancyGrid};
use crate::error::{Error, Result};
use crate::geometry::{orient, Point2, Polygon, EPS};
use crate::replan::{
    decide, extract_boundary_with_prior, replan_threshold, snap_start, AreaError, ReplanAction,
    DEFAULT_DP_TOLERANCE, INLIER_TOLERANCE_CELLS,
};
use crate::stitch::{plan_area, CoveragePlan};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LidarSpec {
    pub beams: usize,
    pub max_range: f64,
    pub noise_sigma: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            beams: 360,
            max_range: 20.0,
            noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RobotSpec {
    pub speed: f64,
    pub coverage_radius: f64,
    pub pose_noise_sigma: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec {
            speed: 0.5,
            coverage_radius: 0.25,
            pose_noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EventOp {
    AddObstacle,
    MoveBoundary,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldEvent {
    pub time: f64,
    pub op: EventOp,
    pub geometry: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldSpec {
    pub boundary: Polygon,
    #[cfg_attr(feature = "serde", serde(default))]
    pub events: Vec<WorldEvent>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub lidar: LidarSpec,
    #[cfg_attr(feature = "serde", serde(default))]
    pub robot: RobotSpec,
}

impl WorldSpec {
    pub fn new(boundary: Polygon) -> Self {
        WorldSpec {
            boundary,
            events: Vec::new(),
            lidar: LidarSpec::default(),
            robot: RobotSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lidar.beams < 8 {
            return Err(Error::Precondition("lidar needs at least 8 beams"));
        }
        if !(self.lidar.max_range > 0.0) {
            return Err(Error::Precondition("lidar max_range must be positive"));
        }
        if !(self.lidar.noise_sigma >= 0.0) || !(self.robot.pose_noise_sigma >= 0.0) {
            return Err(Error::Precondition("noise sigmas must be non-negative"));
        }
        if !(self.robot.speed > 0.0) || !(self.robot.coverage_radius > 0.0) {
            return Err(Error::Precondition("robot speed and radius must be positive"));
        }
        let mut last = 0.0;
        let mut boundary = &self.boundary;
        for e in &self.events {
            if !(e.time >= last) || !e.time.is_finite() {
                return Err(Error::Precondition("events must be sorted by non-negative time"));
            }
            last = e.time;
            match e.op {
                EventOp::AddObstacle => {
                    let inside = e.geometry.vertices().iter().all(|&v| {
                        boundary.contains(v) || boundary.distance_to_boundary(v) <= 1e-6
                    });
                    if !inside {
                        return Err(Error::Precondition("obstacle must lie inside the boundary"));
                    }
                }
                EventOp::MoveBoundary => boundary = &e.geometry,
            }
        }
        Ok(())
    }

    /// Bounding box of every boundary the world can take.
    fn extent(&self) -> (Point2, Point2) {
        let (mut lo, mut hi) = self.boundary.bounds();
        for e in &self.events {
            let (a, b) = e.geometry.bounds();
            lo = Point2::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = Point2::new(hi.x.max(b.x), hi.y.max(b.y));
        }
        (lo, hi)
    }
}

/// Geometry in force at one instant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct World {
    pub boundary: Polygon,
    pub obstacles: Vec<Polygon>,
}

impl World {
    pub fn new(boundary: Polygon) -> Self {
        World {
            boundary,
            obstacles: Vec::new(),
        }
    }

    pub fn apply(&mut self, event: &WorldEvent) {
        match event.op {
            EventOp::AddObstacle => self.obstacles.push(event.geometry.clone()),
            EventOp::MoveBoundary => self.boundary = event.geometry.clone(),
        }
    }

    /// Inside or on the boundary, and not strictly inside any obstacle.
    pub fn in_free_space(&self, p: Point2) -> bool {
        let in_boundary = self.boundary.contains(p) || self.boundary.distance_to_boundary(p) <= EPS;
        in_boundary
            && !self
                .obstacles
                .iter()
                .any(|o| o.contains(p) && o.distance_to_boundary(p) > EPS)
    }

    /// Every edge, oriented so free space lies on its left.
    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let outer = (0..self.boundary.len()).map(|i| self.boundary.edge(i));
        let inner = self
            .obstacles
            .iter()
            .flat_map(|p| (0..p.len()).map(move |i| p.edge(i)))
            .map(|(a, b)| (b, a));
        outer.chain(inner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta }
    }

    pub fn at(p: Point2, theta: f64) -> Self {
        Pose::new(p.x, p.y, theta)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Bearing of beam `k` of `beams`, counter-clockwise from the heading.
pub fn beam_bearing(theta: f64, k: usize, beams: usize) -> f64 {
    theta + TAU * k as f64 / beams as f64
}

/// Noise-free ranges for evenly spaced beams, clamped to `max_range`.
pub fn lidar_scan(pose: Pose, world: &World, beams: usize, max_range: f64) -> Result<Vec<f64>> {
    if beams < 8 {
        return Err(Error::Precondition("lidar needs at least 8 beams"));
    }
    let o = pose.position();
    if !world.in_free_space(o) {
        return Err(Error::PoseOutsideFreeSpace { x: o.x, y: o.y });
    }
    Ok((0..beams)
        .map(|k| {
            let u = Point2::from_angle(beam_bearing(pose.theta, k, beams));
            world
                .edges()
                .filter_map(|(a, b)| ray_exit(o, u, a, b))
                .fold(max_range, f64::min)
        })
        .collect())
}

/// Distance along the unit ray `o + t·u` to segment `ab`, if it is hit.
fn ray_segment(o: Point2, u: Point2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    let denom = u.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = a - o;
    let t = w.cross(e) / denom;
    let s = w.cross(u) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t)
}

/// Like [`ray_segment`], but only for a crossing that leaves the free side
/// (the left of `ab`), so a pose on the segment still sees inward.
fn ray_exit(o: Point2, u: Point2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    if u.cross(e) < 1e-15 {
        return None;
    }
    let w = a - o;
    let t = w.cross(e) / u.cross(e);
    let s = w.cross(u) / u.cross(e);
    (t >= -EPS && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t.max(0.0))
}

/// Inset applied to obstacles before blocking tests, so paths that run along
/// an obstacle face are not treated as collisions.
const CONTACT_TOLERANCE: f64 = 1e-6;

/// Neighbouring hits closer than this many cells are joined into one surface.
const LINK_CELLS: f64 = 2.0;

/// Hits are marked this many cells deep behind the surface. Beams never
/// reach those cells, so they keep a region closed even when the surface
/// cell itself straddles the face and is freed by a grazing beam.
const SURFACE_DEPTH_CELLS: f64 = 2.0;

/// Folds one scan into `occ`. Cells crossed by a beam (and, with three or
/// more beams, the wedge between neighbouring beams up to the shorter range)
/// become free; beam endpoints that hit something become occupied, along
/// with the cells joining neighbouring hits less than [`LINK_CELLS`] apart
/// and a short run of [`SURFACE_DEPTH_CELLS`] behind each hit. Occupied
/// marks are written last.
pub fn integrate_scan(occ: &mut OccupancyGrid, pose: Pose, ranges: &[f64], max_range: f64) {
    let frame = *occ.frame();
    let res = frame.resolution;
    let n = ranges.len();
    if n == 0 {
        return;
    }
    let o = pose.position();
    let dirs: Vec<Point2> = (0..n)
        .map(|k| Point2::from_angle(beam_bearing(pose.theta, k, n)))
        .collect();
    let is_hit = |k: usize| ranges[k] < max_range;
    // Nudged past the surface so the hit cell sits on the obstacle side.
    let end = |k: usize| o + dirs[k] * (ranges[k] + 1e-9);
    let wedge = |k: usize, j: usize| (ranges[k].min(ranges[j]) - res).max(0.0);

    if n >= 3 {
        // Union of the wedges: along each beam the outline steps between the
        // lengths of the two wedges that share it.
        let mut outline = Vec::with_capacity(2 * n);
        for k in 0..n {
            let j = (k + 1) % n;
            let m = wedge(k, j);
            outline.push(o + dirs[k] * m);
            outline.push(o + dirs[j] * m);
        }
        fill_polygon(&frame, &outline, |ix, iy| occ.set(ix, iy, CellState::Free));
    }

    for k in 0..n {
        // Hit beams stop half a cell short so a beam grazing a corner does
        // not free the wall cell it clips on the way.
        let reach = if is_hit(k) { ranges[k] - 0.5 * res } else { ranges[k] };
        // The stretch inside both neighbouring wedges is already free.
        let start = if n >= 3 {
            (wedge((k + n - 1) % n, k).min(wedge(k, (k + 1) % n)) - 2.0 * res).max(0.0)
        } else {
            0.0
        };
        if reach > start {
            traverse(&frame, o + dirs[k] * start, o + dirs[k] * reach, |ix, iy, _| {
                occ.set(ix, iy, CellState::Free)
            });
        }
    }

    for k in 0..n {
        if !is_hit(k) {
            continue;
        }
        let behind = end(k) + dirs[k] * (SURFACE_DEPTH_CELLS * res);
        traverse(&frame, end(k), behind, |ix, iy, _| {
            occ.set(ix, iy, CellState::Occupied)
        });
        let j = (k + 1) % n;
        if j == k || (n < 3 && j < k) || !is_hit(j) {
            continue;
        }
        if end(k).distance(end(j)) <= LINK_CELLS * res {
            traverse(&frame, end(k), end(j), |ix, iy, _| {
                occ.set(ix, iy, CellState::Occupied)
            });
        }
    }
}

/// Grid traversal (Amanatides-Woo) of every cell the segment `ab` passes
/// through, in order. The flag marks the cell containing `b`.
fn traverse(frame: &GridFrame, a: Point2, b: Point2, mut f: impl FnMut(usize, usize, bool)) {
    let res = frame.resolution;
    let (mut ix, mut iy) = frame.cell_coords(a);
    let (ex, ey) = frame.cell_coords(b);
    let d = b - a;
    let axis = |d: f64, a: f64, i: i64, origin: f64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((i + 1) as f64 * res + origin - a) / d, res / d)
        } else if d < 0.0 {
            (-1, (i as f64 * res + origin - a) / d, -res / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (sx, mut tx, dx) = axis(d.x, a.x, ix, frame.origin.x);
    let (sy, mut ty, dy) = axis(d.y, a.y, iy, frame.origin.y);
    let max_steps = (ex - ix).unsigned_abs() + (ey - iy).unsigned_abs() + 1;
    for _ in 0..=max_steps {
        let last = (ix, iy) == (ex, ey);
        if let Some((cx, cy)) = frame.checked(ix, iy) {
            f(cx, cy, last);
        }
        if last {
            return;
        }
        if tx.min(ty) > 1.0 {
            return;
        }
        if tx < ty {
            ix += sx;
            tx += dx;
        } else {
            iy += sy;
            ty += dy;
        }
    }
}

/// Calls `f` for every cell whose center lies inside the closed outline
/// (even-odd rule).
fn fill_polygon(frame: &GridFrame, outline: &[Point2], mut f: impl FnMut(usize, usize)) {
    let res = frame.resolution;
    let row_of = |y: f64| (y - frame.origin.y) / res - 0.5;
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for (k, &p) in outline.iter().enumerate() {
        let q = outline[(k + 1) % outline.len()];
        if p.y == q.y {
            continue;
        }
        let (lo, hi) = if p.y < q.y { (p, q) } else { (q, p) };
        // Rows whose center satisfies lo.y <= y < hi.y.
        let first = libm::ceil(row_of(lo.y)).max(0.0);
        let last = libm::ceil(row_of(hi.y)).min(frame.height as f64);
        let mut iy = first;
        while iy < last {
            let y = frame.origin.y + (iy + 0.5) * res;
            let x = lo.x + (y - lo.y) / (hi.y - lo.y) * (hi.x - lo.x);
            crossings.push((iy as usize, x));
            iy += 1.0;
        }
    }
    crossings.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let col_of = |x: f64| (x - frame.origin.x) / res - 0.5;
    for pair in crossings.chunks_exact(2) {
        let ((iy, x0), (_, x1)) = (pair[0], pair[1]);
        let c0 = libm::ceil(col_of(x0)).max(0.0);
        let c1 = (libm::floor(col_of(x1)) + 1.0).min(frame.width as f64);
        let mut ix = c0;
        while ix < c1 {
            f(ix as usize, iy);
            ix += 1.0;
        }
    }
}

/// Convex hull (monotone chain), counter-clockwise without collinear points.
fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &Point2> = if pass == 0 {
            &mut pts.iter()
        } else {
            &mut pts.iter().rev()
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Convex hull of `obstacle` pushed outward by `clearance` (mitred corners).
fn inflated_hull(obstacle: &Polygon, clearance: f64) -> Polygon {
    let hull = convex_hull(obstacle.vertices());
    let n = hull.len();
    let normal = |i: usize| {
        let e = hull[(i + 1) % n] - hull[i];
        Point2::new(e.y, -e.x).normalized()
    };
    let out = (0..n)
        .map(|i| {
            let n1 = normal((i + n - 1) % n);
            let n2 = normal(i);
            hull[i] + (n1 + n2) * (clearance / (1.0 + n1.dot(n2)))
        })
        .collect();
    Polygon::from_trusted(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub dt: f64,
    /// Area-error check cadence, in ticks.
    pub replan_every: usize,
    /// Defaults to a fifth of the coverage radius.
    pub grid_resolution: Option<f64>,
    pub dp_tolerance: f64,
    /// Defaults to three grid cells.
    pub inlier_tolerance: Option<f64>,
    /// Defaults to two grid cells.
    pub detour_clearance: Option<f64>,
    /// Defaults to four times the plan's traversal time plus a minute.
    pub max_time: Option<f64>,
    pub heading_candidates: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            replan_every: 20,
            grid_resolution: None,
            dp_tolerance: DEFAULT_DP_TOLERANCE,
            inlier_tolerance: None,
            detour_clearance: None,
            max_time: None,
            heading_candidates: crate::covergrid::DEFAULT_HEADING_COUNT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ReplanKind {
    /// The area error exceeded the threshold.
    Area,
    /// The next waypoint could not be reached around the known obstacles.
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplanEvent {
    pub t: f64,
    pub kind: ReplanKind,
    pub error: f64,
    pub threshold: f64,
    pub new_polygon: Polygon,
    pub start: Point2,
    /// True when the robot's pose was moved onto the boundary to start.
    pub snapped: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AppliedEvent {
    pub t: f64,
    pub op: EventOp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TickSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub coverage_ratio: f64,
    /// Heading that would add the most coverage in one step from here.
    pub best_heading: f64,
    pub heading_gain: f64,
    pub area_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimMetrics {
    pub coverage_ratio: f64,
    pub covered_area: f64,
    pub target_area: f64,
    pub distance: f64,
    pub duration: f64,
    pub ticks: usize,
    pub replan_events: usize,
    pub forced_replans: usize,
    pub skipped_waypoints: usize,
    /// Every waypoint of the final plan was reached before `max_time`.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub seed: u64,
    /// Estimated position at the end of every tick.
    pub trajectory: Vec<Point2>,
    /// Plan waypoints in the order they were reached.
    pub visited_waypoints: Vec<Point2>,
    pub ticks: Vec<TickSample>,
    pub world_events: Vec<AppliedEvent>,
    pub replans: Vec<ReplanEvent>,
    pub metrics: SimMetrics,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub tick_index: usize,
    /// Estimated pose.
    pub pose: Pose,
    pub true_pose: Pose,
    pub waypoint_cursor: usize,
    pub occ: OccupancyGrid,
    pub cov: CoverageGrid,
    pub plan: CoveragePlan,
    pub rng_seed: u64,
    pub world: World,
    /// Map the current plan was made on.
    pub reference: Polygon,
    pub threshold: f64,
    spec: WorldSpec,
    config: SimConfig,
    max_time: f64,
    resolution: f64,
    next_event: usize,
    route: VecDeque<Point2>,
    rng: ChaCha8Rng,
    headings: Vec<f64>,
    report: SimReport,
}

impl SimState {
    pub fn new(spec: &WorldSpec, plan: CoveragePlan, config: SimConfig, seed: u64) -> Result<Self> {
        spec.validate()?;
        let &start = plan
            .waypoints
            .first()
            .ok_or(Error::Empty("plan has no waypoints"))?;
        if !(config.dt > 0.0) || config.replan_every == 0 {
            return Err(Error::Precondition("dt and replan cadence must be positive"));
        }
        let r = spec.robot.coverage_radius;
        let resolution = config.grid_resolution.unwrap_or(r / 5.0);
        let max_time = config
            .max_time
            .unwrap_or(4.0 * plan.total_length / spec.robot.speed + 60.0);
        let (lo, hi) = spec.extent();
        let margin = 2.0 * resolution;
        let frame = GridFrame::new(
            Point2::new(lo.x - margin, lo.y - margin),
            resolution,
            libm::ceil((hi.x - lo.x + 2.0 * margin) / resolution) as usize,
            libm::ceil((hi.y - lo.y + 2.0 * margin) / resolution) as usize,
        )?;
        let threshold = replan_threshold(&plan, r)?;
        let pose = Pose::at(start, heading_of(&plan.waypoints));
        let mut state = SimState {
            t: 0.0,
            tick_index: 0,
            pose,
            true_pose: pose,
            waypoint_cursor: 0,
            occ: OccupancyGrid::new(frame),
            cov: CoverageGrid::with_frame(frame, &spec.boundary),
            plan,
            rng_seed: seed,
            world: World::new(spec.boundary.clone()),
            reference: spec.boundary.clone(),
            threshold,
            spec: spec.clone(),
            config: config.clone(),
            max_time,
            resolution,
            next_event: 0,
            route: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            headings: headings(config.heading_candidates.max(1)),
            report: SimReport {
                seed,
                trajectory: Vec::new(),
                visited_waypoints: Vec::new(),
                ticks: Vec::new(),
                world_events: Vec::new(),
                replans: Vec::new(),
                metrics: SimMetrics {
                    coverage_ratio: 0.0,
                    covered_area: 0.0,
                    target_area: 0.0,
                    distance: 0.0,
                    duration: 0.0,
                    ticks: 0,
                    replan_events: 0,
                    forced_replans: 0,
                    skipped_waypoints: 0,
                    completed: false,
                },
            },
        };
        state.apply_due_events();
        state.report.visited_waypoints.push(start);
        state.waypoint_cursor = 1;
        state.sense(start)?;
        state.cov.stamp(state.pose.position(), r);
        Ok(state)
    }

    /// All waypoints of the current plan have been reached.
    pub fn is_done(&self) -> bool {
        self.route.is_empty() && self.waypoint_cursor >= self.plan.waypoints.len()
    }

    pub fn report(&self) -> &SimReport {
        &self.report
    }

    /// Ticks at the configured step until the plan is done or the time
    /// budget (measured against the initial plan) runs out.
    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_done() && self.t < self.max_time {
            self.tick(self.config.dt)?;
        }
        Ok(())
    }

    pub fn tick(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Precondition("dt must be positive"));
        }
        self.t += dt;
        self.tick_index += 1;
        self.apply_due_events();

        let prev_estimate = self.pose.position();
        self.advance(self.spec.robot.speed * dt)?;
        self.sense(prev_estimate)?;

        let r = self.spec.robot.coverage_radius;
        let mut area_error = None;
        if self.tick_index % self.config.replan_every == 0 {
            area_error = self.check_area()?;
        }
        let est = self.pose.position();
        let (best, gain) = best_heading(&self.cov, est, self.spec.robot.speed * dt, r, &self.headings)?;
        self.report.trajectory.push(est);
        self.report.ticks.push(TickSample {
            t: self.t,
            x: est.x,
            y: est.y,
            theta: self.pose.theta,
            coverage_ratio: self.cov.coverage_ratio()?,
            best_heading: best,
            heading_gain: gain,
            area_error,
        });
        Ok(())
    }

    fn apply_due_events(&mut self) {
        while let Some(e) = self.spec.events.get(self.next_event) {
            if e.time > self.t + 1e-12 {
                break;
            }
            self.world.apply(e);
            if e.op == EventOp::AddObstacle {
                self.cov.block(&e.geometry);
            }
            self.report.world_events.push(AppliedEvent { t: self.t, op: e.op });
            self.next_event += 1;
        }
    }

    /// Pose noise, scan and occupancy update, then coverage credit for the
    /// estimated motion since `prev_estimate`.
    fn sense(&mut self, prev_estimate: Point2) -> Result<()> {
        let sigma = self.spec.robot.pose_noise_sigma;
        let truth = self.true_pose;
        self.pose = if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).map_err(|_| Error::Precondition("bad pose sigma"))?;
            let dx = n.sample(&mut self.rng);
            let dy = n.sample(&mut self.rng);
            Pose::new(truth.x + dx, truth.y + dy, truth.theta)
        } else {
            truth
        };

        let lidar = self.spec.lidar;
        let mut ranges = lidar_scan(truth, &self.world, lidar.beams, lidar.max_range)?;
        if lidar.noise_sigma > 0.0 {
            let n = Normal::new(0.0, lidar.noise_sigma)
                .map_err(|_| Error::Precondition("bad lidar sigma"))?;
            for r in &mut ranges {
                if *r < lidar.max_range {
                    *r = (*r + n.sample(&mut self.rng)).clamp(0.0, lidar.max_range);
                }
            }
        }
        integrate_scan(&mut self.occ, self.pose, &ranges, lidar.max_range);
        let r = self.spec.robot.coverage_radius;
        self.cov.stamp_segment(prev_estimate, self.pose.position(), r);
        Ok(())
    }

    fn clearance(&self) -> f64 {
        self.config.detour_clearance.unwrap_or(2.0 * self.resolution)
    }

    /// Moves the true pose `budget` meters along the plan.
    fn advance(&mut self, mut budget: f64) -> Result<()> {
        let mut forced_this_tick = false;
        // Each iteration either consumes budget, reaches a target or
        // changes the route; the cap guards against degenerate loops.
        for _ in 0..10_000 {
            if budget <= 0.0 {
                break;
            }
            let pos = self.true_pose.position();
            let target = match self.route.front() {
                Some(&p) => p,
                None => match self.plan.waypoints.get(self.waypoint_cursor) {
                    Some(&p) => p,
                    None => break,
                },
            };
            if self.route.is_empty() {
                match self.plan_detour(pos, target) {
                    Detour::Clear => {}
                    Detour::Route(points) => {
                        self.route.extend(points);
                        continue;
                    }
                    Detour::SkipTarget => {
                        self.waypoint_cursor += 1;
                        self.report.metrics.skipped_waypoints += 1;
                        continue;
                    }
                    Detour::Blocked => {
                        if forced_this_tick {
                            self.waypoint_cursor += 1;
                            self.report.metrics.skipped_waypoints += 1;
                        } else {
                            forced_this_tick = true;
                            self.replan(ReplanKind::Forced, 0.0)?;
                        }
                        continue;
                    }
                }
            }
            // Replanned boundaries are cell-quantized and may sit just past
            // the real wall; the robot stops at the wall instead.
            let target = self.clamp_to_boundary(pos, target);
            let d = pos.distance(target);
            if d > EPS {
                self.true_pose.theta = libm::atan2(target.y - pos.y, target.x - pos.x);
            }
            if d <= budget {
                self.true_pose.x = target.x;
                self.true_pose.y = target.y;
                budget -= d;
                self.report.metrics.distance += d;
                if self.route.pop_front().is_none() {
                    self.report.visited_waypoints.push(target);
                    self.waypoint_cursor += 1;
                }
            } else {
                let step = pos + (target - pos) * (budget / d);
                self.true_pose.x = step.x;
                self.true_pose.y = step.y;
                self.report.metrics.distance += budget;
                budget = 0.0;
            }
        }
        Ok(())
    }

    fn clamp_to_boundary(&self, pos: Point2, target: Point2) -> Point2 {
        let b = &self.world.boundary;
        if b.contains(target) || b.distance_to_boundary(target) <= EPS {
            return target;
        }
        let d = target - pos;
        let len = d.norm();
        let u = d * (1.0 / len);
        let exit = (0..b.len())
            .filter_map(|i| {
                let (p, q) = b.edge(i);
                ray_exit(pos, u, p, q)
            })
            .fold(len, f64::min);
        pos + u * exit
    }

    fn plan_detour(&self, pos: Point2, target: Point2) -> Detour {
        let c = self.clearance();
        let mut first: Option<(f64, Polygon)> = None;
        for obstacle in &self.world.obstacles {
            // Touching an obstacle is allowed; only its interior blocks.
            let core = inflated_hull(obstacle, -CONTACT_TOLERANCE);
            if core.contains(target) {
                return Detour::SkipTarget;
            }
            let blocked = core.contains(pos) || core.segment_hits_boundary(pos, target);
            if !blocked {
                continue;
            }
            let hull = inflated_hull(obstacle, c);
            let t_in = segment_polygon_params(pos, target, &hull)
                .first()
                .copied()
                .unwrap_or(0.0);
            if first.as_ref().is_none_or(|(t, _)| t_in < *t) {
                first = Some((t_in, hull));
            }
        }
        let Some((_, hull)) = first else {
            return Detour::Clear;
        };
        match route_around(&hull, pos, target, |p| self.routable(p)) {
            Some(points) => Detour::Route(points),
            None => Detour::Blocked,
        }
    }

    fn routable(&self, p: Point2) -> bool {
        let b = &self.world.boundary;
        (b.contains(p) || b.distance_to_boundary(p) <= EPS)
            && self
                .world
                .obstacles
                .iter()
                .map(|o| inflated_hull(o, -CONTACT_TOLERANCE))
                .all(|g| !g.contains(p))
    }

    fn check_area(&mut self) -> Result<Option<f64>> {
        let est = self.pose.position();
        let observed = match extract_boundary_with_prior(
            &self.occ,
            est,
            self.config.dp_tolerance,
            Some(&self.reference),
        ) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("t={:.2}: boundary extraction failed: {e}", self.t);
                return Ok(None);
            }
        };
        let tol = self
            .config
            .inlier_tolerance
            .unwrap_or(INLIER_TOLERANCE_CELLS * self.resolution);
        let ae = AreaError::evaluate(&observed, &self.reference, tol, self.threshold)?;
        if let ReplanAction::ReplanFrom { polygon, start } =
            decide(ae.error, self.threshold, &observed, est)
        {
            self.apply_replan(ReplanKind::Area, ae.error, polygon, start)?;
        }
        Ok(Some(ae.error))
    }

    fn replan(&mut self, kind: ReplanKind, error: f64) -> Result<()> {
        let est = self.pose.position();
        let polygon = extract_boundary_with_prior(
            &self.occ,
            est,
            self.config.dp_tolerance,
            Some(&self.reference),
        )
        .unwrap_or_else(|_| self.reference.clone());
        self.apply_replan(kind, error, polygon, est)
    }

    fn apply_replan(&mut self, kind: ReplanKind, error: f64, polygon: Polygon, pose: Point2) -> Result<()> {
        let r = self.spec.robot.coverage_radius;
        let (start, snapped) = snap_start(&polygon, pose);
        if snapped {
            log::info!(
                "t={:.2}: replan start snapped from ({:.3}, {:.3}) to boundary point ({:.3}, {:.3})",
                self.t,
                pose.x,
                pose.y,
                start.x,
                start.y
            );
        }
        let area = plan_area(&polygon, start, r)?;
        self.report.replans.push(ReplanEvent {
            t: self.t,
            kind,
            error,
            threshold: self.threshold,
            new_polygon: polygon.clone(),
            start,
            snapped,
        });
        match kind {
            ReplanKind::Area => self.report.metrics.replan_events += 1,
            ReplanKind::Forced => self.report.metrics.forced_replans += 1,
        }
        self.threshold = replan_threshold(&area.plan, r)?;
        self.plan = area.plan;
        self.reference = polygon;
        self.waypoint_cursor = 0;
        self.route.clear();
        Ok(())
    }

    /// Consumes the state and returns the final report.
    pub fn finish(mut self) -> Result<SimReport> {
        let m = &mut self.report.metrics;
        m.coverage_ratio = self.cov.coverage_ratio()?;
        m.covered_area = self.cov.covered_area();
        m.target_area = self.cov.target_area();
        m.duration = self.t;
        m.ticks = self.tick_index;
        m.completed = self.route.is_empty() && self.waypoint_cursor >= self.plan.waypoints.len();
        Ok(self.report)
    }
}

enum Detour {
    Clear,
    Route(Vec<Point2>),
    SkipTarget,
    Blocked,
}

/// Sorted parameters in `[0, 1]` where segment `ab` crosses `poly`'s edges,
/// paired with nothing else; used for entry ordering.
fn segment_polygon_params(a: Point2, b: Point2, poly: &Polygon) -> Vec<f64> {
    let mut ts: Vec<f64> = segment_polygon_hits(a, b, poly).into_iter().map(|(t, _)| t).collect();
    ts.sort_by(f64::total_cmp);
    ts
}

fn segment_polygon_hits(a: Point2, b: Point2, poly: &Polygon) -> Vec<(f64, usize)> {
    let d = b - a;
    let len = d.norm();
    if len < EPS {
        return Vec::new();
    }
    let u = d * (1.0 / len);
    (0..poly.len())
        .filter_map(|i| {
            let (p, q) = poly.edge(i);
            ray_segment(a, u, p, q)
                .filter(|&t| t <= len)
                .map(|t| (t / len, i))
        })
        .collect()
}

/// Waypoints that lead from `pos` around `hull` to the far side of the
/// segment towards `target`, or `None` when neither way round is routable.
fn route_around(
    hull: &Polygon,
    pos: Point2,
    target: Point2,
    routable: impl Fn(Point2) -> bool,
) -> Option<Vec<Point2>> {
    let n = hull.len();
    let mut hits = segment_polygon_hits(pos, target, hull);
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (entry, e_in) = if hull.contains(pos) || hits.is_empty() {
        let p = hull.closest_boundary_point(pos);
        let e = (0..n)
            .min_by(|&i, &j| {
                let (a, b) = hull.edge(i);
                let (c, d) = hull.edge(j);
                crate::geometry::point_segment_distance(p, a, b)
                    .total_cmp(&crate::geometry::point_segment_distance(p, c, d))
            })
            .unwrap_or(0);
        (p, e)
    } else {
        (pos.lerp(target, hits[0].0), hits[0].1)
    };
    let &(t_out, e_out) = hits.last()?;
    let exit = pos.lerp(target, t_out);

    let ccw: Vec<Point2> = {
        let mut v = vec![entry];
        let mut i = (e_in + 1) % n;
        let stop = (e_out + 1) % n;
        for _ in 0..n {
            if i == stop {
                break;
            }
            v.push(hull.vertex(i));
            i = (i + 1) % n;
        }
        v.push(exit);
        v
    };
    let cw: Vec<Point2> = {
        let mut v = vec![entry];
        let mut i = e_in;
        for _ in 0..n {
            if i == e_out {
                break;
            }
            v.push(hull.vertex(i));
            i = (i + n - 1) % n;
        }
        v.push(exit);
        v
    };
    let length = |v: &[Point2]| v.windows(2).map(|w| w[0].distance(w[1])).sum::<f64>();
    let ok = |v: &[Point2]| v.iter().all(|&p| routable(p));
    let mut options: Vec<Vec<Point2>> = [ccw, cw].into_iter().filter(|v| ok(v)).collect();
    options.sort_by(|a, b| length(a).total_cmp(&length(b)));
    options.into_iter().next()
}

fn heading_of(waypoints: &[Point2]) -> f64 {
    match waypoints {
        [a, b, ..] => libm::atan2(b.y - a.y, b.x - a.x),
        _ => 0.0,
    }
}

/// Runs `plan` in `world` with the default configuration.
pub fn run(world: &WorldSpec, plan: CoveragePlan, seed: u64) -> Result<SimReport> {
    run_with(world, plan, SimConfig::default(), seed)
}

pub fn run_with(world: &WorldSpec, plan: CoveragePlan, config: SimConfig, seed: u64) -> Result<SimReport> {
    let mut state = SimState::new(world, plan, config, seed)?;
    state.run_to_end()?;
    state.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, SQRT_2};

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn scan_in_square_room() {
        let world = World::new(rect(0.0, 0.0, 10.0, 10.0));
        let pose = Pose::new(5.0, 5.0, 0.0);
        let ranges = lidar_scan(pose, &world, 8, 20.0).unwrap();
        assert!((ranges[0] - 5.0).abs() < 1e-12);
        assert!((ranges[2] - 5.0).abs() < 1e-12);
        assert!((ranges[1] - 5.0 * SQRT_2).abs() < 1e-9);
        let diag = lidar_scan(Pose::new(5.0, 5.0, FRAC_PI_4), &world, 8, 20.0).unwrap();
        assert!((diag[0] - 7.0711).abs() < 1e-4);
        let clamped = lidar_scan(pose, &world, 8, 4.0).unwrap();
        assert!(clamped.iter().all(|&r| r == 4.0));
    }

    #[test]
    fn scan_rejects_blocked_pose() {
        let mut world = World::new(rect(0.0, 0.0, 10.0, 10.0));
        assert!(lidar_scan(Pose::new(11.0, 5.0, 0.0), &world, 8, 20.0).is_err());
        world.obstacles.push(rect(4.0, 4.0, 6.0, 6.0));
        assert!(lidar_scan(Pose::new(5.0, 5.0, 0.0), &world, 8, 20.0).is_err());
        assert!(lidar_scan(Pose::new(5.0, 5.0, 0.0), &world, 4, 20.0).is_err());
        let r = lidar_scan(Pose::new(2.0, 5.0, 0.0), &world, 8, 20.0).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-12);
    }

    fn small_grid() -> OccupancyGrid {
        OccupancyGrid::new(GridFrame::new(Point2::new(-0.5, -0.5), 0.1, 30, 10).unwrap())
    }

    #[test]
    fn single_beam_marks_free_then_occupied() {
        let mut occ = small_grid();
        integrate_scan(&mut occ, Pose::new(0.05, 0.05, 0.0), &[1.0], 5.0);
        let f = *occ.frame();
        let hit = f.cell_of(Point2::new(1.05 + 1e-6, 0.05)).unwrap();
        assert_eq!(occ.get(hit.0, hit.1), CellState::Occupied);
        // The hit cell plus the surface depth behind it.
        assert_eq!(occ.count(CellState::Occupied), 3);
        assert_eq!(occ.get(hit.0 + 2, hit.1), CellState::Occupied);
        assert_eq!(occ.count(CellState::Free), 10);
        let before = occ.clone();
        integrate_scan(&mut occ, Pose::new(0.05, 0.05, 0.0), &[1.0], 5.0);
        assert_eq!(occ, before);
    }

    #[test]
    fn clamped_beam_has_no_occupied_cell() {
        let mut occ = small_grid();
        integrate_scan(&mut occ, Pose::new(0.05, 0.05, 0.0), &[1.0], 1.0);
        assert_eq!(occ.count(CellState::Occupied), 0);
        assert_eq!(occ.count(CellState::Free), 11);
    }

    #[test]
    fn traversal_is_connected() {
        let f = GridFrame::new(Point2::new(0.0, 0.0), 0.1, 50, 50).unwrap();
        let mut cells = Vec::new();
        traverse(&f, Point2::new(0.33, 0.27), Point2::new(3.71, 2.02), |x, y, _| cells.push((x, y)));
        assert_eq!(cells.first(), Some(&(3, 2)));
        assert_eq!(cells.last(), Some(&(37, 20)));
        for w in cells.windows(2) {
            let dx = w[0].0.abs_diff(w[1].0);
            let dy = w[0].1.abs_diff(w[1].1);
            assert_eq!(dx + dy, 1);
        }
    }

    #[test]
    fn full_scan_frees_the_room() {
        let room = rect(0.0, 0.0, 4.0, 3.0);
        let world = World::new(room.clone());
        let frame = GridFrame::covering(&room, 0.05, 0.1).unwrap();
        let mut occ = OccupancyGrid::new(frame);
        let pose = Pose::new(2.0, 1.5, 0.0);
        let ranges = lidar_scan(pose, &world, 360, 20.0).unwrap();
        integrate_scan(&mut occ, pose, &ranges, 20.0);
        let mut unknown_inside = 0;
        for iy in 0..frame.height {
            for ix in 0..frame.width {
                let c = frame.cell_center(ix, iy);
                if room.contains(c) && room.distance_to_boundary(c) > 0.1 {
                    assert_ne!(occ.get(ix, iy), CellState::Occupied);
                    if occ.get(ix, iy) == CellState::Unknown {
                        unknown_inside += 1;
                    }
                }
            }
        }
        assert_eq!(unknown_inside, 0);
    }

    #[test]
    fn hull_inflation_offsets_edges() {
        let h = inflated_hull(&rect(0.0, 0.0, 2.0, 1.0), 0.1);
        let (lo, hi) = h.bounds();
        assert!((lo.x + 0.1).abs() < 1e-12 && (lo.y + 0.1).abs() < 1e-12);
        assert!((hi.x - 2.1).abs() < 1e-12 && (hi.y - 1.1).abs() < 1e-12);
    }

    #[test]
    fn route_goes_around_box() {
        let hull = inflated_hull(&rect(4.0, 4.0, 6.0, 6.0), 0.1);
        let route = route_around(&hull, Point2::new(0.0, 5.0), Point2::new(10.0, 5.0), |p| p.y <= 6.0).unwrap();
        assert_eq!(route.len(), 4);
        assert!(route.iter().all(|p| p.y <= 6.0));
        assert!((route[0].x - 3.9).abs() < 1e-9 && (route[3].x - 6.1).abs() < 1e-9);
    }

    fn rect_plan(room: &Polygon, r: f64) -> CoveragePlan {
        plan_area(room, room.vertex(0), r).unwrap().plan
    }

    #[test]
    fn noiseless_run_visits_every_waypoint() {
        let room = rect(0.0, 0.0, 4.0, 3.0);
        let spec = WorldSpec::new(room.clone());
        let plan = rect_plan(&room, 0.25);
        let report = run(&spec, plan.clone(), 1).unwrap();
        assert_eq!(report.visited_waypoints, plan.waypoints);
        assert!(report.metrics.completed);
        assert!(report.metrics.coverage_ratio >= 0.98, "{}", report.metrics.coverage_ratio);
        assert_eq!(report.metrics.replan_events, 0);
        assert!((report.metrics.distance - plan.total_length).abs() < 1e-6);
        let world = World::new(room);
        assert!(report.trajectory.iter().all(|&p| world.in_free_space(p)));
    }

    #[test]
    fn coverage_never_decreases() {
        let room = rect(0.0, 0.0, 3.0, 2.0);
        let spec = WorldSpec::new(room.clone());
        let report = run(&spec, rect_plan(&room, 0.25), 3).unwrap();
        for w in report.ticks.windows(2) {
            assert!(w[1].coverage_ratio >= w[0].coverage_ratio);
        }
    }

    #[test]
    fn same_seed_same_report() {
        let room = rect(0.0, 0.0, 3.0, 2.0);
        let mut spec = WorldSpec::new(room.clone());
        spec.robot.pose_noise_sigma = 0.01;
        spec.lidar.noise_sigma = 0.01;
        let plan = rect_plan(&room, 0.25);
        let a = run(&spec, plan.clone(), 9).unwrap();
        let b = run(&spec, plan.clone(), 9).unwrap();
        assert_eq!(a, b);
        let c = run(&spec, plan, 10).unwrap();
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn invalid_specs_rejected() {
        let room = rect(0.0, 0.0, 3.0, 2.0);
        let mut spec = WorldSpec::new(room.clone());
        spec.events.push(WorldEvent {
            time: 2.0,
            op: EventOp::AddObstacle,
            geometry: rect(1.0, 1.0, 1.5, 1.5),
        });
        spec.events.push(WorldEvent {
            time: 1.0,
            op: EventOp::AddObstacle,
            geometry: rect(1.0, 0.2, 1.5, 0.5),
        });
        assert!(spec.validate().is_err());
        spec.events.pop();
        assert!(spec.validate().is_ok());
        spec.events[0].geometry = rect(2.5, 1.0, 3.5, 1.5);
        assert!(spec.validate().is_err());
    }
}
