//! Raster bookkeeping: which parts of the target area have been swept, and
//! what the robot's sensor has seen so far.
//!
//! Both grids share a [`GridFrame`]. Cell `(ix, iy)` spans
//! `origin + [ix, ix+1) · res × [iy, iy+1) · res` and is represented by its
//! center everywhere (coverage credit, inside mask, occupancy lookups).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point2, Polygon};

/// Number of candidate headings used by [`default_headings`].
pub const DEFAULT_HEADING_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridFrame {
    pub origin: Point2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridFrame {
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::Precondition("grid resolution must be positive"));
        }
        if !origin.is_finite() {
            return Err(Error::Precondition("grid origin must be finite"));
        }
        if width == 0 || height == 0 {
            return Err(Error::Empty("grid has no cells"));
        }
        Ok(GridFrame {
            origin,
            resolution,
            width,
            height,
        })
    }

    /// Frame covering `polygon`'s bounding box plus `margin` on every side.
    pub fn covering(polygon: &Polygon, resolution: f64, margin: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::Precondition("grid resolution must be positive"));
        }
        let (lo, hi) = polygon.bounds();
        let origin = Point2::new(lo.x - margin, lo.y - margin);
        let width = libm::ceil((hi.x - lo.x + 2.0 * margin) / resolution) as usize;
        let height = libm::ceil((hi.y - lo.y + 2.0 * margin) / resolution) as usize;
        GridFrame::new(origin, resolution, width.max(1), height.max(1))
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Signed cell coordinates of `p`, possibly outside the frame.
    pub fn cell_coords(&self, p: Point2) -> (i64, i64) {
        (
            libm::floor((p.x - self.origin.x) / self.resolution) as i64,
            libm::floor((p.y - self.origin.y) / self.resolution) as i64,
        )
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let (ix, iy) = self.cell_coords(p);
        self.checked(ix, iy)
    }

    pub fn checked(&self, ix: i64, iy: i64) -> Option<(usize, usize)> {
        if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
            None
        } else {
            Some((ix as usize, iy as usize))
        }
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.cell_of(p).is_some()
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    /// Row range whose centers can lie within `[y0, y1]`.
    fn rows(&self, y0: f64, y1: f64) -> core::ops::Range<usize> {
        let lo = libm::floor((y0 - self.origin.y) / self.resolution - 0.5) as i64;
        let hi = libm::ceil((y1 - self.origin.y) / self.resolution - 0.5) as i64 + 1;
        clamp_range(lo, hi, self.height)
    }

    fn cols(&self, x0: f64, x1: f64) -> core::ops::Range<usize> {
        let lo = libm::floor((x0 - self.origin.x) / self.resolution - 0.5) as i64;
        let hi = libm::ceil((x1 - self.origin.x) / self.resolution - 0.5) as i64 + 1;
        clamp_range(lo, hi, self.width)
    }
}

fn clamp_range(lo: i64, hi: i64, n: usize) -> core::ops::Range<usize> {
    let lo = lo.clamp(0, n as i64) as usize;
    let hi = hi.clamp(0, n as i64) as usize;
    lo..hi.max(lo)
}

/// Covered-cell accumulator over a fixed target polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    frame: GridFrame,
    covered: Vec<bool>,
    inside: Vec<bool>,
    /// Cells under obstacles: still part of the target, never creditable.
    blocked: Vec<bool>,
    inside_count: usize,
    covered_count: usize,
}

impl CoverageGrid {
    /// Grid over `target` whose inside mask is the cell-center test.
    pub fn new(target: &Polygon, resolution: f64) -> Result<Self> {
        let frame = GridFrame::covering(target, resolution, resolution)?;
        Ok(Self::with_frame(frame, target))
    }

    pub fn with_frame(frame: GridFrame, target: &Polygon) -> Self {
        let mut inside = vec![false; frame.len()];
        for iy in 0..frame.height {
            for ix in 0..frame.width {
                inside[frame.index(ix, iy)] = target.contains(frame.cell_center(ix, iy));
            }
        }
        let inside_count = inside.iter().filter(|&&b| b).count();
        CoverageGrid {
            frame,
            covered: vec![false; frame.len()],
            inside,
            blocked: vec![false; frame.len()],
            inside_count,
            covered_count: 0,
        }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn is_inside(&self, ix: usize, iy: usize) -> bool {
        self.inside[self.frame.index(ix, iy)]
    }

    pub fn is_covered(&self, ix: usize, iy: usize) -> bool {
        self.covered[self.frame.index(ix, iy)]
    }

    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        self.blocked[self.frame.index(ix, iy)]
    }

    /// Stops crediting cells whose centers lie inside `obstacle`.
    pub fn block(&mut self, obstacle: &Polygon) {
        let frame = self.frame;
        let (lo, hi) = obstacle.bounds();
        for iy in frame.rows(lo.y, hi.y) {
            for ix in frame.cols(lo.x, hi.x) {
                if obstacle.contains(frame.cell_center(ix, iy)) {
                    let i = frame.index(ix, iy);
                    self.blocked[i] = true;
                }
            }
        }
    }

    fn creditable(&self, i: usize) -> bool {
        self.inside[i] && !self.covered[i] && !self.blocked[i]
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    /// Covered cells inside the target.
    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    pub fn covered_area(&self) -> f64 {
        self.covered_count as f64 * self.frame.cell_area()
    }

    pub fn target_area(&self) -> f64 {
        self.inside_count as f64 * self.frame.cell_area()
    }

    pub fn coverage_ratio(&self) -> Result<f64> {
        if self.inside_count == 0 {
            return Err(Error::Empty("coverage grid has no inside cells"));
        }
        Ok(self.covered_count as f64 / self.inside_count as f64)
    }

    /// Marks the inside cells whose centers lie within `r` of `pose` and
    /// returns the newly covered area in square meters.
    pub fn stamp(&mut self, pose: Point2, r: f64) -> f64 {
        if !self.frame.contains_point(pose) {
            log::debug!("stamp at ({}, {}) outside the grid ignored", pose.x, pose.y);
            return 0.0;
        }
        let flips = self.visit_disk(pose, r);
        flips as f64 * self.frame.cell_area()
    }

    /// Area [`stamp`](Self::stamp) would add, without modifying the grid.
    pub fn stamp_gain(&self, pose: Point2, r: f64) -> f64 {
        if !self.frame.contains_point(pose) {
            return 0.0;
        }
        let mut flips = 0;
        self.for_disk(pose, r, |g, i| {
            if g.creditable(i) {
                flips += 1;
            }
        });
        flips as f64 * self.frame.cell_area()
    }

    /// Stamps the capsule swept by a disk of radius `r` moving from `a` to
    /// `b`. Unlike [`stamp`](Self::stamp), parts of the capsule inside the
    /// frame are credited even when the endpoints are not.
    pub fn stamp_segment(&mut self, a: Point2, b: Point2, r: f64) -> f64 {
        let frame = self.frame;
        let mut flips = 0usize;
        for iy in frame.rows(a.y.min(b.y) - r, a.y.max(b.y) + r) {
            let y = frame.cell_center(0, iy).y;
            let Some((x0, x1)) = capsule_row(a, b, r, y) else {
                continue;
            };
            for ix in frame.cols(x0, x1) {
                let i = frame.index(ix, iy);
                if self.creditable(i)
                    && point_segment_distance(frame.cell_center(ix, iy), a, b) <= r
                {
                    self.covered[i] = true;
                    flips += 1;
                }
            }
        }
        self.covered_count += flips;
        flips as f64 * frame.cell_area()
    }

    /// Stamps every segment of a waypoint path.
    pub fn stamp_path(&mut self, waypoints: &[Point2], r: f64) -> f64 {
        match waypoints {
            [] => 0.0,
            [p] => self.stamp(*p, r),
            _ => waypoints
                .windows(2)
                .map(|w| self.stamp_segment(w[0], w[1], r))
                .sum(),
        }
    }

    fn visit_disk(&mut self, c: Point2, r: f64) -> usize {
        let frame = self.frame;
        let mut flips = 0;
        let r2 = r * r;
        for iy in frame.rows(c.y - r, c.y + r) {
            for ix in frame.cols(c.x - r, c.x + r) {
                let d = frame.cell_center(ix, iy) - c;
                let i = frame.index(ix, iy);
                if d.dot(d) <= r2 && self.creditable(i) {
                    self.covered[i] = true;
                    flips += 1;
                }
            }
        }
        self.covered_count += flips;
        flips
    }

    fn for_disk(&self, c: Point2, r: f64, mut f: impl FnMut(&Self, usize)) {
        let frame = self.frame;
        let r2 = r * r;
        for iy in frame.rows(c.y - r, c.y + r) {
            for ix in frame.cols(c.x - r, c.x + r) {
                let d = frame.cell_center(ix, iy) - c;
                if d.dot(d) <= r2 {
                    f(self, frame.index(ix, iy));
                }
            }
        }
    }
}

/// x-interval where the horizontal line at `y` meets the capsule of radius
/// `r` around segment `ab`.
fn capsule_row(a: Point2, b: Point2, r: f64, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in [a, b] {
        let dy = y - c.y;
        if dy.abs() <= r {
            let h = libm::sqrt(r * r - dy * dy);
            lo = lo.min(c.x - h);
            hi = hi.max(c.x + h);
        }
    }
    let d = b - a;
    if d.norm() > 0.0 {
        let n = d.perp().normalized() * r;
        let rect = [a + n, b + n, b - n, a - n];
        for k in 0..4 {
            let p = rect[k];
            let q = rect[(k + 1) % 4];
            if (p.y - y) * (q.y - y) <= 0.0 {
                if p.y == q.y {
                    lo = lo.min(p.x.min(q.x));
                    hi = hi.max(p.x.max(q.x));
                } else {
                    let x = p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x);
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// `count` evenly spaced headings in `[0, 2π)`, starting at 0.
pub fn headings(count: usize) -> Vec<f64> {
    (0..count).map(|k| TAU * k as f64 / count as f64).collect()
}

pub fn default_headings() -> Vec<f64> {
    headings(DEFAULT_HEADING_COUNT)
}

/// Heading whose one-step stamp adds the most uncovered area.
///
/// Each candidate θ is scored by the area a stamp at
/// `pose + step·(cos θ, sin θ)` would add. Ties go to the smallest angle.
pub fn best_heading(
    grid: &CoverageGrid,
    pose: Point2,
    step: f64,
    r: f64,
    candidates: &[f64],
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &theta in candidates {
        let gain = grid.stamp_gain(pose + Point2::from_angle(theta) * step, r);
        best = match best {
            Some((bt, bg)) if gain < bg || (gain == bg && bt <= theta) => Some((bt, bg)),
            _ => Some((theta, gain)),
        };
    }
    best.ok_or(Error::Empty("no candidate headings"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CellState {
    #[default]
    Unknown,
    Free,
    Occupied,
}

/// Tri-state map built from range scans.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    frame: GridFrame,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(frame: GridFrame) -> Self {
        OccupancyGrid {
            frame,
            cells: vec![CellState::Unknown; frame.len()],
        }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn get(&self, ix: usize, iy: usize) -> CellState {
        self.cells[self.frame.index(ix, iy)]
    }

    /// Only sensor integration should call this outside of tests.
    pub fn set(&mut self, ix: usize, iy: usize, state: CellState) {
        let i = self.frame.index(ix, iy);
        self.cells[i] = state;
    }

    pub fn state_at(&self, p: Point2) -> Option<CellState> {
        self.frame.cell_of(p).map(|(ix, iy)| self.get(ix, iy))
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }
}
