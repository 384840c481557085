use thiserror::Error;

/// Failure modes shared by every planner stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    /// Interior start points are rejected: a boustrophedon started from the
    /// vertex nearest an interior point can overlap the already-swept area.
    #[error(
        "unsupported start point: interior start points are not handled; \
         pick a point on the boundary or outside the area"
    )]
    UnsupportedStart,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("occupancy grid has no free region around the robot")]
    NoFreeRegion,
    #[error("pose ({x}, {y}) is outside the free space")]
    PoseOutsideFreeSpace { x: f64, y: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
