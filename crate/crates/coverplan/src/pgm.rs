//! Binary PGM (P5) dump of an occupancy grid.

use coverplan_core::covergrid::{CellState, OccupancyGrid};

pub const FREE: u8 = 255;
pub const OCCUPIED: u8 = 0;
pub const UNKNOWN: u8 = 128;

/// Top row of the image is the grid's highest row.
pub fn occupancy_pgm(occ: &OccupancyGrid) -> Vec<u8> {
    let f = occ.frame();
    let mut out = format!("P5\n{} {}\n255\n", f.width, f.height).into_bytes();
    out.reserve(f.len());
    for iy in (0..f.height).rev() {
        for ix in 0..f.width {
            out.push(match occ.get(ix, iy) {
                CellState::Free => FREE,
                CellState::Occupied => OCCUPIED,
                CellState::Unknown => UNKNOWN,
            });
        }
    }
    out
}
