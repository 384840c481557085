//! File formats, SVG/PGM/CSV writers and the `coverplan` command line on top
//! of `coverplan-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod pgm;
pub mod svg;

pub use commands::RunConfig;
pub use error::CliError;
