#![no_std]
extern crate alloc;

pub mod corpus;
pub mod covergrid;
pub mod decompose;
pub mod error;
pub mod geometry;
pub mod replan;
pub mod sim;
pub mod stitch;
pub mod sweep;

pub use error::{Error, Result};
