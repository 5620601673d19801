#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod scalar;
pub mod geometry;
pub mod packing;
pub mod bottomleft;
pub mod slot;
pub mod report;
pub mod io;
pub mod svg;
pub mod adversary;
pub mod analysis;
