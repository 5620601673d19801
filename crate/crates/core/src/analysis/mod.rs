//! Analyses of finished packings.

pub mod holes;
pub mod slots;
