//! Goodness-of-fit tests for graphical missing-data models.

pub mod estimate;
pub mod gof;
pub mod io;
pub mod mdag;
pub mod numerics;
pub mod simulate;
