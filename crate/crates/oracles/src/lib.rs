//! Slow, direct reference implementations. Each one follows the textbook
//! definition without sharing code paths with the optimized versions in the
//! other crates, so agreement between the two is meaningful.

pub mod dtw;
pub mod random;
pub mod reward;
pub mod stats;
pub mod stl;
pub mod transformer;
