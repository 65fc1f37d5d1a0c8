//! Core data model for law-violation scenario generation: STL law monitoring,
//! sampled traces, scenario scripts and their token encoding, risk weighting,
//! scenario rewards and diversity analytics.

pub mod analytics;
pub mod reward;
pub mod road;
pub mod scenario;
pub mod stl;
pub mod trace;
pub mod weighting;
