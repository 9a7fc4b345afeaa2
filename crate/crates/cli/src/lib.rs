//! Command-line front end: scenario runs, CSV logs, metrics, run comparison
//! and SVG plots.

pub mod commands;
pub mod csvlog;
pub mod plot;
pub mod sidecar;
pub mod svg;
