//! Experiment harness around the `uplin` library: JSON configs, a comparator
//! oracle for OPT, per-seed online/offline runs with CSV/JSON/SVG output,
//! and the acceptance suites.

pub mod acceptance;
pub mod comparator;
pub mod config;
pub mod experiment;
pub mod svg;
