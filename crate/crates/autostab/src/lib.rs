//! Scenario runner, file formats and command line for the `autostab-core`
//! numerics.
//!
//! A scenario is a JSON config naming one of the figure reproductions in
//! [`config::ScenarioKind`]. [`config::resolve`] fills every unset field
//! with the published defaults, [`runner::run`] evaluates the grid in
//! parallel, and [`output::write_outputs`] writes `result.csv`,
//! `summary.json` and plot-data files.

pub mod analytic;
pub mod config;
pub mod device;
pub mod output;
pub mod runner;

pub use autostab_core as core;
