//! File formats, configuration and the command-line driver for
//! [`nhqb_core`].

pub mod cli;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod presets;
pub mod report;
