//! Experiment orchestration: configuration, sweeps, fits, residual checks and reports.

pub mod config;
pub mod fit;
pub mod profile;
pub mod report;
pub mod sweep;
pub mod weak;
