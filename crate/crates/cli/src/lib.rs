//! Configuration ingestion, experiment orchestration, result persistence and
//! plot-data emission for the polytail toolkit.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod report;
