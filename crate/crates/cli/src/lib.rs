//! Command-line driver: configuration, solver dispatch, manifests and campaigns.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod runner;
