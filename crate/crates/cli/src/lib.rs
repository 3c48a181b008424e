//! Command-line front end: experiment configuration, runs and run comparison.

pub mod commands;
pub mod compare;
pub mod config;
pub mod experiment;
pub mod svg;
