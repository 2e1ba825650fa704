//! Experiment harness for the `trapnoise` command-line tool: declarative
//! experiment specs, figure presets, runners and artifact writers.

pub mod artifacts;
pub mod commands;
pub mod experiment;
pub mod runner;
