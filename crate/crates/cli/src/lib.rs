//! Configuration, pipeline stages and convergence studies behind the `oseenlab` binary.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod study;
