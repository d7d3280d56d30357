//! Files, configuration and the command line around `semipit-core`.

pub mod app;
pub mod config;
pub mod io;
pub mod scenario;

pub use semipit_core as core;
