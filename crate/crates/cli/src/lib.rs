//! Command-line front end for `phasecoder`.

pub mod app;
pub mod bench;
pub mod config;
pub mod format;
pub mod snapshot;
pub mod verify;
