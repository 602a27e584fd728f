//! Standard-library companion of `simkern-core`.
//!
//! Holds what the numerical core cannot: file formats, the experiment
//! configuration, parallel drivers built on rayon, the end-to-end pipeline
//! and report emission. The `simkern` binary is a thin clap front end over
//! these modules.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod par;
pub mod pipeline;
pub mod report;

pub use error::{Error, ErrorKind, Result};
