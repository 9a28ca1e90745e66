//! Command-line front end for `multiprobe-core`: bound sweeps, fidelity
//! censuses and the validation suites, with CSV or JSON-lines output.
//!
//! Parameter grids are evaluated on a rayon pool; rows always come out in
//! grid order, so identical configurations give byte-identical files.

pub mod census;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod sweep;
pub mod validate;

pub use error::{CliError, Result};
