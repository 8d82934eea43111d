//! File formats, bundled scenarios and the command-line runner built on
//! [`swarmhaptic_core`].

pub mod config;
pub mod error;
pub mod logcsv;
pub mod runner;
pub mod scenarios;
pub mod trajectory;

pub use error::{IoError, Result};
pub use swarmhaptic_core as core;
