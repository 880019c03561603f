//! File formats, configuration and the `dcnet` command line on top of
//! [`dcnet_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
