//! File formats, figures, study drivers and the command line for
//! [`topoembed_core`].

#![forbid(unsafe_code)]

pub mod cli;
pub mod diagram;
pub mod error;
pub mod io;
pub mod manifest;
pub mod study;
pub mod svg;
pub mod sweep;

pub use error::{Result, TopoError};
