//! Force-directed dimensionality reduction with a topology-faithfulness
//! evaluation stack.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: point clouds in, embeddings, persistence diagrams and
//! objective values out. File formats, the command line and thread pools
//! live in the `topoembed` crate.
//!
//! Pipeline overview:
//!
//! 1. [`model::normalize_input`] centres and rescales the input.
//! 2. [`knn::build_knn`] builds the exact k-nearest-neighbor graph.
//! 3. [`init`] produces a starting layout (PCA, spectral, diffusion, JL).
//! 4. [`layout::run_layout`] refines it with the attractive/repulsive kernel.
//!
//! [`pipeline::EmbedConfig`] wires the stages together, [`topology`] measures
//! what the result looks like and [`search`] tunes the knobs.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod init;
pub mod knn;
pub mod layout;
pub mod manifolds;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod search;
pub mod topology;

mod eigen;
mod math;

pub use error::{Error, Result};
pub use knn::NeighborGraph;
pub use layout::{KernelParams, LayoutConfig, UpdateMode};
pub use model::{Embedding, PointCloud, Points};
pub use pipeline::{EmbedConfig, InitKind};
pub use topology::{Bar, BettiCurve, PersistenceDiagram};
