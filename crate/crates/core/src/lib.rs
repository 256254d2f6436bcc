//! Non-neural core of a pixel-based arbitrary-shape text detector.
//!
//! The crate covers everything around the network: turning polygon
//! annotations into per-level classification and coordinate targets,
//! the three training losses with analytic gradients, a small gradient
//! descent harness that fits polygons directly, inference-side decoding
//! with polygon NMS, and the precision/recall evaluation protocol.
//!
//! Batch workloads (ablation trials, pairwise IoU, per-image encoding and
//! evaluation) accept an [`Exec`] mode. With the default `parallel`
//! feature they fan out over rayon; without it every mode runs
//! sequentially.

// Negated comparisons are used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod detect;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod gradcheck;
pub mod io;
pub mod labelgen;
pub mod losses;
pub mod par;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Frame, Mask, Point, Polygon};
pub use par::Exec;
