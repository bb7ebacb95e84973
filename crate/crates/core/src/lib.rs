//! Self-supervised traversability from drive logs.
//!
//! Future wheel contacts are projected into each camera frame, occluded
//! samples are removed against the synchronized point cloud, and the
//! surviving quads become a mask of terrain the vehicle actually drove over.
//! A reconstruction model trained only on masked pixels then scores unseen
//! terrain by its reconstruction error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod io;
pub mod mask;
pub mod model;
pub mod occlusion;
pub mod risk;
pub mod trajectory;
pub mod synth;
pub mod pipeline;
