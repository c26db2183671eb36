//! Desk-scale engine for long-sequence 3D reconstruction.
//!
//! An input frame sequence is split into overlapping chunks. Each chunk is
//! processed by a small alternating-attention backbone whose designated
//! layers host a Global Context Memory (GCM): a fast-weight network adapted
//! at inference time by a self-supervised dot-product loss. Simulated
//! workers process chunks in lockstep and synchronize fast-weight gradients
//! at every GCM layer (sum in a fixed order, broadcast), so results are
//! bit-identical for any worker count. Chunk outputs are stitched with
//! Sim(3) alignment over overlap frames, loop-closure candidates from a
//! retrieval descriptor, robust pose-graph refinement, and point-cloud
//! fusion. The `eval` module provides ATE/RRE/RTE and Chamfer/F1 metrics,
//! and `scenegen` supplies synthetic ground-truth scenes plus all file I/O.
//!
//! With the default `parallel` feature, data-parallel inner loops (chunk
//! forwards, rendering, nearest-neighbour queries) run on rayon. Disabling
//! the feature falls back to sequential execution with identical results.

pub mod backbone;
pub mod driver;
pub mod error;
pub mod eval;
pub mod gcm;
pub mod gcs;
pub mod geometry;
pub mod numkit;
pub mod par;
pub mod rng;
pub mod scenegen;

pub use error::{CoreError, Result};
