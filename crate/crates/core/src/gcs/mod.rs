//! Chunk partitioning and Global Context Synchronization over simulated
//! workers.
//!
//! All chunks advance through the backbone in lockstep. At every
//! GCM-hosting layer each chunk contributes one fast-weight gradient; the
//! barrier sums contributions in ascending chunk order and every worker
//! replica applies the same summed gradient, so replicas stay bit-identical
//! and results do not depend on worker count, chunk assignment, or
//! physical scheduling.

mod partition;
mod pipeline;
mod reduce;
mod worker;

pub use partition::{partition, Partition};
pub use pipeline::{
    run_pipeline, sequential_mode, LayerUpdateRecord, PipelineInput, PipelineOutput,
    ProtocolTrace,
};
pub use reduce::{all_reduce, local_gradients, synchronized_step, ReduceMessage};
pub use worker::WorkerGroup;
