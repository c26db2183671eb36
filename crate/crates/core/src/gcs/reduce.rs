//! Gradient messages, the all-reduce sum, and the synchronized update.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::gcm::{apply_gradient, chunk_update, FastWeights, GcmLayerState, TokenBlock};

/// One worker's fast-weight gradient contribution at a barrier.
#[derive(Debug, Clone)]
pub struct ReduceMessage {
    pub layer_id: usize,
    pub worker_id: usize,
    /// Chunks covered by the payload; the pipeline sends one per chunk.
    pub chunk_ids: Vec<usize>,
    pub payload: FastWeights,
}

impl ReduceMessage {
    pub fn checksum(&self) -> u64 {
        self.payload.checksum()
    }

    /// Stable one-line trace form.
    pub fn trace_line(&self) -> String {
        let chunks = self
            .chunk_ids
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "layer={} worker={} chunks={} checksum={:016x}",
            self.layer_id,
            self.worker_id,
            chunks,
            self.checksum()
        )
    }
}

/// Compute one chunk's local gradient and wrap it with routing ids.
pub fn local_gradients(
    worker_id: usize,
    layer_id: usize,
    chunk_id: usize,
    state: &GcmLayerState,
    tokens: &TokenBlock,
) -> Result<ReduceMessage> {
    let update = chunk_update(state, tokens)?;
    Ok(ReduceMessage {
        layer_id,
        worker_id,
        chunk_ids: vec![chunk_id],
        payload: update.gradient,
    })
}

/// Sum the gradient payloads for one layer.
///
/// Every chunk in `expected_chunks` must be covered exactly once and all
/// payload shapes must agree. The sum runs in ascending chunk-id order (a
/// fixed order that, with blocked assignment, equals ascending worker id),
/// making the result independent of worker count and assignment; the
/// summed gradient is then broadcast, i.e. returned for every replica.
pub fn all_reduce(messages: &[ReduceMessage], expected_chunks: &[usize]) -> Result<FastWeights> {
    if messages.is_empty() {
        return Err(CoreError::protocol("no gradient messages at barrier".to_string()));
    }
    let layer = messages[0].layer_id;
    let mut by_chunk: BTreeMap<usize, &ReduceMessage> = BTreeMap::new();
    for msg in messages {
        if msg.layer_id != layer {
            return Err(CoreError::protocol(format!(
                "mixed layers at barrier: {} vs {layer}",
                msg.layer_id
            )));
        }
        if !msg.payload.same_shape(&messages[0].payload) {
            return Err(CoreError::protocol(format!(
                "gradient shape mismatch from worker {}",
                msg.worker_id
            )));
        }
        for &c in &msg.chunk_ids {
            if by_chunk.insert(c, msg).is_some() {
                return Err(CoreError::protocol(format!("chunk {c} contributed twice")));
            }
        }
    }
    for &c in expected_chunks {
        if !by_chunk.contains_key(&c) {
            return Err(CoreError::protocol(format!(
                "missing gradient for chunk {c} at layer {layer}"
            )));
        }
    }
    if by_chunk.len() != expected_chunks.len() {
        return Err(CoreError::protocol("unexpected chunk contribution at barrier".to_string()));
    }

    // Ascending chunk order; a message covering several chunks is ordered
    // by its first chunk and summed once.
    let mut sum: Option<FastWeights> = None;
    let mut seen: Vec<*const ReduceMessage> = Vec::new();
    for (_, msg) in by_chunk.iter() {
        let ptr = *msg as *const ReduceMessage;
        if seen.contains(&ptr) {
            continue;
        }
        seen.push(ptr);
        sum = Some(match sum {
            None => msg.payload.clone(),
            Some(acc) => acc.add(&msg.payload)?,
        });
    }
    Ok(sum.expect("nonempty"))
}

/// All-reduce the messages and apply the summed gradient to every replica.
///
/// Replicas must be bit-identical before the step (checksum check) and are
/// bit-identical after it. Returns the summed gradient.
pub fn synchronized_step(
    replicas: &mut [&mut FastWeights],
    messages: &[ReduceMessage],
    expected_chunks: &[usize],
) -> Result<FastWeights> {
    if replicas.is_empty() {
        return Err(CoreError::protocol("no replicas to update".to_string()));
    }
    let reference = replicas[0].checksum();
    for (i, r) in replicas.iter().enumerate() {
        if r.checksum() != reference {
            return Err(CoreError::protocol(format!(
                "replica {i} diverged before the synchronized step"
            )));
        }
    }
    let summed = all_reduce(messages, expected_chunks)?;
    for r in replicas.iter_mut() {
        **r = apply_gradient(r, &summed)?;
    }
    let post = replicas[0].checksum();
    debug_assert!(replicas.iter().all(|r| r.checksum() == post));
    Ok(summed)
}
