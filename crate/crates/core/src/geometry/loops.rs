//! Retrieval-based loop-candidate discovery over chunk descriptors.

use crate::error::{CoreError, Result};

/// A candidate loop closure between two chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopCandidate {
    /// Chunk indices, i < j (0-based).
    pub i: usize,
    pub j: usize,
    /// Cosine similarity of the chunk descriptors, in [-1, 1].
    pub score: f64,
    /// Temporal gap between chunk centers, frames.
    pub gap: usize,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// All chunk pairs with temporal gap >= `min_gap` frames and descriptor
/// cosine similarity >= `score_threshold`, ordered by descending score
/// (ties by (i, j)).
///
/// `chunk_centers[c]` is the center frame id of chunk c; descriptors must
/// all have equal length.
pub fn detect_loops(
    descriptors: &[Vec<f64>],
    chunk_centers: &[usize],
    min_gap: usize,
    score_threshold: f64,
) -> Result<Vec<LoopCandidate>> {
    if descriptors.len() != chunk_centers.len() {
        return Err(CoreError::shape(format!(
            "{} descriptors vs {} chunk centers",
            descriptors.len(),
            chunk_centers.len()
        )));
    }
    let dim = descriptors.first().map_or(0, |d| d.len());
    if descriptors.iter().any(|d| d.len() != dim) {
        return Err(CoreError::shape("descriptors must share one length".to_string()));
    }
    let mut out = Vec::new();
    for i in 0..descriptors.len() {
        for j in i + 1..descriptors.len() {
            let gap = chunk_centers[j].abs_diff(chunk_centers[i]);
            if gap < min_gap {
                continue;
            }
            let score = cosine(&descriptors[i], &descriptors[j]);
            if score >= score_threshold {
                out.push(LoopCandidate { i, j, score, gap });
            }
        }
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    Ok(out)
}
