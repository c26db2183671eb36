//! Fast-weight storage, initialization, and the descent update.

use rand::Rng;

use super::projections::GcmProjections;
use super::GcmConfig;
use crate::error::{CoreError, Result};
use crate::numkit::Matrix;
use crate::rng;

/// One adaptive memory unit: the fast weights of a single head.
///
/// Shapes: w1, w3 are (hd*k) x hd, w2 is hd x (hd*k).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub w1: Matrix,
    pub w2: Matrix,
    pub w3: Matrix,
}

impl HeadWeights {
    pub fn zeros(hd: usize, k: usize) -> Self {
        HeadWeights {
            w1: Matrix::zeros(hd * k, hd),
            w2: Matrix::zeros(hd, hd * k),
            w3: Matrix::zeros(hd * k, hd),
        }
    }
}

/// Fast weights of one GCM module: one `HeadWeights` per head.
///
/// Also serves as the container for gradients, which share the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FastWeights {
    hd: usize,
    k: usize,
    heads: Vec<HeadWeights>,
}

impl FastWeights {
    pub fn zeros(nh: usize, hd: usize, k: usize) -> Self {
        FastWeights { hd, k, heads: (0..nh).map(|_| HeadWeights::zeros(hd, k)).collect() }
    }

    pub fn nh(&self) -> usize {
        self.heads.len()
    }

    pub fn hd(&self) -> usize {
        self.hd
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn head(&self, h: usize) -> &HeadWeights {
        &self.heads[h]
    }

    pub fn head_mut(&mut self, h: usize) -> &mut HeadWeights {
        &mut self.heads[h]
    }

    pub fn heads(&self) -> &[HeadWeights] {
        &self.heads
    }

    /// Total element count across all blocks (3 blocks per head).
    pub fn element_count(&self) -> usize {
        self.heads
            .iter()
            .map(|h| h.w1.data().len() + h.w2.data().len() + h.w3.data().len())
            .sum()
    }

    pub fn same_shape(&self, other: &FastWeights) -> bool {
        self.hd == other.hd && self.k == other.k && self.heads.len() == other.heads.len()
    }

    /// Fixed-order flattening (per head: w1, w2, w3) used by checksums and
    /// serialization.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.element_count());
        for h in &self.heads {
            out.extend_from_slice(h.w1.data());
            out.extend_from_slice(h.w2.data());
            out.extend_from_slice(h.w3.data());
        }
        out
    }

    /// Checksum over exact bit patterns; equal checksums are the replica
    /// consistency criterion of the synchronization protocol.
    pub fn checksum(&self) -> u64 {
        rng::checksum_f64(&self.flatten())
    }

    pub fn bit_eq(&self, other: &FastWeights) -> bool {
        self.same_shape(other)
            && self
                .heads
                .iter()
                .zip(&other.heads)
                .all(|(a, b)| a.w1.bit_eq(&b.w1) && a.w2.bit_eq(&b.w2) && a.w3.bit_eq(&b.w3))
    }

    /// Elementwise sum, fixed order; shapes must match.
    pub fn add(&self, other: &FastWeights) -> Result<FastWeights> {
        if !self.same_shape(other) {
            return Err(CoreError::shape("fast-weight shape mismatch in add".to_string()));
        }
        let heads = self
            .heads
            .iter()
            .zip(&other.heads)
            .map(|(a, b)| {
                Ok(HeadWeights {
                    w1: a.w1.add(&b.w1)?,
                    w2: a.w2.add(&b.w2)?,
                    w3: a.w3.add(&b.w3)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FastWeights { hd: self.hd, k: self.k, heads })
    }

    pub fn scale(&self, s: f64) -> FastWeights {
        FastWeights {
            hd: self.hd,
            k: self.k,
            heads: self
                .heads
                .iter()
                .map(|h| HeadWeights { w1: h.w1.scale(s), w2: h.w2.scale(s), w3: h.w3.scale(s) })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.heads
            .iter()
            .map(|h| h.w1.max_abs().max(h.w2.max_abs()).max(h.w3.max_abs()))
            .fold(0.0, f64::max)
    }
}

/// Descent update W - g. The token-wise learning rates are already folded
/// into the gradient.
pub fn apply_gradient(w: &FastWeights, g: &FastWeights) -> Result<FastWeights> {
    if !w.same_shape(g) {
        return Err(CoreError::shape("fast-weight shape mismatch in update".to_string()));
    }
    let heads = w
        .heads
        .iter()
        .zip(&g.heads)
        .map(|(a, b)| {
            Ok(HeadWeights { w1: a.w1.sub(&b.w1)?, w2: a.w2.sub(&b.w2)?, w3: a.w3.sub(&b.w3)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FastWeights { hd: w.hd, k: w.k, heads })
}

/// Seeded initialization of fast weights and projections.
///
/// w1 and w3 draw from a uniform with variance 1/hd; w2 starts at zero so
/// the memory contributes nothing until its first update. The gate vector
/// is filled with `gate_init`.
pub fn init_gcm(config: &GcmConfig) -> Result<(FastWeights, GcmProjections)> {
    config.validate()?;
    let hd = config.head_dim();
    let limit_hd = (3.0 / hd as f64).sqrt();
    let limit_d = (3.0 / config.d as f64).sqrt();

    let heads = (0..config.nh)
        .map(|h| {
            let mut r1 = rng::stream(config.seed, &format!("gcm.w1.h{h}"));
            let mut r3 = rng::stream(config.seed, &format!("gcm.w3.h{h}"));
            HeadWeights {
                w1: Matrix::random_uniform(hd * config.k, hd, limit_hd, &mut r1),
                w2: Matrix::zeros(hd, hd * config.k),
                w3: Matrix::random_uniform(hd * config.k, hd, limit_hd, &mut r3),
            }
        })
        .collect();
    let weights = FastWeights { hd, k: config.k, heads };

    let mat = |tag: &str| {
        let mut r = rng::stream(config.seed, tag);
        Matrix::random_uniform(config.d, config.d, limit_d, &mut r)
    };
    let mut lr_rng = rng::stream(config.seed, "gcm.lr_w");
    let proj = GcmProjections {
        wq: mat("gcm.wq"),
        wk: mat("gcm.wk"),
        wv: mat("gcm.wv"),
        wo: mat("gcm.wo"),
        lr_w: (0..config.d).map(|_| lr_rng.random_range(-limit_d..=limit_d)).collect(),
        lr_b: 0.0,
        alpha: vec![config.gate_init; config.d],
    };
    Ok((weights, proj))
}
