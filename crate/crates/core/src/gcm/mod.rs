//! Global Context Memory: a fast-weight network adapted at inference time.
//!
//! A GCM holds per-head fast weights W = (W1, W2, W3) updated by one
//! gradient step of the self-supervised dot-product loss per chunk
//! (`update`), then applied to the chunk's query tokens (`apply`):
//!
//! ```text
//! f_W(x)  = W2 ( SiLU(W1 x) o (W3 x) )          o = elementwise product
//! update: W <- W - grad_W sum_i eta_i * ( -f_W(k_i)^T v_i )
//! apply:  o_i = Wo concat_h f_W(q_i)
//! gate:   out = alpha o apply + x
//! ```
//!
//! All sums run token-ascending per head, so gradients are exactly linear
//! in the token-wise learning rates and per-chunk gradients compose
//! deterministically under the synchronization protocol.

mod forward;
mod projections;
mod snapshot;
mod weights;

pub use forward::{
    apply_and_gate, chunk_update, fast_forward, gated_residual, gcm_apply, gcm_step,
    inner_gradient, inner_loss, ChunkUpdate,
};
pub use projections::{predict_lr, project_qkv, GcmProjections, Headed, Qkv};
pub use snapshot::{restore_gcm, snapshot_gcm, Snapshot};
pub use weights::{apply_gradient, init_gcm, FastWeights, HeadWeights};

use crate::error::{CoreError, Result};
use crate::numkit::Matrix;

/// Dimensions and inner-loop hyperparameters of one GCM module.
#[derive(Debug, Clone, PartialEq)]
pub struct GcmConfig {
    /// Model (token) dimension.
    pub d: usize,
    /// Head count; each head owns one fast-weight network.
    pub nh: usize,
    /// Hidden expansion factor of the fast-weight network.
    pub k: usize,
    /// Scale of the predicted token-wise learning rates.
    pub base_lr: f64,
    /// Initial value of every gate channel.
    pub gate_init: f64,
    pub seed: u64,
}

impl GcmConfig {
    pub fn head_dim(&self) -> usize {
        self.d / self.nh
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.nh == 0 || self.d % self.nh != 0 {
            return Err(CoreError::config(format!(
                "dimension {} must be a positive multiple of head count {}",
                self.d, self.nh
            )));
        }
        if self.k < 1 {
            return Err(CoreError::config("expansion factor must be >= 1".to_string()));
        }
        if !(self.base_lr > 0.0) {
            return Err(CoreError::config("base learning rate must be positive".to_string()));
        }
        Ok(())
    }
}

/// Fast-weight element count per weight block: nh * hd^2 * k.
pub fn state_size(config: &GcmConfig) -> usize {
    let hd = config.head_dim();
    config.nh * hd * hd * config.k
}

/// One chunk's input tokens, M x d.
#[derive(Debug, Clone)]
pub struct TokenBlock {
    tokens: Matrix,
}

impl TokenBlock {
    pub fn new(tokens: Matrix) -> Result<Self> {
        if tokens.rows() == 0 {
            return Err(CoreError::input("token block must hold at least one token".to_string()));
        }
        Ok(TokenBlock { tokens })
    }

    pub fn m(&self) -> usize {
        self.tokens.rows()
    }

    pub fn d(&self) -> usize {
        self.tokens.cols()
    }

    pub fn tokens(&self) -> &Matrix {
        &self.tokens
    }
}

/// Replicated per-layer state: static projections plus adapted fast weights.
#[derive(Debug, Clone)]
pub struct GcmLayerState {
    pub config: GcmConfig,
    pub weights: FastWeights,
    pub proj: GcmProjections,
}

impl GcmLayerState {
    pub fn init(config: GcmConfig) -> Result<Self> {
        let (weights, proj) = init_gcm(&config)?;
        Ok(GcmLayerState { config, weights, proj })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, nh: usize, k: usize) -> GcmConfig {
        GcmConfig { d, nh, k, base_lr: 1e-2, gate_init: 0.1, seed: 3 }
    }

    #[test]
    fn state_size_formula() {
        assert_eq!(state_size(&cfg(64, 1, 4)), 16384);
        assert_eq!(state_size(&cfg(1, 1, 1)), 1);
        assert_eq!(state_size(&cfg(64, 4, 2)), 2048);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(64, 1, 4).validate().is_ok());
        assert!(cfg(63, 2, 4).validate().is_err());
        assert!(GcmConfig { base_lr: 0.0, ..cfg(8, 1, 1) }.validate().is_err());
        assert!(GcmConfig { k: 0, ..cfg(8, 1, 1) }.validate().is_err());
    }

    #[test]
    fn empty_token_block_rejected() {
        assert!(TokenBlock::new(Matrix::zeros(0, 4)).is_err());
    }
}
