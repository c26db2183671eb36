//! Fast-weight forward pass, inner-loop loss/gradient, and the chunk step.

use super::projections::{GcmProjections, Headed, Qkv};
use super::weights::{apply_gradient, FastWeights, HeadWeights};
use super::{GcmLayerState, TokenBlock};
use crate::error::{CoreError, Result};
use crate::numkit::{sigmoid, Matrix};

/// f_W(x) = W2 ( SiLU(W1 x) o (W3 x) ) for one head.
pub fn fast_forward(w: &HeadWeights, x: &[f64]) -> Result<Vec<f64>> {
    let a = w.w1.matvec(x)?;
    let b = w.w3.matvec(x)?;
    let p: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(&ai, &bi)| ai * sigmoid(ai) * bi)
        .collect();
    w.w2.matvec(&p)
}

fn check_kv(w: &FastWeights, k: &Headed, v: &Headed, eta: &[f64]) -> Result<()> {
    if k.nh() != w.nh() || k.hd() != w.hd() || v.nh() != w.nh() || v.hd() != w.hd() {
        return Err(CoreError::shape("key/value head shape mismatch".to_string()));
    }
    if k.m() != v.m() || k.m() != eta.len() {
        return Err(CoreError::shape(format!(
            "token counts disagree: k {}, v {}, eta {}",
            k.m(),
            v.m(),
            eta.len()
        )));
    }
    Ok(())
}

/// Self-supervised dot-product loss, learning-rate weighted:
/// sum over heads and tokens of -eta_i * f_W(k_i)^T v_i.
pub fn inner_loss(w: &FastWeights, k: &Headed, v: &Headed, eta: &[f64]) -> Result<f64> {
    check_kv(w, k, v, eta)?;
    let mut loss = 0.0;
    for h in 0..w.nh() {
        let head = w.head(h);
        for i in 0..k.m() {
            let f = fast_forward(head, k.token_head(i, h))?;
            let mut dot = 0.0;
            for (a, b) in f.iter().zip(v.token_head(i, h)) {
                dot += a * b;
            }
            loss += -eta[i] * dot;
        }
    }
    Ok(loss)
}

/// Analytic gradient of `inner_loss` with respect to W1, W2, W3,
/// accumulated token-ascending per head.
///
/// With a = W1 k, b = W3 k, s = SiLU(a), p = s o b, y = W2 p and the
/// per-token loss -eta * y^T v:
///
/// ```text
/// dL/dW2 = -eta * v p^T
/// dL/dp  = -eta * W2^T v
/// dL/dW3 = (dL/dp o s) k^T
/// dL/dW1 = (dL/dp o b o SiLU'(a)) k^T
/// ```
pub fn inner_gradient(w: &FastWeights, k: &Headed, v: &Headed, eta: &[f64]) -> Result<FastWeights> {
    check_kv(w, k, v, eta)?;
    let (hd, kk) = (w.hd(), w.k());
    let hidden = hd * kk;
    let mut grad = FastWeights::zeros(w.nh(), hd, kk);

    for h in 0..w.nh() {
        let head = w.head(h);
        for i in 0..k.m() {
            let ki = k.token_head(i, h);
            let vi = v.token_head(i, h);
            let a = head.w1.matvec(ki)?;
            let b = head.w3.matvec(ki)?;
            let mut s = vec![0.0; hidden];
            let mut sp = vec![0.0; hidden];
            for j in 0..hidden {
                let sig = sigmoid(a[j]);
                s[j] = a[j] * sig;
                sp[j] = sig * (1.0 + a[j] * (1.0 - sig));
            }
            let p: Vec<f64> = s.iter().zip(&b).map(|(&si, &bi)| si * bi).collect();

            // dy = -eta_i * v_i
            let dy: Vec<f64> = vi.iter().map(|&x| -eta[i] * x).collect();

            let g = grad.head_mut(h);
            // dW2 += dy p^T
            for r in 0..hd {
                let row = g.w2.row_mut(r);
                for c in 0..hidden {
                    row[c] += dy[r] * p[c];
                }
            }
            // dp = W2^T dy
            let mut dp = vec![0.0; hidden];
            for r in 0..hd {
                let w2row = head.w2.row(r);
                for c in 0..hidden {
                    dp[c] += w2row[c] * dy[r];
                }
            }
            // dW3 += (dp o s) k^T ; dW1 += (dp o b o s') k^T
            for r in 0..hidden {
                let db = dp[r] * s[r];
                let da = dp[r] * b[r] * sp[r];
                let w3row = g.w3.row_mut(r);
                for c in 0..hd {
                    w3row[c] += db * ki[c];
                }
                let w1row = g.w1.row_mut(r);
                for c in 0..hd {
                    w1row[c] += da * ki[c];
                }
            }
        }
    }
    Ok(grad)
}

/// Apply the adapted memory to the query block and project the
/// concatenated head outputs: row i of the result is Wo * concat_h f_W(q_i).
pub fn gcm_apply(w: &FastWeights, q: &Headed, wo: &Matrix) -> Result<Matrix> {
    if q.nh() != w.nh() || q.hd() != w.hd() {
        return Err(CoreError::shape("query head shape mismatch".to_string()));
    }
    let d = w.nh() * w.hd();
    if wo.cols() != d {
        return Err(CoreError::shape(format!(
            "output projection expects {} columns, got {}",
            d,
            wo.cols()
        )));
    }
    let mut concat = Matrix::zeros(q.m(), d);
    for i in 0..q.m() {
        for h in 0..w.nh() {
            let f = fast_forward(w.head(h), q.token_head(i, h))?;
            concat.row_mut(i)[h * w.hd()..(h + 1) * w.hd()].copy_from_slice(&f);
        }
    }
    concat.matmul(&wo.transpose())
}

/// Gated residual: out = alpha o gcm_out + x, per channel.
pub fn gated_residual(gcm_out: &Matrix, x: &Matrix, alpha: &[f64]) -> Result<Matrix> {
    if gcm_out.rows() != x.rows() || gcm_out.cols() != x.cols() || alpha.len() != x.cols() {
        return Err(CoreError::shape(format!(
            "gated residual shapes: gcm {}x{}, x {}x{}, alpha {}",
            gcm_out.rows(),
            gcm_out.cols(),
            x.rows(),
            x.cols(),
            alpha.len()
        )));
    }
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let g = gcm_out.row(i);
        let xi = x.row(i);
        let o = out.row_mut(i);
        for c in 0..xi.len() {
            o[c] = alpha[c] * g[c] + xi[c];
        }
    }
    Ok(out)
}

/// Everything a chunk contributes before the synchronization barrier.
#[derive(Debug, Clone)]
pub struct ChunkUpdate {
    pub qkv: Qkv,
    pub eta: Vec<f64>,
    pub gradient: FastWeights,
}

/// Project, predict learning rates, and compute this chunk's local
/// fast-weight gradient. Pure with respect to the layer state.
pub fn chunk_update(state: &GcmLayerState, x: &TokenBlock) -> Result<ChunkUpdate> {
    let qkv = super::projections::project_qkv(&state.proj, x, state.config.nh)?;
    let eta = super::projections::predict_lr(&state.proj, x, state.config.base_lr)?;
    let gradient = inner_gradient(&state.weights, &qkv.k, &qkv.v, &eta)?;
    Ok(ChunkUpdate { qkv, eta, gradient })
}

/// Post-update half of the step: apply the adapted weights to the queries
/// and gate against the input tokens.
pub fn apply_and_gate(
    weights: &FastWeights,
    proj: &GcmProjections,
    q: &Headed,
    x: &TokenBlock,
) -> Result<Matrix> {
    let raw = gcm_apply(weights, q, &proj.wo)?;
    gated_residual(&raw, x.tokens(), &proj.alpha)
}

/// One full single-chunk memory step: update with (K, V, eta), then apply
/// the updated weights to Q and gate. Returns the new weights and the
/// gated output tokens.
pub fn gcm_step(state: &GcmLayerState, x: &TokenBlock) -> Result<(FastWeights, Matrix)> {
    let update = chunk_update(state, x)?;
    let new_weights = apply_gradient(&state.weights, &update.gradient)?;
    let out = apply_and_gate(&new_weights, &state.proj, &update.qkv.q, x)?;
    Ok((new_weights, out))
}
