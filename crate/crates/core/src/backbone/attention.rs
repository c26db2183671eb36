//! Softmax self-attention, frame-wise and global.

use crate::error::{CoreError, Result};
use crate::numkit::Matrix;
use crate::par;

#[derive(Debug, Clone)]
pub struct AttentionWeights {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
}

/// Row-wise stable softmax in place.
pub fn softmax_rows(scores: &mut Matrix) {
    for i in 0..scores.rows() {
        let row = scores.row_mut(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Multi-head softmax attention over the rows of x (M x d), no positional
/// terms: out = concat_h softmax(Q_h K_h^T / sqrt(hd)) V_h, then Wo.
pub fn attention(w: &AttentionWeights, x: &Matrix, heads: usize) -> Result<Matrix> {
    let d = x.cols();
    if w.wq.rows() != d || d % heads != 0 {
        return Err(CoreError::shape(format!(
            "attention dims: tokens {}, weights {}, heads {}",
            d,
            w.wq.rows(),
            heads
        )));
    }
    let hd = d / heads;
    let m = x.rows();
    let q = x.matmul(&w.wq.transpose())?;
    let k = x.matmul(&w.wk.transpose())?;
    let v = x.matmul(&w.wv.transpose())?;
    let scale = 1.0 / (hd as f64).sqrt();

    let mut concat = Matrix::zeros(m, d);
    for h in 0..heads {
        let col0 = h * hd;
        let mut scores = Matrix::zeros(m, m);
        for i in 0..m {
            let qi = &q.row(i)[col0..col0 + hd];
            for j in 0..m {
                let kj = &k.row(j)[col0..col0 + hd];
                let mut dot = 0.0;
                for t in 0..hd {
                    dot += qi[t] * kj[t];
                }
                scores.set(i, j, dot * scale);
            }
        }
        softmax_rows(&mut scores);
        for i in 0..m {
            let out_row = concat.row_mut(i);
            for j in 0..m {
                let wij = scores.get(i, j);
                let vj = &v.row(j)[col0..col0 + hd];
                for t in 0..hd {
                    out_row[col0 + t] += wij * vj[t];
                }
            }
        }
    }
    concat.matmul(&w.wo.transpose())
}

/// Attention within each frame's token slice independently.
pub fn frame_attention(
    w: &AttentionWeights,
    x: &Matrix,
    heads: usize,
    tokens_per_frame: usize,
) -> Result<Matrix> {
    if tokens_per_frame == 0 || x.rows() % tokens_per_frame != 0 {
        return Err(CoreError::shape(format!(
            "{} tokens not divisible into frames of {}",
            x.rows(),
            tokens_per_frame
        )));
    }
    let frames = x.rows() / tokens_per_frame;
    let per_frame: Vec<Result<Matrix>> = par::map_indices(frames, |f| {
        let mut slice = Matrix::zeros(tokens_per_frame, x.cols());
        for t in 0..tokens_per_frame {
            slice.row_mut(t).copy_from_slice(x.row(f * tokens_per_frame + t));
        }
        attention(w, &slice, heads)
    });
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for (f, res) in per_frame.into_iter().enumerate() {
        let block = res?;
        for t in 0..tokens_per_frame {
            out.row_mut(f * tokens_per_frame + t).copy_from_slice(block.row(t));
        }
    }
    Ok(out)
}

/// Attention across every token of the chunk.
pub fn global_attention(w: &AttentionWeights, x: &Matrix, heads: usize) -> Result<Matrix> {
    attention(w, x, heads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_weights(d: usize, seed: u64) -> AttentionWeights {
        let limit = (3.0 / d as f64).sqrt();
        let mut r = rng::stream(seed, "attn.w");
        AttentionWeights {
            wq: Matrix::random_uniform(d, d, limit, &mut r),
            wk: Matrix::random_uniform(d, d, limit, &mut r),
            wv: Matrix::random_uniform(d, d, limit, &mut r),
            wo: Matrix::random_uniform(d, d, limit, &mut r),
        }
    }

    #[test]
    fn single_token_attends_to_itself() {
        let d = 6;
        let w = random_weights(d, 1);
        let mut r = rng::stream(2, "attn.x");
        let x = Matrix::random_uniform(1, d, 1.0, &mut r);
        let out = attention(&w, &x, 2).unwrap();
        // One logit -> softmax weight 1 -> output is Wo(Wv x).
        let v = x.matmul(&w.wv.transpose()).unwrap();
        let expect = v.matmul(&w.wo.transpose()).unwrap();
        assert!(out.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut r = rng::stream(3, "attn.scores");
        let mut scores = Matrix::random_uniform(16, 16, 4.0, &mut r);
        softmax_rows(&mut scores);
        for i in 0..16 {
            let sum: f64 = scores.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn global_attention_is_frame_permutation_equivariant() {
        let d = 8;
        let per_frame = 3;
        let frames = 4;
        let w = random_weights(d, 4);
        let mut r = rng::stream(5, "attn.perm");
        let x = Matrix::random_uniform(frames * per_frame, d, 1.0, &mut r);
        let out = global_attention(&w, &x, 2).unwrap();

        // Swap frames 1 and 3 (no positional terms across frames).
        let perm = [2usize, 1, 0, 3];
        let mut xp = Matrix::zeros(frames * per_frame, d);
        for f in 0..frames {
            for t in 0..per_frame {
                xp.row_mut(f * per_frame + t)
                    .copy_from_slice(x.row(perm[f] * per_frame + t));
            }
        }
        let out_p = global_attention(&w, &xp, 2).unwrap();
        for f in 0..frames {
            for t in 0..per_frame {
                let a = out_p.row(f * per_frame + t);
                let b = out.row(perm[f] * per_frame + t);
                for (x1, x2) in a.iter().zip(b) {
                    assert!((x1 - x2).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frame_attention_does_not_mix_frames() {
        let d = 6;
        let per_frame = 2;
        let w = random_weights(d, 6);
        let mut r = rng::stream(7, "attn.frames");
        let x = Matrix::random_uniform(4, d, 1.0, &mut r);
        let full = frame_attention(&w, &x, 2, per_frame).unwrap();
        // Changing frame 1 must not change frame 0's output.
        let mut x2 = x.clone();
        for t in per_frame..2 * per_frame {
            for c in 0..d {
                x2.set(t, c, x2.get(t, c) + 1.0);
            }
        }
        let full2 = frame_attention(&w, &x2, 2, per_frame).unwrap();
        for t in 0..per_frame {
            assert_eq!(full.row(t), full2.row(t));
        }
    }
}
