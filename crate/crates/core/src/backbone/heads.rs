//! Linear output heads with nearest-neighbour upsampling.

use super::prediction::{ChunkPrediction, FramePrediction, Grid, PointGrid, CAMERA_DIM};
use super::Backbone;
use crate::error::{CoreError, Result};
use crate::numkit::{softplus, Matrix};

fn pooled(frame_tokens: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; frame_tokens.cols()];
    for i in 0..frame_tokens.rows() {
        for (m, v) in mean.iter_mut().zip(frame_tokens.row(i)) {
            *m += v;
        }
    }
    let n = frame_tokens.rows() as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    mean
}

/// Mean-pooled tokens -> linear -> [unit quaternion, translation,
/// softplus fov].
pub fn camera_head(bb: &Backbone, frame_tokens: &Matrix) -> Result<[f64; CAMERA_DIM]> {
    let mut raw = bb.camera_w.matvec(&pooled(frame_tokens))?;
    for (r, b) in raw.iter_mut().zip(&bb.camera_b) {
        *r += b;
    }
    let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt();
    if norm > 1e-12 {
        for v in raw.iter_mut().take(4) {
            *v /= norm;
        }
    } else {
        raw[0] = 1.0;
        raw[1] = 0.0;
        raw[2] = 0.0;
        raw[3] = 0.0;
    }
    raw[7] = softplus(raw[7]);
    raw[8] = softplus(raw[8]);
    let mut out = [0.0; CAMERA_DIM];
    out.copy_from_slice(&raw);
    Ok(out)
}

fn upsample_scalar(per_patch: &[f64], gy: usize, gx: usize, patch: usize) -> Grid {
    let mut grid = Grid::zeros(gy * patch, gx * patch);
    for py in 0..gy {
        for px in 0..gx {
            let v = per_patch[py * gx + px];
            for dy in 0..patch {
                for dx in 0..patch {
                    grid.set(py * patch + dy, px * patch + dx, v);
                }
            }
        }
    }
    grid
}

/// Per-patch linear -> (softplus depth, softplus confidence), upsampled.
pub fn depth_head(bb: &Backbone, frame_tokens: &Matrix) -> Result<(Grid, Grid)> {
    let c = &bb.config;
    let (gy, gx) = (c.image_h / c.patch, c.image_w / c.patch);
    if frame_tokens.rows() != gy * gx {
        return Err(CoreError::shape(format!(
            "{} tokens for a {}x{} patch grid",
            frame_tokens.rows(),
            gy,
            gx
        )));
    }
    let mut depth = Vec::with_capacity(gy * gx);
    let mut conf = Vec::with_capacity(gy * gx);
    for t in 0..frame_tokens.rows() {
        let mut raw = bb.depth_w.matvec(frame_tokens.row(t))?;
        for (r, b) in raw.iter_mut().zip(&bb.depth_b) {
            *r += b;
        }
        depth.push(softplus(raw[0]));
        conf.push(softplus(raw[1]));
    }
    Ok((
        upsample_scalar(&depth, gy, gx, c.patch),
        upsample_scalar(&conf, gy, gx, c.patch),
    ))
}

/// Per-patch linear -> (xyz, softplus confidence), upsampled.
pub fn point_head(bb: &Backbone, frame_tokens: &Matrix) -> Result<(PointGrid, Grid)> {
    let c = &bb.config;
    let (gy, gx) = (c.image_h / c.patch, c.image_w / c.patch);
    if frame_tokens.rows() != gy * gx {
        return Err(CoreError::shape(format!(
            "{} tokens for a {}x{} patch grid",
            frame_tokens.rows(),
            gy,
            gx
        )));
    }
    let mut points = PointGrid::zeros(c.image_h, c.image_w);
    let mut conf = Vec::with_capacity(gy * gx);
    for t in 0..frame_tokens.rows() {
        let mut raw = bb.point_w.matvec(frame_tokens.row(t))?;
        for (r, b) in raw.iter_mut().zip(&bb.point_b) {
            *r += b;
        }
        conf.push(softplus(raw[3]));
        let (py, px) = (t / gx, t % gx);
        for dy in 0..c.patch {
            for dx in 0..c.patch {
                points.set(py * c.patch + dy, px * c.patch + dx, [raw[0], raw[1], raw[2]]);
            }
        }
    }
    Ok((points, upsample_scalar(&conf, gy, gx, c.patch)))
}

/// Decode a chunk's final tokens frame by frame.
pub fn predict_heads(
    bb: &Backbone,
    tokens: &Matrix,
    frames: usize,
    start: usize,
) -> Result<ChunkPrediction> {
    let per_frame = bb.config.tokens_per_frame();
    if tokens.rows() != frames * per_frame {
        return Err(CoreError::shape(format!(
            "{} tokens for {frames} frames of {per_frame}",
            tokens.rows()
        )));
    }
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut frame_tokens = Matrix::zeros(per_frame, bb.config.d);
        for t in 0..per_frame {
            frame_tokens.row_mut(t).copy_from_slice(tokens.row(f * per_frame + t));
        }
        let camera = camera_head(bb, &frame_tokens)?;
        let (depth, depth_conf) = depth_head(bb, &frame_tokens)?;
        let (points, point_conf) = point_head(bb, &frame_tokens)?;
        out.push(FramePrediction { camera, depth, depth_conf, points, point_conf });
    }
    Ok(ChunkPrediction::contiguous(start, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::BackboneConfig;
    use crate::rng;

    fn backbone() -> Backbone {
        let mut c = BackboneConfig::toy(11);
        c.layers = 1;
        c.gcm_layers = vec![];
        c.d = 16;
        c.heads = 2;
        Backbone::init(c).unwrap()
    }

    #[test]
    fn quaternion_is_unit_norm() {
        let bb = backbone();
        for seed in 0..20u64 {
            let mut r = rng::stream(seed, "heads.tokens");
            let tokens = Matrix::random_uniform(16, 16, 1.0, &mut r);
            let cam = camera_head(&bb, &tokens).unwrap();
            let n = (cam[0] * cam[0] + cam[1] * cam[1] + cam[2] * cam[2] + cam[3] * cam[3]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(cam[7] >= 0.0 && cam[8] >= 0.0);
        }
    }

    #[test]
    fn confidence_everywhere_nonnegative_and_dims_match() {
        let bb = backbone();
        let mut r = rng::stream(3, "heads.tokens2");
        let tokens = Matrix::random_uniform(16, 16, 1.0, &mut r);
        let (depth, dconf) = depth_head(&bb, &tokens).unwrap();
        let (points, pconf) = point_head(&bb, &tokens).unwrap();
        assert_eq!(depth.h(), 32);
        assert_eq!(depth.w(), 32);
        assert_eq!(points.h(), 32);
        assert_eq!(points.w(), 32);
        assert!(dconf.data().iter().all(|&v| v >= 0.0));
        assert!(pconf.data().iter().all(|&v| v >= 0.0));
        // Softplus depth is positive wherever confidence is positive.
        assert!(depth.data().iter().all(|&v| v > 0.0));
    }
}
