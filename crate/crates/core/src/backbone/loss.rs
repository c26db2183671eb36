//! Multi-task training loss: lambda * camera + depth + points.

use super::prediction::{ChunkPrediction, Grid};
use crate::error::{CoreError, Result};

/// Confidence-weighted absolute error with a log-confidence term plus a
/// first-difference gradient penalty on the error map.
fn map_loss(pred: &[&Grid], conf: &Grid, gt: &[&Grid]) -> Result<f64> {
    let (h, w) = (conf.h(), conf.w());
    for g in pred.iter().chain(gt.iter()) {
        if g.h() != h || g.w() != w {
            return Err(CoreError::shape("map sizes disagree in loss".to_string()));
        }
    }
    let n = (h * w) as f64;
    let mut data_term = 0.0;
    let mut grad_term = 0.0;
    for (p, g) in pred.iter().zip(gt.iter()) {
        for y in 0..h {
            for x in 0..w {
                let e = p.get(y, x) - g.get(y, x);
                let c = conf.get(y, x);
                data_term += e.abs() * c - c.ln();
                if x + 1 < w {
                    let ex = (p.get(y, x + 1) - g.get(y, x + 1)) - e;
                    grad_term += ex.abs();
                }
                if y + 1 < h {
                    let ey = (p.get(y + 1, x) - g.get(y + 1, x)) - e;
                    grad_term += ey.abs();
                }
            }
        }
    }
    Ok((data_term + grad_term) / n)
}

/// L = lambda * L_cam + L_dpt + L_xyz over a chunk.
///
/// L_cam is the mean absolute error on the 9-vector camera encoding;
/// L_dpt and L_xyz are confidence-weighted absolute errors
/// (|e| * conf - log conf) with first-difference gradient penalties,
/// using the predicted confidences.
pub fn multi_task_loss(pred: &ChunkPrediction, gt: &ChunkPrediction, lambda: f64) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(CoreError::shape(format!(
            "{} predicted frames vs {} ground-truth frames",
            pred.len(),
            gt.len()
        )));
    }
    let mut cam = 0.0;
    let mut dpt = 0.0;
    let mut xyz = 0.0;
    for (p, g) in pred.frames().iter().zip(gt.frames()) {
        let mut err = 0.0;
        for (a, b) in p.camera.iter().zip(&g.camera) {
            err += (a - b).abs();
        }
        cam += err / p.camera.len() as f64;
        dpt += map_loss(&[&p.depth], &p.depth_conf, &[&g.depth])?;

        let split = |grid: &super::prediction::PointGrid| -> [Grid; 3] {
            let (h, w) = (grid.h(), grid.w());
            let mut planes = [Grid::zeros(h, w), Grid::zeros(h, w), Grid::zeros(h, w)];
            for y in 0..h {
                for x in 0..w {
                    let v = grid.get(y, x);
                    for c in 0..3 {
                        planes[c].set(y, x, v[c]);
                    }
                }
            }
            planes
        };
        let pp = split(&p.points);
        let gp = split(&g.points);
        xyz += map_loss(
            &[&pp[0], &pp[1], &pp[2]],
            &p.point_conf,
            &[&gp[0], &gp[1], &gp[2]],
        )?;
    }
    let n = pred.len() as f64;
    Ok(lambda * cam / n + dpt / n + xyz / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::prediction::{FramePrediction, PointGrid};
    use crate::backbone::{Backbone, BackboneConfig, Image};
    use crate::rng;
    use rand::Rng;

    fn frame(h: usize, w: usize, seed: u64) -> FramePrediction {
        let mut r = rng::stream(seed, "loss.frame");
        let mut depth = Grid::zeros(h, w);
        let mut points = PointGrid::zeros(h, w);
        for y in 0..h {
            for x in 0..w {
                depth.set(y, x, r.random_range(1.0..5.0));
                points.set(y, x, [
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                    r.random_range(1.0..4.0),
                ]);
            }
        }
        FramePrediction {
            camera: [1.0, 0.0, 0.0, 0.0, 0.3, -0.2, 0.5, 1.0, 1.0],
            depth,
            depth_conf: Grid::filled(h, w, 1.0),
            points,
            point_conf: Grid::filled(h, w, 1.0),
        }
    }

    #[test]
    fn perfect_prediction_with_unit_confidence_is_zero() {
        let gt = ChunkPrediction::contiguous(1, vec![frame(4, 4, 1), frame(4, 4, 2)]);
        let loss = multi_task_loss(&gt, &gt, 1.0).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn lambda_zero_removes_camera_term() {
        let gt = ChunkPrediction::contiguous(1, vec![frame(4, 4, 3)]);
        let mut pred = gt.clone();
        pred.frames_mut()[0].camera[4] += 1.0;
        assert_eq!(multi_task_loss(&pred, &gt, 0.0).unwrap(), 0.0);
        assert!(multi_task_loss(&pred, &gt, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn random_search_decreases_loss_on_toy_fit() {
        // 2-frame fit with gradient-free random search over head weights.
        let mut c = BackboneConfig::toy(41);
        c.layers = 1;
        c.gcm_layers = vec![];
        c.d = 8;
        c.heads = 2;
        c.patch = 4;
        c.image_h = 8;
        c.image_w = 8;
        let mut bb = Backbone::init(c.clone()).unwrap();
        let gt_bb = Backbone::init(BackboneConfig { seed: 999, ..c }).unwrap();

        let mut r = rng::stream(50, "loss.search");
        let images: Vec<Image> = (0..2)
            .map(|_| {
                let mut img = Image::zeros(8, 8);
                for ch in 0..3 {
                    for y in 0..8 {
                        for x in 0..8 {
                            img.set(ch, y, x, r.random_range(0.0..1.0));
                        }
                    }
                }
                img
            })
            .collect();

        let predict = |bb: &Backbone| {
            let (tokens, _) = bb.run_backbone(&images, &Default::default()).unwrap();
            bb.predict_heads(&tokens, 2, 1).unwrap()
        };
        let gt = predict(&gt_bb);
        let initial = multi_task_loss(&predict(&bb), &gt, 1.0).unwrap();

        let mut best = initial;
        for _ in 0..50 {
            let mut trial = bb.clone();
            for m in [&mut trial.camera_w, &mut trial.depth_w, &mut trial.point_w] {
                for v in m.data_mut() {
                    *v += r.random_range(-0.05..0.05);
                }
            }
            for b in [&mut trial.camera_b, &mut trial.depth_b, &mut trial.point_b] {
                for v in b.iter_mut() {
                    *v += r.random_range(-0.05..0.05);
                }
            }
            let loss = multi_task_loss(&predict(&trial), &gt, 1.0).unwrap();
            if loss < best {
                best = loss;
                bb = trial;
            }
        }
        assert!(best < initial, "random search failed to improve: {initial} -> {best}");
    }
}
