//! Ground-truth-backed stand-in predictor with controllable corruption.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::render::render_with_winners;
use super::Scene;
use crate::backbone::{ChunkPrediction, FramePrediction, Grid, PointGrid, CAMERA_DIM};
use crate::error::{CoreError, Result};
use crate::geometry::Sim3;
use crate::numkit::vec3::{self, Vec3};
use crate::numkit::{rot_to_quat, so3_exp};
use crate::rng;

/// Corruption applied to synthetic predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Relative depth noise sigma.
    pub depth_sigma: f64,
    /// Per-chunk drift magnitudes: rotation (degrees), translation
    /// (meters), multiplicative scale (1.0 disables).
    pub drift_rot_deg: f64,
    pub drift_trans_m: f64,
    pub drift_scale: f64,
    /// Fraction of valid pixels replaced by gross low-confidence outliers.
    pub conf_corrupt_rate: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none(seed: u64) -> Self {
        NoiseModel {
            depth_sigma: 0.0,
            drift_rot_deg: 0.0,
            drift_trans_m: 0.0,
            drift_scale: 1.0,
            conf_corrupt_rate: 0.0,
            seed,
        }
    }

    pub fn has_drift(&self) -> bool {
        self.drift_rot_deg != 0.0 || self.drift_trans_m != 0.0 || self.drift_scale != 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth_sigma < 0.0 || self.conf_corrupt_rate < 0.0 || self.conf_corrupt_rate > 1.0 {
            return Err(CoreError::config("bad noise magnitudes".to_string()));
        }
        if !(self.drift_scale > 0.0) {
            return Err(CoreError::config("drift scale must be positive".to_string()));
        }
        Ok(())
    }
}

/// The drift similarity a prediction tagged `tag` is corrupted by:
/// configured magnitudes along seeded random directions.
pub fn chunk_drift(noise: &NoiseModel, tag: &str) -> Sim3 {
    if !noise.has_drift() {
        return Sim3::identity();
    }
    let mut r = rng::stream(noise.seed, &format!("noise.drift.{tag}"));
    let unit = |r: &mut rand_chacha::ChaCha8Rng| {
        vec3::normalize([
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        ])
    };
    let axis = unit(&mut r);
    let rot = so3_exp(vec3::scale(axis, noise.drift_rot_deg.to_radians()));
    let dir = unit(&mut r);
    let trans = vec3::scale(dir, noise.drift_trans_m);
    let scale = if noise.drift_scale == 1.0 {
        1.0
    } else if r.random_range(0.0..1.0) < 0.5 {
        noise.drift_scale
    } else {
        1.0 / noise.drift_scale
    };
    Sim3::new(scale, rot, trans).expect("drift magnitudes validated")
}

/// Predict the listed frames in the local frame of the first one.
///
/// With zero noise the point maps hold the exact ground-truth point
/// coordinates (local frame) of each pixel's z-buffer winner, and cameras
/// are the exact relative poses. Depth noise rescales points along the
/// ray through the camera center so depths and points stay consistent;
/// corruption replaces pixels with gross outliers at low confidence; the
/// per-prediction drift similarity multiplies everything.
pub fn synth_predictor(
    scene: &Scene,
    frame_ids: &[usize],
    noise: &NoiseModel,
    drift_tag: &str,
) -> Result<ChunkPrediction> {
    noise.validate()?;
    if frame_ids.is_empty() {
        return Err(CoreError::input("no frames requested".to_string()));
    }
    for &f in frame_ids {
        if f < 1 || f > scene.trajectory.len() {
            return Err(CoreError::input(format!(
                "frame {f} outside scene 1..={}",
                scene.trajectory.len()
            )));
        }
    }
    let anchor = &scene.trajectory.frames()[frame_ids[0] - 1];
    let anchor_rot_inv = anchor.rotation.conjugate();
    let to_local = |p: Vec3| anchor_rot_inv.rotate(vec3::sub(p, anchor.position));

    let drift = chunk_drift(noise, drift_tag);
    let apply_drift = noise.has_drift();
    let (fov_x, fov_y) = scene.camera.fov();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut frames = Vec::with_capacity(frame_ids.len());
    for &f in frame_ids {
        let pose = &scene.trajectory.frames()[f - 1];
        let rendered = render_with_winners(&scene.camera, &pose.rotation, pose.position, &scene.cloud);
        let (h, w) = (scene.camera.height, scene.camera.width);

        // Relative pose: camera f in the anchor frame.
        let mut rot_local = anchor_rot_inv.mul(&pose.rotation).normalized();
        let mut t_local = to_local(pose.position);

        let mut px_rng = rng::stream(noise.seed, &format!("noise.px.{drift_tag}.{f}"));
        let mut depth = Grid::zeros(h, w);
        let mut depth_conf = Grid::zeros(h, w);
        let mut points = PointGrid::zeros(h, w);
        let mut point_conf = Grid::zeros(h, w);

        for y in 0..h {
            for x in 0..w {
                let Some(idx) = rendered.winner(y, x) else { continue };
                let mut z = rendered.depth.get(y, x);
                let mut p = to_local(scene.cloud[idx]);
                let mut conf = 1.0;

                if noise.conf_corrupt_rate > 0.0
                    && px_rng.random_range(0.0..1.0) < noise.conf_corrupt_rate
                {
                    let e = scene.spec.extent;
                    p = [
                        px_rng.random_range(-3.0 * e..3.0 * e),
                        px_rng.random_range(-3.0 * e..3.0 * e),
                        px_rng.random_range(-3.0 * e..3.0 * e),
                    ];
                    z = px_rng.random_range(0.1 * e..3.0 * e);
                    conf = 0.05;
                } else if noise.depth_sigma > 0.0 {
                    let factor = (1.0 + noise.depth_sigma * normal.sample(&mut px_rng)).max(0.05);
                    p = vec3::add(t_local, vec3::scale(vec3::sub(p, t_local), factor));
                    z *= factor;
                }

                if apply_drift {
                    p = drift.apply(p);
                    z *= drift.scale();
                }
                depth.set(y, x, z);
                depth_conf.set(y, x, conf);
                points.set(y, x, p);
                point_conf.set(y, x, conf);
            }
        }

        if apply_drift {
            let r = drift.rot().matmul(&crate::numkit::quat_to_rot(&rot_local))?;
            rot_local = rot_to_quat(&r)?;
            t_local = drift.apply(t_local);
        }
        let mut camera = [0.0; CAMERA_DIM];
        camera[0] = rot_local.w;
        camera[1] = rot_local.x;
        camera[2] = rot_local.y;
        camera[3] = rot_local.z;
        camera[4] = t_local[0];
        camera[5] = t_local[1];
        camera[6] = t_local[2];
        camera[7] = fov_x;
        camera[8] = fov_y;

        frames.push(FramePrediction { camera, depth, depth_conf, points, point_conf });
    }
    ChunkPrediction::sparse(frame_ids.to_vec(), frames)
}

/// Contiguous-chunk convenience wrapper; the drift stream is tagged by the
/// chunk's first frame.
pub fn synth_predict_chunk(
    scene: &Scene,
    start: usize,
    end: usize,
    noise: &NoiseModel,
) -> Result<ChunkPrediction> {
    if start < 1 || end < start {
        return Err(CoreError::input(format!("bad chunk range {start}..={end}")));
    }
    let ids: Vec<usize> = (start..=end).collect();
    synth_predictor(scene, &ids, noise, &format!("chunk.{start}"))
}
