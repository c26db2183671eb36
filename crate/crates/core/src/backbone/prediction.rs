//! Per-chunk prediction containers shared by the backbone, the synthetic
//! predictor, alignment, and fusion.

use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;
use crate::numkit::Quaternion;

/// Scalar per-pixel grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize) -> Self {
        Grid { h, w, data: vec![0.0; h * w] }
    }

    pub fn filled(h: usize, w: usize, v: f64) -> Self {
        Grid { h, w, data: vec![v; h * w] }
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w {
            return Err(CoreError::shape(format!("grid {h}x{w} needs {} values", h * w)));
        }
        Ok(Grid { h, w, data })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.w + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn bit_eq(&self, other: &Grid) -> bool {
        self.h == other.h
            && self.w == other.w
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Per-pixel 3D points, stored channel-major (x-plane, y-plane, z-plane).
#[derive(Debug, Clone, PartialEq)]
pub struct PointGrid {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl PointGrid {
    pub fn zeros(h: usize, w: usize) -> Self {
        PointGrid { h, w, data: vec![0.0; 3 * h * w] }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> Vec3 {
        let plane = self.h * self.w;
        let idx = y * self.w + x;
        [self.data[idx], self.data[plane + idx], self.data[2 * plane + idx]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, p: Vec3) {
        let plane = self.h * self.w;
        let idx = y * self.w + x;
        self.data[idx] = p[0];
        self.data[plane + idx] = p[1];
        self.data[2 * plane + idx] = p[2];
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn bit_eq(&self, other: &PointGrid) -> bool {
        self.h == other.h
            && self.w == other.w
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Camera encoding: unit quaternion (w, x, y, z), translation, field of view.
pub const CAMERA_DIM: usize = 9;

/// One frame's outputs, expressed in the owning chunk's local frame.
#[derive(Debug, Clone)]
pub struct FramePrediction {
    /// [qw, qx, qy, qz, tx, ty, tz, fov_x, fov_y], camera-to-local-world.
    pub camera: [f64; CAMERA_DIM],
    pub depth: Grid,
    pub depth_conf: Grid,
    pub points: PointGrid,
    pub point_conf: Grid,
}

impl FramePrediction {
    pub fn rotation(&self) -> Quaternion {
        Quaternion::new(self.camera[0], self.camera[1], self.camera[2], self.camera[3])
    }

    pub fn translation(&self) -> Vec3 {
        [self.camera[4], self.camera[5], self.camera[6]]
    }

    pub fn bit_eq(&self, other: &FramePrediction) -> bool {
        self.camera.iter().zip(&other.camera).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.depth.bit_eq(&other.depth)
            && self.depth_conf.bit_eq(&other.depth_conf)
            && self.points.bit_eq(&other.points)
            && self.point_conf.bit_eq(&other.point_conf)
    }
}

/// Predictions for a set of frames expressed in one shared local frame.
/// Usually a contiguous chunk; loop-closure probes use sparse frame sets.
#[derive(Debug, Clone)]
pub struct ChunkPrediction {
    frame_ids: Vec<usize>,
    frames: Vec<FramePrediction>,
}

impl ChunkPrediction {
    /// Contiguous chunk starting at 1-based frame id `start`.
    pub fn contiguous(start: usize, frames: Vec<FramePrediction>) -> Self {
        let frame_ids = (start..start + frames.len()).collect();
        ChunkPrediction { frame_ids, frames }
    }

    /// Arbitrary strictly-increasing frame ids.
    pub fn sparse(frame_ids: Vec<usize>, frames: Vec<FramePrediction>) -> Result<Self> {
        if frame_ids.len() != frames.len() {
            return Err(CoreError::shape(format!(
                "{} frame ids vs {} frames",
                frame_ids.len(),
                frames.len()
            )));
        }
        if frame_ids.is_empty() {
            return Err(CoreError::input("prediction holds no frames".to_string()));
        }
        if frame_ids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::input("frame ids must strictly increase".to_string()));
        }
        Ok(ChunkPrediction { frame_ids, frames })
    }

    pub fn start(&self) -> usize {
        self.frame_ids[0]
    }

    pub fn end(&self) -> usize {
        *self.frame_ids.last().expect("nonempty")
    }

    pub fn frame_ids(&self) -> &[usize] {
        &self.frame_ids
    }

    pub fn frames(&self) -> &[FramePrediction] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [FramePrediction] {
        &mut self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn contains(&self, frame_id: usize) -> bool {
        self.frame_ids.binary_search(&frame_id).is_ok()
    }

    /// Frame by global 1-based id.
    pub fn frame(&self, frame_id: usize) -> Option<&FramePrediction> {
        self.frame_ids.binary_search(&frame_id).ok().map(|i| &self.frames[i])
    }

    /// (frame id, prediction) pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &FramePrediction)> {
        self.frame_ids.iter().copied().zip(self.frames.iter())
    }

    pub fn bit_eq(&self, other: &ChunkPrediction) -> bool {
        self.frame_ids == other.frame_ids
            && self.frames.len() == other.frames.len()
            && self.frames.iter().zip(&other.frames).all(|(a, b)| a.bit_eq(b))
    }
}
