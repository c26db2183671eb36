//! Z-buffered point rendering and synthetic frame images.

use super::camera::PinholeCamera;
use crate::backbone::{Grid, Image};
use crate::numkit::vec3::{self, Vec3};
use crate::numkit::Quaternion;
use crate::rng;

/// Depth buffer plus the index of the winning point per pixel.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Depth in meters; 0 marks unobserved pixels.
    pub depth: Grid,
    pub winners: Vec<Option<usize>>,
}

impl RenderOutput {
    #[inline]
    pub fn winner(&self, y: usize, x: usize) -> Option<usize> {
        self.winners[y * self.depth.w() + x]
    }
}

/// Project every point through the camera at `rotation`/`position`
/// (camera-to-world) and keep the nearest point per pixel. Points project
/// to their rounded pixel; ties in depth keep the lower point index.
pub fn render_with_winners(
    camera: &PinholeCamera,
    rotation: &Quaternion,
    position: Vec3,
    cloud: &[Vec3],
) -> RenderOutput {
    let (h, w) = (camera.height, camera.width);
    let mut depth = Grid::zeros(h, w);
    let mut winners: Vec<Option<usize>> = vec![None; h * w];
    let inv = rotation.conjugate();
    for (idx, p) in cloud.iter().enumerate() {
        let cam_p = inv.rotate(vec3::sub(*p, position));
        let Some((u, v)) = camera.project(cam_p) else { continue };
        let px = u.round();
        let py = v.round();
        if px < 0.0 || py < 0.0 || px >= w as f64 || py >= h as f64 {
            continue;
        }
        let (x, y) = (px as usize, py as usize);
        let current = depth.get(y, x);
        if current == 0.0 || cam_p[2] < current {
            depth.set(y, x, cam_p[2]);
            winners[y * w + x] = Some(idx);
        }
    }
    RenderOutput { depth, winners }
}

/// Depth map alone; unobserved pixels are 0.
pub fn render_depth(
    camera: &PinholeCamera,
    rotation: &Quaternion,
    position: Vec3,
    cloud: &[Vec3],
) -> Grid {
    render_with_winners(camera, rotation, position, cloud).depth
}

/// Per-point base brightness, stable across frames.
fn point_brightness(idx: usize) -> f64 {
    let h = rng::fnv1a64(&(idx as u64).to_le_bytes());
    0.3 + 0.7 * (h as f64 / u64::MAX as f64)
}

/// Synthesized 3-channel frame: point brightness shaded by depth,
/// normalized inverse depth, and a validity mask.
pub fn frame_image(
    camera: &PinholeCamera,
    rotation: &Quaternion,
    position: Vec3,
    cloud: &[Vec3],
    extent: f64,
) -> Image {
    let out = render_with_winners(camera, rotation, position, cloud);
    let (h, w) = (camera.height, camera.width);
    let mut img = Image::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            if let Some(idx) = out.winner(y, x) {
                let z = out.depth.get(y, x);
                img.set(0, y, x, point_brightness(idx) / (1.0 + z / extent.max(1e-9)));
                img.set(1, y, x, 1.0 / (1.0 + z));
                img.set(2, y, x, 1.0);
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera() -> PinholeCamera {
        PinholeCamera { fx: 50.0, fy: 50.0, cx: 32.0, cy: 24.0, width: 64, height: 48 }
    }

    #[test]
    fn optical_axis_point_lands_at_principal_pixel() {
        let cam = camera();
        let depth = render_depth(&cam, &Quaternion::IDENTITY, [0.0; 3], &[[0.0, 0.0, 5.0]]);
        assert_eq!(depth.get(24, 32), 5.0);
    }

    #[test]
    fn point_behind_camera_not_rendered() {
        let cam = camera();
        let depth = render_depth(&cam, &Quaternion::IDENTITY, [0.0; 3], &[[0.0, 0.0, -5.0]]);
        assert!(depth.data().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn nearer_point_wins_the_z_buffer() {
        let cam = camera();
        let out = render_with_winners(
            &cam,
            &Quaternion::IDENTITY,
            [0.0; 3],
            &[[0.0, 0.0, 5.0], [0.0, 0.0, 2.0]],
        );
        assert_eq!(out.depth.get(24, 32), 2.0);
        assert_eq!(out.winner(24, 32), Some(1));
    }

    #[test]
    fn depth_tie_keeps_lower_index() {
        let cam = camera();
        let out = render_with_winners(
            &cam,
            &Quaternion::IDENTITY,
            [0.0; 3],
            &[[0.0, 0.0, 3.0], [0.0, 0.0, 3.0]],
        );
        assert_eq!(out.winner(24, 32), Some(0));
    }

    #[test]
    fn sparse_cloud_matches_direct_projection() {
        let cam = camera();
        // Points on distinct pixels: depth equals the camera-frame z.
        let cloud = vec![[0.5, 0.2, 4.0], [-0.4, -0.3, 2.5], [0.1, -0.5, 6.0]];
        let out = render_with_winners(&cam, &Quaternion::IDENTITY, [0.0; 3], &cloud);
        for (i, p) in cloud.iter().enumerate() {
            let (u, v) = cam.project(*p).unwrap();
            let (x, y) = (u.round() as usize, v.round() as usize);
            assert_eq!(out.depth.get(y, x), p[2]);
            assert_eq!(out.winner(y, x), Some(i));
        }
    }

    #[test]
    fn identical_frames_give_identical_images() {
        let cam = camera();
        let cloud = vec![[0.5, 0.2, 4.0], [-0.4, -0.3, 2.5]];
        let a = frame_image(&cam, &Quaternion::IDENTITY, [0.0; 3], &cloud, 5.0);
        let b = frame_image(&cam, &Quaternion::IDENTITY, [0.0; 3], &cloud, 5.0);
        assert_eq!(a.data(), b.data());
    }
}
