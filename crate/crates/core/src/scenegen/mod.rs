//! Synthetic ground-truth scenes, the noise-injecting stand-in predictor,
//! and file I/O (TUM trajectories, PLY clouds, key-value configs, JSON
//! reports, depth archives).

mod camera;
mod descriptor;
pub mod io;
mod predictor;
mod render;
mod trajectory;

pub use camera::PinholeCamera;
pub use descriptor::descriptor;
pub use predictor::{chunk_drift, synth_predict_chunk, synth_predictor, NoiseModel};
pub use render::{frame_image, render_depth, render_with_winners, RenderOutput};
pub use trajectory::{gen_trajectory, TrajectoryKind};

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::eval::Trajectory;
use crate::numkit::vec3::Vec3;
use crate::rng;
use rand::Rng;

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub kind: TrajectoryKind,
    pub frames: usize,
    /// Meters of camera travel per frame.
    pub speed: f64,
    /// Points sampled before visibility filtering.
    pub point_count: usize,
    /// Scene depth extent, meters.
    pub extent: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(CoreError::config("scene needs at least 2 frames".to_string()));
        }
        if !(self.extent > 0.0) {
            return Err(CoreError::config("extent must be positive".to_string()));
        }
        if !(self.speed > 0.0) {
            return Err(CoreError::config("speed must be positive".to_string()));
        }
        Ok(())
    }
}

/// A generated scene: ground-truth trajectory plus the visible point cloud.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub camera: PinholeCamera,
    pub trajectory: Trajectory,
    /// World-frame points; every point wins at least one pixel in at least
    /// one frame, so a zero-noise pipeline can reproduce the cloud exactly.
    pub cloud: Vec<Vec3>,
}

/// Generate trajectory and cloud for a spec.
///
/// Candidate points are anchored inside the frustum of a round-robin
/// frame; after z-buffered rendering of every frame only pixel winners are
/// kept.
pub fn generate_scene(spec: &SceneSpec, camera: &PinholeCamera) -> Result<Scene> {
    spec.validate()?;
    camera.validate()?;
    let trajectory = gen_trajectory(spec)?;

    let mut r = rng::stream(spec.seed, "scene.points");
    let n_frames = trajectory.len();
    let margin = 1.0;
    let mut candidates: Vec<Vec3> = Vec::with_capacity(spec.point_count);
    for i in 0..spec.point_count {
        let frame = &trajectory.frames()[i % n_frames];
        let u = r.random_range(margin..(camera.width as f64 - margin));
        let v = r.random_range(margin..(camera.height as f64 - margin));
        let z = r.random_range(0.3 * spec.extent..spec.extent);
        let local = [
            (u - camera.cx) / camera.fx * z,
            (v - camera.cy) / camera.fy * z,
            z,
        ];
        let world = crate::numkit::vec3::add(frame.rotation.rotate(local), frame.position);
        candidates.push(world);
    }

    // Keep only points that win a pixel somewhere.
    let winner_sets = crate::par::map_indices(n_frames, |f| {
        let frame = &trajectory.frames()[f];
        render::render_with_winners(camera, &frame.rotation, frame.position, &candidates).winners
    });
    let mut visible = vec![false; candidates.len()];
    for winners in &winner_sets {
        for w in winners.iter().flatten() {
            visible[*w] = true;
        }
    }
    let cloud: Vec<Vec3> = candidates
        .into_iter()
        .zip(&visible)
        .filter_map(|(p, &v)| v.then_some(p))
        .collect();
    if cloud.is_empty() {
        return Err(CoreError::config("no visible points; check camera and extent".to_string()));
    }
    Ok(Scene { spec: spec.clone(), camera: camera.clone(), trajectory, cloud })
}

/// Persist a scene as scene.cfg + trajectory.tum + cloud.ply + depths.bin.
pub fn save_scene(dir: &Path, scene: &Scene) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut pairs: Vec<(String, String)> = vec![
        ("kind".to_string(), scene.spec.kind.name().to_string()),
        ("frames".to_string(), scene.spec.frames.to_string()),
        ("speed".to_string(), format!("{}", scene.spec.speed)),
        ("point_count".to_string(), scene.spec.point_count.to_string()),
        ("extent".to_string(), format!("{}", scene.spec.extent)),
        ("seed".to_string(), scene.spec.seed.to_string()),
    ];
    pairs.extend(scene.camera.to_pairs());
    io::write_config(&dir.join("scene.cfg"), &pairs)?;
    io::write_trajectory(&dir.join("trajectory.tum"), &scene.trajectory)?;
    io::write_cloud(&dir.join("cloud.ply"), &scene.cloud, None, true)?;
    let depths: Vec<crate::backbone::Grid> = scene
        .trajectory
        .frames()
        .iter()
        .map(|f| render_depth(&scene.camera, &f.rotation, f.position, &scene.cloud))
        .collect();
    io::write_depth_archive(&dir.join("depths.bin"), &depths)?;
    Ok(())
}

/// Load a scene saved by `save_scene`. The cloud comes from cloud.ply and
/// the trajectory from trajectory.tum, so regenerating is not needed.
pub fn load_scene(dir: &Path) -> Result<Scene> {
    let cfg = io::read_config(&dir.join("scene.cfg"))?;
    let get = |key: &str| {
        cfg.get(key)
            .ok_or_else(|| CoreError::config(format!("scene.cfg missing '{key}'")))
    };
    let spec = SceneSpec {
        kind: TrajectoryKind::parse(get("kind")?)?,
        frames: get("frames")?.parse().map_err(|_| CoreError::config("bad frames".into()))?,
        speed: get("speed")?.parse().map_err(|_| CoreError::config("bad speed".into()))?,
        point_count: get("point_count")?
            .parse()
            .map_err(|_| CoreError::config("bad point_count".into()))?,
        extent: get("extent")?.parse().map_err(|_| CoreError::config("bad extent".into()))?,
        seed: get("seed")?.parse().map_err(|_| CoreError::config("bad seed".into()))?,
    };
    let camera = PinholeCamera::from_pairs(&cfg)?;
    let trajectory = io::read_trajectory(&dir.join("trajectory.tum"))?;
    let (cloud, _) = io::read_cloud(&dir.join("cloud.ply"))?;
    Ok(Scene { spec, camera, trajectory, cloud })
}
