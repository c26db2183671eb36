//! Smooth synthetic camera paths.

use super::SceneSpec;
use crate::error::{CoreError, Result};
use crate::eval::{FramePose, Trajectory};
use crate::numkit::vec3::{self, Vec3};
use crate::numkit::{rot_to_quat, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Line,
    Arc,
    Figure8,
    Loop,
}

impl TrajectoryKind {
    pub fn name(&self) -> &'static str {
        match self {
            TrajectoryKind::Line => "line",
            TrajectoryKind::Arc => "arc",
            TrajectoryKind::Figure8 => "figure8",
            TrajectoryKind::Loop => "loop",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(TrajectoryKind::Line),
            "arc" => Ok(TrajectoryKind::Arc),
            "figure8" => Ok(TrajectoryKind::Figure8),
            "loop" => Ok(TrajectoryKind::Loop),
            other => Err(CoreError::config(format!("unknown trajectory kind '{other}'"))),
        }
    }
}

fn position(kind: TrajectoryKind, spec: &SceneSpec, i: usize) -> Vec3 {
    let n = spec.frames as f64;
    let t = i as f64;
    match kind {
        TrajectoryKind::Line => [spec.speed * t, 0.0, 0.0],
        TrajectoryKind::Arc => {
            // Quarter circle of path length speed * (n-1).
            let radius = spec.speed * (n - 1.0) / std::f64::consts::FRAC_PI_2;
            let u = std::f64::consts::FRAC_PI_2 * t / (n - 1.0);
            [radius * u.sin(), radius * (1.0 - u.cos()), 0.0]
        }
        TrajectoryKind::Figure8 => {
            // Lemniscate closing exactly at the last frame.
            let a = spec.speed * (n - 1.0) / 6.1;
            let u = 2.0 * std::f64::consts::PI * t / (n - 1.0);
            [a * u.sin(), a * u.sin() * u.cos(), 0.0]
        }
        TrajectoryKind::Loop => {
            // Circle of circumference speed * (n-1), closing exactly.
            let radius = spec.speed * (n - 1.0) / (2.0 * std::f64::consts::PI);
            let u = 2.0 * std::f64::consts::PI * t / (n - 1.0);
            [radius * u.sin(), radius * (1.0 - u.cos()), 0.0]
        }
    }
}

/// Camera-to-world rotation looking along `forward` with world-z up.
fn heading(forward: Vec3) -> Matrix {
    let f = vec3::normalize(forward);
    let up = if f[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [0.0, 1.0, 0.0] };
    let x = vec3::normalize(vec3::cross(up, f));
    let y = vec3::cross(f, x);
    Matrix::from_rows(&[
        vec![x[0], y[0], f[0]],
        vec![x[1], y[1], f[1]],
        vec![x[2], y[2], f[2]],
    ])
    .expect("fixed shape")
}

/// Deterministic smooth pose sequence of the requested shape. Orientation
/// follows the velocity direction (central differences).
pub fn gen_trajectory(spec: &SceneSpec) -> Result<Trajectory> {
    spec.validate()?;
    let n = spec.frames;
    let positions: Vec<Vec3> = (0..n).map(|i| position(spec.kind, spec, i)).collect();
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let forward = if i == 0 {
            vec3::sub(positions[1], positions[0])
        } else if i + 1 == n {
            vec3::sub(positions[n - 1], positions[n - 2])
        } else {
            vec3::sub(positions[i + 1], positions[i - 1])
        };
        let rot = heading(forward);
        frames.push(FramePose {
            timestamp: i as f64,
            rotation: rot_to_quat(&rot)?,
            position: positions[i],
        });
    }
    Trajectory::new(frames)
}
