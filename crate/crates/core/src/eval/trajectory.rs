//! Camera trajectories and pose metrics.

use crate::error::{CoreError, Result};
use crate::geometry::{umeyama, Sim3};
use crate::numkit::vec3::{self, Vec3};
use crate::numkit::{quat_to_rot, rotation_angle, Matrix, Quaternion};

/// One camera-to-world pose with its timestamp.
#[derive(Debug, Clone)]
pub struct FramePose {
    pub timestamp: f64,
    pub rotation: Quaternion,
    pub position: Vec3,
}

/// Ordered pose sequence; timestamps strictly increase.
#[derive(Debug, Clone)]
pub struct Trajectory {
    frames: Vec<FramePose>,
}

impl Trajectory {
    pub fn new(frames: Vec<FramePose>) -> Result<Self> {
        if frames.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(CoreError::input("timestamps must strictly increase".to_string()));
        }
        for f in &frames {
            if (f.rotation.norm() - 1.0).abs() > 1e-6 {
                return Err(CoreError::geometry("rotation quaternion not unit norm".to_string()));
            }
        }
        Ok(Trajectory { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FramePose] {
        &self.frames
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.position).collect()
    }

    /// Path length along ground-truth positions, meters.
    pub fn path_length(&self) -> f64 {
        self.frames.windows(2).map(|w| vec3::dist(w[0].position, w[1].position)).sum()
    }

    /// Compose a global similarity onto every pose.
    pub fn transformed(&self, s: &Sim3) -> Result<Trajectory> {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let r = s.rot().matmul(&quat_to_rot(&f.rotation))?;
                Ok(FramePose {
                    timestamp: f.timestamp,
                    rotation: crate::numkit::rot_to_quat(&r)?,
                    position: s.apply(f.position),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { frames })
    }
}

fn check_pair(pred: &Trajectory, gt: &Trajectory) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(CoreError::input(format!(
            "trajectory lengths differ: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.len() < 3 {
        return Err(CoreError::input("need at least 3 frames".to_string()));
    }
    Ok(())
}

/// Sim(3) alignment of predicted positions onto ground truth
/// (index-matched, unit weights, with scale).
pub fn align_trajectory(pred: &Trajectory, gt: &Trajectory) -> Result<Sim3> {
    check_pair(pred, gt)?;
    umeyama(&pred.positions(), &gt.positions(), &vec![1.0; pred.len()], true)
}

/// Absolute trajectory error: RMSE of translational residuals after
/// Sim(3) alignment.
pub fn ate(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    let s = align_trajectory(pred, gt)?;
    let aligned = pred.transformed(&s)?;
    ate_unaligned(&aligned, gt)
}

/// RMSE of translational residuals without any alignment.
pub fn ate_unaligned(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(CoreError::input("trajectory lengths differ".to_string()));
    }
    let n = pred.len();
    if n == 0 {
        return Err(CoreError::input("empty trajectory".to_string()));
    }
    let mut acc = 0.0;
    for (p, g) in pred.frames.iter().zip(&gt.frames) {
        let d = vec3::sub(p.position, g.position);
        acc += vec3::dot(d, d);
    }
    Ok((acc / n as f64).sqrt())
}

fn relative(a: &FramePose, b: &FramePose) -> (Matrix, Vec3) {
    let ra = quat_to_rot(&a.rotation);
    let rb = quat_to_rot(&b.rotation);
    let rel_r = ra.transpose().matmul(&rb).expect("3x3");
    let dt = vec3::sub(b.position, a.position);
    let rat = ra.transpose();
    let rel_t = [
        rat.get(0, 0) * dt[0] + rat.get(0, 1) * dt[1] + rat.get(0, 2) * dt[2],
        rat.get(1, 0) * dt[0] + rat.get(1, 1) * dt[1] + rat.get(1, 2) * dt[2],
        rat.get(2, 0) * dt[0] + rat.get(2, 1) * dt[1] + rat.get(2, 2) * dt[2],
    ];
    (rel_r, rel_t)
}

/// Fixed-segment relative rotation/translation errors.
///
/// For every start frame and every segment length (meters), the first
/// frame at ground-truth path distance >= the length closes the segment;
/// the relative-pose error of prediction vs ground truth over the segment
/// is normalized by its length and averaged over all pairs, reported per
/// 100 m. The caller pre-aligns the prediction (relative poses already
/// cancel any global rigid motion; alignment handles scale).
///
/// Returns `None` when the path is shorter than the smallest segment.
pub fn rre_rte(
    pred: &Trajectory,
    gt: &Trajectory,
    segment_lengths: &[f64],
) -> Result<(Option<f64>, Option<f64>)> {
    check_pair(pred, gt)?;
    if segment_lengths.is_empty() || segment_lengths.iter().any(|&l| l <= 0.0) {
        return Err(CoreError::input("segment lengths must be positive".to_string()));
    }
    let n = gt.len();
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + vec3::dist(gt.frames[i].position, gt.frames[i - 1].position);
    }

    let mut rot_sum = 0.0;
    let mut trans_sum = 0.0;
    let mut count = 0usize;
    for start in 0..n {
        for &len in segment_lengths {
            let target = cum[start] + len;
            // First frame at or beyond the target distance.
            let end = match cum[start..].iter().position(|&c| c >= target) {
                Some(offset) => start + offset,
                None => continue,
            };
            let (gr, gtv) = relative(&gt.frames[start], &gt.frames[end]);
            let (pr, ptv) = relative(&pred.frames[start], &pred.frames[end]);
            let err_r = gr.transpose().matmul(&pr)?;
            let angle_deg = rotation_angle(&err_r).to_degrees();
            let trans_err = vec3::dist(ptv, gtv);
            rot_sum += angle_deg / len;
            trans_sum += trans_err / len;
            count += 1;
        }
    }
    if count == 0 {
        return Ok((None, None));
    }
    let k = count as f64;
    Ok((Some(rot_sum / k * 100.0), Some(trans_sum / k * 100.0)))
}
