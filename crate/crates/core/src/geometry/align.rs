//! Overlap-based chunk alignment and chaining.

use super::sim3::Sim3;
use super::umeyama::umeyama;
use crate::backbone::ChunkPrediction;
use crate::error::{CoreError, Result};
use crate::numkit::vec3::{self, Vec3};
use crate::par;

/// Minimum surviving correspondences for a valid alignment.
pub const MIN_CORRESPONDENCES: usize = 50;
const TRIM_ROUNDS: usize = 3;
const TRIM_KEEP: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignStats {
    /// Correspondences above the confidence floor before trimming.
    pub initial: usize,
    /// Correspondences used in the final fit.
    pub survivors: usize,
    /// Weighted RMS residual of the final fit, meters.
    pub rms: f64,
    /// survivors / initial.
    pub inlier_ratio: f64,
}

/// Estimate the Sim(3) carrying chunk-j coordinates into the chunk-i frame
/// from pixel-wise point correspondences on the shared frames.
///
/// Confidence-weighted (weight = min of the two confidences), with
/// iterative trimming: fit, drop the worst decile of residuals, refit, at
/// most `TRIM_ROUNDS` times.
pub fn align_chunks(
    pred_i: &ChunkPrediction,
    pred_j: &ChunkPrediction,
    overlap_frames: &[usize],
    conf_floor: f64,
) -> Result<(Sim3, AlignStats)> {
    if overlap_frames.is_empty() {
        return Err(CoreError::input("empty overlap".to_string()));
    }

    let mut src: Vec<Vec3> = Vec::new();
    let mut dst: Vec<Vec3> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for &f in overlap_frames {
        let fi = pred_i
            .frame(f)
            .ok_or_else(|| CoreError::input(format!("frame {f} missing from first chunk")))?;
        let fj = pred_j
            .frame(f)
            .ok_or_else(|| CoreError::input(format!("frame {f} missing from second chunk")))?;
        let (h, w) = (fi.points.h(), fi.points.w());
        if fj.points.h() != h || fj.points.w() != w {
            return Err(CoreError::shape("point map sizes disagree across chunks".to_string()));
        }
        for y in 0..h {
            for x in 0..w {
                let ci = fi.point_conf.get(y, x);
                let cj = fj.point_conf.get(y, x);
                if ci < conf_floor || cj < conf_floor {
                    continue;
                }
                dst.push(fi.points.get(y, x));
                src.push(fj.points.get(y, x));
                weights.push(ci.min(cj));
            }
        }
    }

    let initial = src.len();
    if initial < MIN_CORRESPONDENCES {
        return Err(CoreError::alignment(format!(
            "{initial} correspondences above confidence floor (need {MIN_CORRESPONDENCES})"
        )));
    }

    let mut keep: Vec<usize> = (0..initial).collect();
    let mut transform = fit(&src, &dst, &weights, &keep)?;
    for _ in 0..TRIM_ROUNDS {
        let residuals: Vec<f64> = par::map_into_vec(&keep, |&idx| {
            vec3::dist(dst[idx], transform.apply(src[idx]))
        });
        // Nothing left to trim once the fit is numerically exact.
        if residuals.iter().fold(0.0f64, |m, &r| m.max(r)) < 1e-9 {
            break;
        }
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by(|&a, &b| {
            residuals[a].partial_cmp(&residuals[b]).unwrap().then(keep[a].cmp(&keep[b]))
        });
        let retain = ((keep.len() as f64 * TRIM_KEEP).ceil() as usize).max(MIN_CORRESPONDENCES);
        if retain >= keep.len() {
            break;
        }
        keep = order[..retain].iter().map(|&o| keep[o]).collect();
        keep.sort_unstable();
        if keep.len() < MIN_CORRESPONDENCES {
            return Err(CoreError::alignment(format!(
                "{} correspondences survived trimming (need {MIN_CORRESPONDENCES})",
                keep.len()
            )));
        }
        transform = fit(&src, &dst, &weights, &keep)?;
    }

    let mut sq_sum = 0.0;
    let mut w_sum = 0.0;
    for &idx in &keep {
        let r = vec3::dist(dst[idx], transform.apply(src[idx]));
        sq_sum += weights[idx] * r * r;
        w_sum += weights[idx];
    }
    let stats = AlignStats {
        initial,
        survivors: keep.len(),
        rms: (sq_sum / w_sum.max(f64::MIN_POSITIVE)).sqrt(),
        inlier_ratio: keep.len() as f64 / initial as f64,
    };
    Ok((transform, stats))
}

fn fit(src: &[Vec3], dst: &[Vec3], weights: &[f64], keep: &[usize]) -> Result<Sim3> {
    let s: Vec<Vec3> = keep.iter().map(|&i| src[i]).collect();
    let d: Vec<Vec3> = keep.iter().map(|&i| dst[i]).collect();
    let w: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
    umeyama(&s, &d, &w, true)
}

/// Compose adjacent pairwise transforms into absolute chunk transforms:
/// S_1 = identity, S_k = S_{k-1} * T_{k-1,k}.
pub fn chain_chunks(pairwise: &[Sim3]) -> Vec<Sim3> {
    let mut out = Vec::with_capacity(pairwise.len() + 1);
    out.push(Sim3::identity());
    for t in pairwise {
        let last = out.last().expect("nonempty");
        out.push(last.compose(t));
    }
    out
}
