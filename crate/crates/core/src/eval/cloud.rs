//! Point-cloud reconstruction metrics.

use super::kdtree::{build_kdtree, nn_dist};
use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;
use crate::par;

fn mean_nn_dist(from: &[Vec3], to: &[Vec3]) -> Result<f64> {
    let tree = build_kdtree(to)?;
    let dists = par::map_into_vec(from, |q| nn_dist(&tree, *q));
    Ok(dists.iter().sum::<f64>() / from.len() as f64)
}

/// Sequential twin of the parallel distance batch, for the benches.
pub fn mean_nn_dist_seq(from: &[Vec3], to: &[Vec3]) -> Result<f64> {
    let tree = build_kdtree(to)?;
    let dists = par::map_into_vec_seq(from, |q| nn_dist(&tree, *q));
    Ok(dists.iter().sum::<f64>() / from.len() as f64)
}

/// Chamfer distance: the average of the two directed mean
/// nearest-neighbour distances. The predicted cloud must already be
/// aligned to the reference.
pub fn chamfer(p: &[Vec3], g: &[Vec3]) -> Result<f64> {
    if p.is_empty() || g.is_empty() {
        return Err(CoreError::input("chamfer needs two nonempty clouds".to_string()));
    }
    Ok((mean_nn_dist(p, g)? + mean_nn_dist(g, p)?) / 2.0)
}

/// Fraction-below-threshold precision/recall and their harmonic mean.
/// F1 is 0 when precision + recall is 0.
pub fn precision_recall_f1(p: &[Vec3], g: &[Vec3], d: f64) -> Result<(f64, f64, f64)> {
    if p.is_empty() || g.is_empty() {
        return Err(CoreError::input("precision/recall need nonempty clouds".to_string()));
    }
    if !(d > 0.0) {
        return Err(CoreError::input("threshold must be positive".to_string()));
    }
    let g_tree = build_kdtree(g)?;
    let p_tree = build_kdtree(p)?;
    let p_hits = par::map_into_vec(p, |q| usize::from(nn_dist(&g_tree, *q) < d));
    let g_hits = par::map_into_vec(g, |q| usize::from(nn_dist(&p_tree, *q) < d));
    let precision = p_hits.iter().sum::<usize>() as f64 / p.len() as f64;
    let recall = g_hits.iter().sum::<usize>() as f64 / g.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1))
}

/// Named distance-threshold presets (meters).
pub fn threshold_preset(name: &str) -> Option<f64> {
    match name {
        "eth3d" => Some(0.25),
        "vkitti" => Some(1.0),
        "spires" => Some(4.0),
        _ => None,
    }
}
