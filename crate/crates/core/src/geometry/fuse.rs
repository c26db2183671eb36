//! Point-cloud fusion across chunks with overlap ownership and voxel
//! downsampling.

use std::collections::HashMap;

use super::sim3::Sim3;
use crate::backbone::ChunkPrediction;
use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;
use crate::numkit::{quat_to_rot, rot_to_quat, Quaternion};
use crate::par;

/// Which chunk contributes a frame living in several overlaps: the chunk
/// whose center index is nearest (ties to the lower chunk id).
pub fn frame_owner(ranges: &[(usize, usize)], frame_id: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, &(start, end)) in ranges.iter().enumerate() {
        if frame_id < start || frame_id > end {
            continue;
        }
        let center = (start + end) as f64 / 2.0;
        let dist = (frame_id as f64 - center).abs();
        match best {
            Some((_, d)) if dist >= d => {}
            _ => best = Some((idx, dist)),
        }
    }
    best.map(|(idx, _)| idx)
}

/// A camera pose (rotation + position) mapped through a Sim(3): the
/// position moves like a point, the orientation is premultiplied, the
/// scale does not touch the rotation.
pub fn transform_pose(s: &Sim3, rot: &Quaternion, trans: Vec3) -> Result<(Quaternion, Vec3)> {
    let r = s.rot().matmul(&quat_to_rot(rot))?;
    Ok((rot_to_quat(&r)?, s.apply(trans)))
}

/// Fuse chunk predictions into one global cloud.
///
/// Every frame is contributed by exactly one chunk (`frame_owner`); points
/// below `conf_floor` are dropped; `voxel` > 0 enables voxel-grid
/// downsampling with the centroid as representative. Points come out in a
/// deterministic order.
pub fn fuse(
    predictions: &[ChunkPrediction],
    transforms: &[Sim3],
    voxel: f64,
    conf_floor: f64,
) -> Result<Vec<Vec3>> {
    if predictions.len() != transforms.len() {
        return Err(CoreError::shape(format!(
            "{} chunks vs {} transforms",
            predictions.len(),
            transforms.len()
        )));
    }
    let ranges: Vec<(usize, usize)> = predictions.iter().map(|p| (p.start(), p.end())).collect();

    let per_chunk: Vec<Vec<Vec3>> = par::map_indices(predictions.len(), |c| {
        let pred = &predictions[c];
        let t = &transforms[c];
        let mut pts = Vec::new();
        for (frame_id, frame) in pred.iter() {
            if frame_owner(&ranges, frame_id) != Some(c) {
                continue;
            }
            let (h, w) = (frame.points.h(), frame.points.w());
            for y in 0..h {
                for x in 0..w {
                    if frame.point_conf.get(y, x) < conf_floor {
                        continue;
                    }
                    pts.push(t.apply(frame.points.get(y, x)));
                }
            }
        }
        pts
    });
    let cloud: Vec<Vec3> = per_chunk.into_iter().flatten().collect();

    if voxel <= 0.0 {
        return Ok(cloud);
    }

    // Voxel-grid downsample, centroid representative. Accumulation follows
    // insertion order; output order is first-seen voxel order.
    let mut sums: HashMap<(i64, i64, i64), (Vec3, usize)> = HashMap::new();
    let mut order: Vec<(i64, i64, i64)> = Vec::new();
    for p in &cloud {
        let key = (
            (p[0] / voxel).floor() as i64,
            (p[1] / voxel).floor() as i64,
            (p[2] / voxel).floor() as i64,
        );
        match sums.get_mut(&key) {
            Some((acc, count)) => {
                acc[0] += p[0];
                acc[1] += p[1];
                acc[2] += p[2];
                *count += 1;
            }
            None => {
                sums.insert(key, (*p, 1));
                order.push(key);
            }
        }
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let (acc, count) = &sums[&key];
            let n = *count as f64;
            [acc[0] / n, acc[1] / n, acc[2] / n]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::{FramePrediction, Grid, PointGrid};
    use crate::rng;
    use rand::Rng;

    fn chunk_with_points(start: usize, end: usize, seed: u64) -> ChunkPrediction {
        let mut r = rng::stream(seed, "fuse.chunk");
        let frames = (start..=end)
            .map(|_| {
                let mut points = PointGrid::zeros(2, 2);
                for y in 0..2 {
                    for x in 0..2 {
                        points.set(y, x, [
                            r.random_range(-1.0..1.0),
                            r.random_range(-1.0..1.0),
                            r.random_range(-1.0..1.0),
                        ]);
                    }
                }
                FramePrediction {
                    camera: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
                    depth: Grid::filled(2, 2, 1.0),
                    depth_conf: Grid::filled(2, 2, 1.0),
                    points,
                    point_conf: Grid::filled(2, 2, 1.0),
                }
            })
            .collect();
        ChunkPrediction::contiguous(start, frames)
    }

    #[test]
    fn owner_prefers_nearer_center() {
        // Chunks [1,60] and [31,90]: frame 40 is nearer the 30.5 center of
        // the first chunk than the 60.5 center of the second.
        let ranges = vec![(1, 60), (31, 90)];
        assert_eq!(frame_owner(&ranges, 40), Some(0));
        assert_eq!(frame_owner(&ranges, 50), Some(1));
        assert_eq!(frame_owner(&ranges, 10), Some(0));
        assert_eq!(frame_owner(&ranges, 70), Some(1));
        assert_eq!(frame_owner(&ranges, 95), None);
    }

    #[test]
    fn owner_tie_goes_to_lower_chunk() {
        let ranges = vec![(1, 10), (1, 10)];
        assert_eq!(frame_owner(&ranges, 5), Some(0));
    }

    #[test]
    fn single_chunk_identity_returns_input_cloud() {
        let c = chunk_with_points(1, 3, 1);
        let cloud = fuse(&[c.clone()], &[Sim3::identity()], 0.0, 0.5).unwrap();
        assert_eq!(cloud.len(), 3 * 4);
        assert_eq!(cloud[0], c.frames()[0].points.get(0, 0));
    }

    #[test]
    fn overlapping_frames_are_not_duplicated() {
        let a = chunk_with_points(1, 6, 2);
        let b = chunk_with_points(4, 9, 3);
        let cloud = fuse(
            &[a, b],
            &[Sim3::identity(), Sim3::identity()],
            0.0,
            0.5,
        )
        .unwrap();
        // 9 distinct frames, 4 points each; overlap frames appear once.
        assert_eq!(cloud.len(), 9 * 4);
    }

    #[test]
    fn low_confidence_points_dropped() {
        let mut c = chunk_with_points(1, 1, 4);
        c.frames_mut()[0].point_conf.set(0, 0, 0.1);
        let cloud = fuse(&[c], &[Sim3::identity()], 0.0, 0.5).unwrap();
        assert_eq!(cloud.len(), 3);
    }

    #[test]
    fn voxel_zero_disables_downsampling() {
        let c = chunk_with_points(1, 2, 5);
        let all = fuse(&[c.clone()], &[Sim3::identity()], 0.0, 0.5).unwrap();
        let coarse = fuse(&[c], &[Sim3::identity()], 10.0, 0.5).unwrap();
        assert!(coarse.len() < all.len());
        assert_eq!(all.len(), 8);
    }
}
