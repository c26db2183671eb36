//! Exact nearest-neighbour search over a static 3D point set.

use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// Median-split kd-tree; ties in both coordinates and distances break
/// toward the lowest point index, matching a brute-force scan exactly.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
    root: usize,
}

pub fn build_kdtree(points: &[Vec3]) -> Result<KdTree> {
    if points.is_empty() {
        return Err(CoreError::input("cannot build a tree over an empty cloud".to_string()));
    }
    let mut tree = KdTree { points: points.to_vec(), nodes: Vec::with_capacity(points.len()), root: 0 };
    let mut indices: Vec<usize> = (0..points.len()).collect();
    let root = build(&mut tree, &mut indices, 0);
    tree.root = root;
    Ok(tree)
}

fn build(tree: &mut KdTree, indices: &mut [usize], depth: usize) -> usize {
    let axis = depth % 3;
    indices.sort_by(|&a, &b| {
        tree.points[a][axis]
            .partial_cmp(&tree.points[b][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mid = indices.len() / 2;
    let point = indices[mid];
    let node_idx = tree.nodes.len();
    tree.nodes.push(Node { point, axis, left: None, right: None });
    // Children are built after the parent so the parent index is stable.
    if mid > 0 {
        let mut left: Vec<usize> = indices[..mid].to_vec();
        let l = build(tree, &mut left, depth + 1);
        tree.nodes[node_idx].left = Some(l);
    }
    if mid + 1 < indices.len() {
        let mut right: Vec<usize> = indices[mid + 1..].to_vec();
        let r = build(tree, &mut right, depth + 1);
        tree.nodes[node_idx].right = Some(r);
    }
    node_idx
}

#[inline]
fn sq_dist(a: Vec3, b: Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact nearest neighbour: (point index, squared distance).
    pub fn nearest(&self, query: Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, query, &mut best);
        best
    }

    fn search(&self, node_idx: usize, query: Vec3, best: &mut (usize, f64)) {
        let node = &self.nodes[node_idx];
        let d2 = sq_dist(query, self.points[node.point]);
        if d2 < best.1 || (d2 == best.1 && node.point < best.0) {
            *best = (node.point, d2);
        }
        let delta = query[node.axis] - self.points[node.point][node.axis];
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.search(n, query, best);
        }
        // The far side may still hold an equal-distance lower index, so
        // the plane test must not prune on equality.
        if let Some(f) = far {
            if delta * delta <= best.1 {
                self.search(f, query, best);
            }
        }
    }
}

/// Distance from `query` to its exact nearest neighbour in the tree.
pub fn nn_dist(tree: &KdTree, query: Vec3) -> f64 {
    tree.nearest(query).1.sqrt()
}
