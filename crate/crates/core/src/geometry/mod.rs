//! Sim(3) machinery: chunk alignment, loop closure, pose-graph refinement,
//! and point-cloud fusion.

mod align;
mod fuse;
mod loops;
mod pose_graph;
mod sim3;
mod umeyama;

pub use align::{align_chunks, chain_chunks, AlignStats};
pub use fuse::{frame_owner, fuse, transform_pose};
pub use loops::{detect_loops, LoopCandidate};
pub use pose_graph::{optimize_pose_graph, EdgeKind, PoseEdge, PoseGraph};
pub use sim3::{sim3_exp, sim3_log, Sim3};
pub use umeyama::umeyama;
