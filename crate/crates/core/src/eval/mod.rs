//! Trajectory and reconstruction metrics.

mod cloud;
mod kdtree;
mod report;
mod trajectory;

pub use cloud::{chamfer, precision_recall_f1, threshold_preset};
pub use kdtree::{build_kdtree, nn_dist, KdTree};
pub use report::{MetricsReport, ReportParams};
pub use trajectory::{align_trajectory, ate, ate_unaligned, rre_rte, FramePose, Trajectory};
