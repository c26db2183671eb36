//! File formats: TUM trajectories, PLY point clouds, key-value configs,
//! binary depth archives, and JSON metric reports.
//!
//! Floats in text files print in Rust's shortest round-trip form, so text
//! round-trips are value-exact; binary formats are bit-exact.

mod depth;
mod kv;
mod ply;
mod tum;

pub use depth::{read_depth_archive, write_depth_archive};
pub use kv::{read_config, write_config};
pub use ply::{read_cloud, write_cloud};
pub use tum::{read_trajectory, write_trajectory};

use std::path::Path;

use crate::error::Result;
use crate::eval::MetricsReport;

pub fn write_report(path: &Path, report: &MetricsReport) -> Result<()> {
    std::fs::write(path, report.to_json()?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    MetricsReport::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let mut r = MetricsReport::empty("sim3");
        r.f1 = Some(0.921);
        write_report(&path, &r).unwrap();
        assert_eq!(read_report(&path).unwrap(), r);
    }
}
