//! TUM trajectory text format: `timestamp tx ty tz qx qy qz qw` per line,
//! `#` comments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::eval::{FramePose, Trajectory};
use crate::numkit::Quaternion;

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# timestamp tx ty tz qx qy qz qw")?;
    for f in traj.frames() {
        writeln!(
            w,
            "{} {} {} {} {} {} {} {}",
            f.timestamp,
            f.position[0],
            f.position[1],
            f.position[2],
            f.rotation.x,
            f.rotation.y,
            f.rotation.z,
            f.rotation.w
        )?;
    }
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let reader = BufReader::new(File::open(path)?);
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(CoreError::parse(
                line_no,
                format!("expected 8 fields (timestamp tx ty tz qx qy qz qw), got {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 8];
        for (v, raw) in values.iter_mut().zip(&fields) {
            *v = raw
                .parse()
                .map_err(|_| CoreError::parse(line_no, format!("bad float '{raw}'")))?;
        }
        frames.push(FramePose {
            timestamp: values[0],
            position: [values[1], values[2], values[3]],
            rotation: Quaternion::new(values[7], values[4], values[5], values[6]),
        });
    }
    Trajectory::new(frames)
}
