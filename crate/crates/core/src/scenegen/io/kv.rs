//! Flat `key = value` config files with `#` comments.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

pub fn write_config(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in pairs {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| CoreError::parse(line_no, "expected 'key = value'"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "# a comment\nchunk_size = 60\n\noverlap=30\n").unwrap();
        let cfg = read_config(&path).unwrap();
        assert_eq!(cfg.get("chunk_size").unwrap(), "60");
        assert_eq!(cfg.get("overlap").unwrap(), "30");
    }

    #[test]
    fn malformed_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "ok = 1\nnot a pair\n").unwrap();
        match read_config(&path) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
