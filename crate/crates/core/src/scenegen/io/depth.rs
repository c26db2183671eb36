//! Binary per-frame depth archive.
//!
//! Layout, little-endian: magic "SCALRDA1", u32 version, u64 frame count,
//! u64 height, u64 width, then frames x height x width f64 raw bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::backbone::Grid;
use crate::error::{CoreError, Result};

const MAGIC: &[u8; 8] = b"SCALRDA1";

pub fn write_depth_archive(path: &Path, frames: &[Grid]) -> Result<()> {
    if frames.is_empty() {
        return Err(CoreError::input("cannot write an empty depth archive".to_string()));
    }
    let (h, w) = (frames[0].h(), frames[0].w());
    if frames.iter().any(|f| f.h() != h || f.w() != w) {
        return Err(CoreError::shape("depth frames must share one size".to_string()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&1u32.to_le_bytes())?;
    out.write_all(&(frames.len() as u64).to_le_bytes())?;
    out.write_all(&(h as u64).to_le_bytes())?;
    out.write_all(&(w as u64).to_le_bytes())?;
    for f in frames {
        for v in f.data() {
            out.write_all(&v.to_bits().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_depth_archive(path: &Path) -> Result<Vec<Grid>> {
    let mut r = BufReader::new(File::open(path)?);
    fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    let magic = take::<8>(&mut r)?;
    if &magic != MAGIC {
        return Err(CoreError::parse(1, "bad depth archive magic"));
    }
    let version = u32::from_le_bytes(take::<4>(&mut r)?);
    if version != 1 {
        return Err(CoreError::parse(1, format!("unsupported depth archive version {version}")));
    }
    let frames = u64::from_le_bytes(take::<8>(&mut r)?) as usize;
    let h = u64::from_le_bytes(take::<8>(&mut r)?) as usize;
    let w = u64::from_le_bytes(take::<8>(&mut r)?) as usize;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let mut data = Vec::with_capacity(h * w);
        for _ in 0..h * w {
            data.push(f64::from_bits(u64::from_le_bytes(take::<8>(&mut r)?)));
        }
        out.push(Grid::from_vec(h, w, data)?);
    }
    Ok(out)
}
