//! Binary weight snapshot container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "SCALRWB1"
//! seed    u64
//! ndims   u32, then ndims x u64
//! nblocks u32, then per block:
//!   name_len u32, name utf-8, count u64, count x f64 (raw bits)
//! ```
//!
//! Floats round-trip through `to_bits`/`from_bits`, so snapshots are
//! bit-exact including negative zeros.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::projections::GcmProjections;
use super::weights::FastWeights;
use super::GcmConfig;
use crate::error::{CoreError, Result};
use crate::numkit::Matrix;

const MAGIC: &[u8; 8] = b"SCALRWB1";

/// A named collection of flat f64 arrays with dimension metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub seed: u64,
    pub dims: Vec<u64>,
    pub blocks: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn block(&self, name: &str) -> Result<&[f64]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| CoreError::input(format!("snapshot block '{name}' missing")))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for d in &self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for (name, values) in &self.blocks {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(values.len() as u64).to_le_bytes())?;
            for v in values {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf)?;
            Ok(buf)
        }
        let magic = take::<8>(r)?;
        if &magic != MAGIC {
            return Err(CoreError::parse(1, "bad snapshot magic"));
        }
        let seed = u64::from_le_bytes(take::<8>(r)?);
        let ndims = u32::from_le_bytes(take::<4>(r)?) as usize;
        let mut dims = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            dims.push(u64::from_le_bytes(take::<8>(r)?));
        }
        let nblocks = u32::from_le_bytes(take::<4>(r)?) as usize;
        let mut blocks = Vec::with_capacity(nblocks);
        for _ in 0..nblocks {
            let name_len = u32::from_le_bytes(take::<4>(r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| CoreError::parse(1, "snapshot block name not utf-8"))?;
            let count = u64::from_le_bytes(take::<8>(r)?) as usize;
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                values.push(f64::from_bits(u64::from_le_bytes(take::<8>(r)?)));
            }
            blocks.push((name, values));
        }
        Ok(Snapshot { seed, dims, blocks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Snapshot::read_from(&mut r)
    }
}

/// Snapshot a GCM module (fast weights + projections + hyperparameters).
pub fn snapshot_gcm(config: &GcmConfig, weights: &FastWeights, proj: &GcmProjections) -> Snapshot {
    let mut blocks: Vec<(String, Vec<f64>)> = Vec::new();
    for (h, head) in weights.heads().iter().enumerate() {
        blocks.push((format!("w1.h{h}"), head.w1.data().to_vec()));
        blocks.push((format!("w2.h{h}"), head.w2.data().to_vec()));
        blocks.push((format!("w3.h{h}"), head.w3.data().to_vec()));
    }
    blocks.push(("wq".to_string(), proj.wq.data().to_vec()));
    blocks.push(("wk".to_string(), proj.wk.data().to_vec()));
    blocks.push(("wv".to_string(), proj.wv.data().to_vec()));
    blocks.push(("wo".to_string(), proj.wo.data().to_vec()));
    blocks.push(("lr_w".to_string(), proj.lr_w.clone()));
    blocks.push(("lr_b".to_string(), vec![proj.lr_b]));
    blocks.push(("alpha".to_string(), proj.alpha.clone()));
    blocks.push(("base_lr".to_string(), vec![config.base_lr]));
    blocks.push(("gate_init".to_string(), vec![config.gate_init]));
    Snapshot {
        seed: config.seed,
        dims: vec![config.d as u64, config.nh as u64, config.k as u64],
        blocks,
    }
}

/// Rebuild a GCM module from a snapshot.
pub fn restore_gcm(snap: &Snapshot) -> Result<(GcmConfig, FastWeights, GcmProjections)> {
    if snap.dims.len() != 3 {
        return Err(CoreError::parse(1, "gcm snapshot needs dims [d, nh, k]"));
    }
    let (d, nh, k) = (snap.dims[0] as usize, snap.dims[1] as usize, snap.dims[2] as usize);
    let config = GcmConfig {
        d,
        nh,
        k,
        base_lr: snap.block("base_lr")?[0],
        gate_init: snap.block("gate_init")?[0],
        seed: snap.seed,
    };
    config.validate()?;
    let hd = config.head_dim();
    let mut weights = FastWeights::zeros(nh, hd, k);
    for h in 0..nh {
        let w1 = Matrix::from_vec(hd * k, hd, snap.block(&format!("w1.h{h}"))?.to_vec())?;
        let w2 = Matrix::from_vec(hd, hd * k, snap.block(&format!("w2.h{h}"))?.to_vec())?;
        let w3 = Matrix::from_vec(hd * k, hd, snap.block(&format!("w3.h{h}"))?.to_vec())?;
        let head = weights.head_mut(h);
        head.w1 = w1;
        head.w2 = w2;
        head.w3 = w3;
    }
    let proj = GcmProjections {
        wq: Matrix::from_vec(d, d, snap.block("wq")?.to_vec())?,
        wk: Matrix::from_vec(d, d, snap.block("wk")?.to_vec())?,
        wv: Matrix::from_vec(d, d, snap.block("wv")?.to_vec())?,
        wo: Matrix::from_vec(d, d, snap.block("wo")?.to_vec())?,
        lr_w: snap.block("lr_w")?.to_vec(),
        lr_b: snap.block("lr_b")?[0],
        alpha: snap.block("alpha")?.to_vec(),
    };
    Ok((config, weights, proj))
}
