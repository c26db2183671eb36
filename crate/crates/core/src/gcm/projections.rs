//! Query/key/value projections, token-wise learning rates, and the gate.

use super::TokenBlock;
use crate::error::{CoreError, Result};
use crate::numkit::{softplus, Matrix};

/// Outer-loop parameters of one GCM module.
#[derive(Debug, Clone, PartialEq)]
pub struct GcmProjections {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    /// Output projection applied to the concatenated head outputs.
    pub wo: Matrix,
    /// Learning-rate predictor weights (length d) and bias.
    pub lr_w: Vec<f64>,
    pub lr_b: f64,
    /// Gate vector, length d.
    pub alpha: Vec<f64>,
}

impl GcmProjections {
    pub fn d(&self) -> usize {
        self.wq.rows()
    }
}

/// Per-head token views: M tokens, nh heads, hd values per head.
#[derive(Debug, Clone, PartialEq)]
pub struct Headed {
    m: usize,
    nh: usize,
    hd: usize,
    data: Vec<f64>,
}

impl Headed {
    pub fn from_flat(m: usize, nh: usize, hd: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * nh * hd {
            return Err(CoreError::shape(format!(
                "headed block {}x{}x{} needs {} values, got {}",
                m,
                nh,
                hd,
                m * nh * hd,
                data.len()
            )));
        }
        Ok(Headed { m, nh, hd, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nh(&self) -> usize {
        self.nh
    }

    pub fn hd(&self) -> usize {
        self.hd
    }

    /// Slice of head `h` of token `i`.
    #[inline]
    pub fn token_head(&self, i: usize, h: usize) -> &[f64] {
        let base = (i * self.nh + h) * self.hd;
        &self.data[base..base + self.hd]
    }
}

/// Projected query/key/value blocks.
#[derive(Debug, Clone)]
pub struct Qkv {
    pub q: Headed,
    pub k: Headed,
    pub v: Headed,
}

fn project(w: &Matrix, x: &TokenBlock, nh: usize) -> Result<Headed> {
    // Row i of the result is W * x_i, i.e. X * W^T, then split per head.
    let projected = x.tokens().matmul(&w.transpose())?;
    Headed::from_flat(x.m(), nh, w.rows() / nh, projected.into_data())
}

/// Project a token block into multi-head query, key, and value.
pub fn project_qkv(p: &GcmProjections, x: &TokenBlock, nh: usize) -> Result<Qkv> {
    if x.d() != p.d() {
        return Err(CoreError::shape(format!(
            "token dimension {} != projection dimension {}",
            x.d(),
            p.d()
        )));
    }
    if p.d() % nh != 0 {
        return Err(CoreError::shape(format!("dimension {} not divisible by {} heads", p.d(), nh)));
    }
    Ok(Qkv {
        q: project(&p.wq, x, nh)?,
        k: project(&p.wk, x, nh)?,
        v: project(&p.wv, x, nh)?,
    })
}

/// Token-wise learning rates: eta_i = base_lr * softplus(x_i . lr_w + lr_b).
///
/// Strictly positive for positive base_lr; linear in base_lr.
pub fn predict_lr(p: &GcmProjections, x: &TokenBlock, base_lr: f64) -> Result<Vec<f64>> {
    if x.d() != p.lr_w.len() {
        return Err(CoreError::shape(format!(
            "token dimension {} != lr predictor dimension {}",
            x.d(),
            p.lr_w.len()
        )));
    }
    let mut out = Vec::with_capacity(x.m());
    for i in 0..x.m() {
        let row = x.tokens().row(i);
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(&p.lr_w) {
            acc += a * b;
        }
        out.push(base_lr * softplus(acc + p.lr_b));
    }
    Ok(out)
}
