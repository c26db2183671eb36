//! Linear patch embedding.

use super::{Backbone, Image};
use crate::error::{CoreError, Result};
use crate::gcm::TokenBlock;
use crate::numkit::Matrix;

/// Split a frame into patch x patch tiles (row-major over the tile grid),
/// flatten channel-major, and embed linearly to d-dimensional tokens.
pub fn patchify(bb: &Backbone, image: &Image) -> Result<TokenBlock> {
    let p = bb.config.patch;
    if image.h() % p != 0 || image.w() % p != 0 {
        return Err(CoreError::config(format!(
            "image {}x{} not divisible by patch {p}",
            image.h(),
            image.w()
        )));
    }
    if image.h() != bb.config.image_h || image.w() != bb.config.image_w {
        return Err(CoreError::shape(format!(
            "image {}x{} does not match configured {}x{}",
            image.h(),
            image.w(),
            bb.config.image_h,
            bb.config.image_w
        )));
    }
    let (gy, gx) = (image.h() / p, image.w() / p);
    let mut tokens = Matrix::zeros(gy * gx, bb.config.d);
    let mut patch_vec = vec![0.0; 3 * p * p];
    for py in 0..gy {
        for px in 0..gx {
            let mut idx = 0;
            for c in 0..3 {
                for dy in 0..p {
                    for dx in 0..p {
                        patch_vec[idx] = image.get(c, py * p + dy, px * p + dx);
                        idx += 1;
                    }
                }
            }
            let mut token = bb.embed.matvec(&patch_vec)?;
            for (t, b) in token.iter_mut().zip(&bb.embed_bias) {
                *t += b;
            }
            tokens.row_mut(py * gx + px).copy_from_slice(&token);
        }
    }
    TokenBlock::new(tokens)
}
