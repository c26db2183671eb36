//! Retrieval descriptor: pooled frame intensities.

use crate::backbone::Image;

/// Mean-pool the intensity channel onto an 8x8 grid, mean-center, and
/// L2-normalize. A constant frame yields the zero vector.
pub fn descriptor(frame: &Image) -> [f64; 64] {
    let (h, w) = (frame.h(), frame.w());
    let mut cells = [0.0f64; 64];
    let mut counts = [0usize; 64];
    for y in 0..h {
        for x in 0..w {
            let cy = (y * 8 / h).min(7);
            let cx = (x * 8 / w).min(7);
            cells[cy * 8 + cx] += frame.get(0, y, x);
            counts[cy * 8 + cx] += 1;
        }
    }
    for (c, n) in cells.iter_mut().zip(counts) {
        if n > 0 {
            *c /= n as f64;
        }
    }
    let mean: f64 = cells.iter().sum::<f64>() / 64.0;
    for c in cells.iter_mut() {
        *c -= mean;
    }
    let norm: f64 = cells.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in cells.iter_mut() {
            *c /= norm;
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_image(seed: u64) -> Image {
        let mut r = rng::stream(seed, "desc.image");
        let mut img = Image::zeros(24, 32);
        for y in 0..24 {
            for x in 0..32 {
                img.set(0, y, x, r.random_range(0.0..1.0));
            }
        }
        img
    }

    fn cosine(a: &[f64; 64], b: &[f64; 64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn identical_frames_have_similarity_one() {
        let img = random_image(1);
        let d1 = descriptor(&img);
        let d2 = descriptor(&img);
        assert!((cosine(&d1, &d2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_frame_is_anticorrelated() {
        let img = random_image(2);
        let mut inv = Image::zeros(24, 32);
        for y in 0..24 {
            for x in 0..32 {
                inv.set(0, y, x, 1.0 - img.get(0, y, x));
            }
        }
        let sim = cosine(&descriptor(&img), &descriptor(&inv));
        assert!(sim <= 0.0, "similarity {sim}");
    }

    #[test]
    fn descriptor_is_unit_norm() {
        let d = descriptor(&random_image(3));
        let n: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_frame_gives_zero_vector() {
        let mut img = Image::zeros(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                img.set(0, y, x, 0.7);
            }
        }
        let d = descriptor(&img);
        assert!(d.iter().all(|&v| v == 0.0));
    }
}
