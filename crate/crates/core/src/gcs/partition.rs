//! Overlapping chunk partition of a frame sequence.

use crate::error::{CoreError, Result};

/// 1-based inclusive chunk ranges covering frames 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub n: usize,
    pub m: usize,
    pub o: usize,
    pub chunks: Vec<(usize, usize)>,
}

impl Partition {
    pub fn chunk_count(&self) -> usize {
        self.chunks.len()
    }

    /// Frames shared by adjacent chunks k and k+1.
    pub fn overlap_frames(&self, k: usize) -> Vec<usize> {
        let (_, end_k) = self.chunks[k];
        let (start_next, _) = self.chunks[k + 1];
        (start_next..=end_k).collect()
    }

    /// Center frame of chunk k (midpoint, rounded down).
    pub fn center(&self, k: usize) -> usize {
        let (s, e) = self.chunks[k];
        (s + e) / 2
    }

    pub fn ranges(&self) -> Vec<(usize, usize)> {
        self.chunks.clone()
    }
}

/// Chunk k covers frames [(k-1)(m-o)+1, (k-1)(m-o)+m]. The final chunk is
/// clamped to end at n with start max(1, n-m+1), widening its overlap
/// rather than shrinking below m.
pub fn partition(n: usize, m: usize, o: usize) -> Result<Partition> {
    if n < 1 {
        return Err(CoreError::input("frame count must be at least 1".to_string()));
    }
    if m < 1 {
        return Err(CoreError::config("chunk size must be at least 1".to_string()));
    }
    if o >= m {
        return Err(CoreError::config(format!("overlap {o} must be smaller than chunk size {m}")));
    }
    if o < 1 && m < n {
        return Err(CoreError::config("overlap must be at least 1".to_string()));
    }
    if m >= n {
        return Ok(Partition { n, m, o, chunks: vec![(1, n)] });
    }
    let stride = m - o;
    let mut chunks = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k * stride + 1;
        let end = start + m - 1;
        if end >= n {
            chunks.push((n + 1 - m, n));
            break;
        }
        chunks.push((start, end));
        k += 1;
    }
    Ok(Partition { n, m, o, chunks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn reference_case_yields_four_chunks() {
        let p = partition(150, 60, 30).unwrap();
        assert_eq!(p.chunks, vec![(1, 60), (31, 90), (61, 120), (91, 150)]);
    }

    #[test]
    fn single_chunk_when_m_covers_n() {
        let p = partition(60, 60, 30).unwrap();
        assert_eq!(p.chunks, vec![(1, 60)]);
        let p = partition(40, 60, 30).unwrap();
        assert_eq!(p.chunks, vec![(1, 40)]);
    }

    #[test]
    fn tail_is_clamped() {
        let p = partition(100, 60, 30).unwrap();
        assert_eq!(p.chunks, vec![(1, 60), (31, 90), (41, 100)]);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(matches!(partition(0, 10, 5), Err(CoreError::Input(_))));
        assert!(matches!(partition(100, 10, 10), Err(CoreError::Config(_))));
        assert!(matches!(partition(100, 10, 12), Err(CoreError::Config(_))));
        assert!(matches!(partition(100, 10, 0), Err(CoreError::Config(_))));
    }

    #[test]
    fn invariants_hold_over_random_triples() {
        let mut r = rng::stream(1, "partition.random");
        for trial in 0..1000 {
            let n = r.random_range(2..400usize);
            let m = r.random_range(2..=n.max(2));
            let o = r.random_range(1..m);
            let p = partition(n, m, o).unwrap();

            // Coverage of 1..=n.
            let mut covered = vec![false; n + 1];
            for &(s, e) in &p.chunks {
                assert!(s >= 1 && e <= n && s <= e, "trial {trial}");
                for f in s..=e {
                    covered[f] = true;
                }
            }
            assert!(covered[1..].iter().all(|&c| c), "trial {trial}: coverage hole");

            // Lengths: every chunk is exactly m unless n < m.
            for &(s, e) in &p.chunks {
                assert_eq!(e - s + 1, m.min(n), "trial {trial}");
            }

            // Overlap exactness except possibly the final pair.
            for (idx, w) in p.chunks.windows(2).enumerate() {
                let overlap = w[0].1 as i64 - w[1].0 as i64 + 1;
                if idx + 2 == p.chunks.len() {
                    assert!(overlap >= o as i64, "trial {trial}: tail overlap shrank");
                } else {
                    assert_eq!(overlap, o as i64, "trial {trial}");
                }
            }

            // Starts strictly increase.
            for w in p.chunks.windows(2) {
                assert!(w[1].0 > w[0].0, "trial {trial}");
            }
        }
    }
}
