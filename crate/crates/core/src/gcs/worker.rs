//! Simulated worker bookkeeping: chunk assignment and synchronization
//! groups.

use crate::error::{CoreError, Result};

/// Chunk-to-worker assignment with an optional partition of the workers
/// into synchronization groups (gradients are summed within a group only;
/// the default is one group spanning every worker).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerGroup {
    pub worker_count: usize,
    /// assignment[chunk] = worker id.
    pub assignment: Vec<usize>,
    pub sync_groups: Vec<Vec<usize>>,
}

impl WorkerGroup {
    /// Contiguous block assignment: worker w owns chunks
    /// [w*ceil(k/n) .. ), reduction order ascending worker id coincides
    /// with ascending chunk id.
    pub fn blocked(chunk_count: usize, worker_count: usize) -> Result<Self> {
        if worker_count < 1 {
            return Err(CoreError::config("need at least one worker".to_string()));
        }
        let per = chunk_count.div_ceil(worker_count.min(chunk_count.max(1)));
        let assignment = (0..chunk_count).map(|c| (c / per.max(1)).min(worker_count - 1)).collect();
        let group = WorkerGroup {
            worker_count,
            assignment,
            sync_groups: vec![(0..worker_count).collect()],
        };
        group.validate(chunk_count)?;
        Ok(group)
    }

    pub fn with_assignment(assignment: Vec<usize>, worker_count: usize) -> Result<Self> {
        let group = WorkerGroup {
            worker_count,
            sync_groups: vec![(0..worker_count).collect()],
            assignment,
        };
        group.validate(group.assignment.len())?;
        Ok(group)
    }

    pub fn validate(&self, chunk_count: usize) -> Result<()> {
        if self.worker_count < 1 {
            return Err(CoreError::config("need at least one worker".to_string()));
        }
        if self.assignment.len() != chunk_count {
            return Err(CoreError::config(format!(
                "{} assignments for {} chunks",
                self.assignment.len(),
                chunk_count
            )));
        }
        if self.assignment.iter().any(|&w| w >= self.worker_count) {
            return Err(CoreError::config("assignment names an unknown worker".to_string()));
        }
        let mut seen = vec![false; self.worker_count];
        for group in &self.sync_groups {
            for &w in group {
                if w >= self.worker_count || seen[w] {
                    return Err(CoreError::config(
                        "sync groups must partition the workers".to_string(),
                    ));
                }
                seen[w] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(CoreError::config("every worker needs a sync group".to_string()));
        }
        Ok(())
    }

    /// Chunks owned by `worker`, ascending.
    pub fn chunks_of(&self, worker: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(c, &w)| (w == worker).then_some(c))
            .collect()
    }

    /// Chunks covered by one sync group, ascending.
    pub fn chunks_of_group(&self, group: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(c, &w)| group.contains(&w).then_some(c))
            .collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_assignment_is_contiguous_and_total() {
        let g = WorkerGroup::blocked(4, 2).unwrap();
        assert_eq!(g.assignment, vec![0, 0, 1, 1]);
        assert_eq!(g.chunks_of(0), vec![0, 1]);
        assert_eq!(g.chunks_of(1), vec![2, 3]);
    }

    #[test]
    fn more_workers_than_chunks() {
        let g = WorkerGroup::blocked(2, 4).unwrap();
        assert_eq!(g.assignment.len(), 2);
        g.validate(2).unwrap();
    }

    #[test]
    fn bad_groups_rejected() {
        let mut g = WorkerGroup::blocked(4, 2).unwrap();
        g.sync_groups = vec![vec![0]];
        assert!(g.validate(4).is_err());
        g.sync_groups = vec![vec![0, 0, 1]];
        assert!(g.validate(4).is_err());
    }
}
