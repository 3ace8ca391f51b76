use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::{action_of, JointAction};

/// `m` observed joint actions over `n` binary players.
///
/// Samples are stored as joint-action indices. The frequency view lists each
/// distinct action once, ordered by count (descending) then index (ascending).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointActionDataset {
    n: usize,
    samples: Vec<u64>,
    unique: Vec<(u64, usize)>,
}

impl JointActionDataset {
    pub fn from_indices(n: usize, samples: Vec<u64>) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Argument(format!("player count {n} out of range")));
        }
        if samples.is_empty() {
            return Err(Error::Argument("dataset needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|&&s| s >> n != 0) {
            return Err(Error::Argument(format!(
                "sample index {bad} out of range for n={n}"
            )));
        }
        let mut sorted = samples.clone();
        sorted.sort_unstable();
        let mut unique: Vec<(u64, usize)> = Vec::new();
        for s in sorted {
            match unique.last_mut() {
                Some((idx, count)) if *idx == s => *count += 1,
                _ => unique.push((s, 1)),
            }
        }
        unique.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(Self { n, samples, unique })
    }

    pub fn from_actions(n: usize, actions: &[JointAction]) -> Result<Self> {
        let mut samples = Vec::with_capacity(actions.len());
        for a in actions {
            check_dim(n, a.len())?;
            samples.push(a.index());
        }
        Self::from_indices(n, samples)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples `m`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[u64] {
        &self.samples
    }

    /// Distinct actions with counts, most frequent first.
    pub fn unique(&self) -> &[(u64, usize)] {
        &self.unique
    }

    pub fn action(&self, l: usize) -> JointAction {
        JointAction::from_index(self.samples[l], self.n).expect("validated index")
    }

    /// Samples as `+-1.0` rows, the layout the learners consume.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|&s| (0..self.n).map(|j| action_of(s, j)).collect())
            .collect()
    }

    /// Keeps the listed sample positions, in order.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        let samples = positions
            .iter()
            .map(|&p| {
                self.samples
                    .get(p)
                    .copied()
                    .ok_or_else(|| Error::Argument(format!("sample position {p} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(self.n, samples)
    }

    /// Restricts every sample to the listed players (in the given order).
    pub fn project(&self, players: &[usize]) -> Result<Self> {
        if let Some(&p) = players.iter().find(|&&p| p >= self.n) {
            return Err(Error::Argument(format!("player {p} out of range")));
        }
        let samples = self
            .samples
            .iter()
            .map(|&s| {
                players
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| (s >> p) & 1 == 1)
                    .fold(0u64, |acc, (k, _)| acc | (1 << k))
            })
            .collect();
        Self::from_indices(players.len(), samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_view_is_sorted() {
        let d = JointActionDataset::from_indices(2, vec![1, 3, 0, 3, 0, 3]).unwrap();
        assert_eq!(d.unique(), &[(3, 3), (0, 2), (1, 1)]);
        assert_eq!(d.len(), 6);
        assert_eq!(d.unique().iter().map(|u| u.1).sum::<usize>(), 6);
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        assert!(JointActionDataset::from_indices(2, vec![]).is_err());
        assert!(JointActionDataset::from_indices(2, vec![4]).is_err());
    }

    #[test]
    fn projection_keeps_selected_players() {
        // players (0,1,2) = (+1,-1,+1) -> project to (2,0) = (+1,+1)
        let d = JointActionDataset::from_indices(3, vec![0b101]).unwrap();
        let p = d.project(&[2, 0]).unwrap();
        assert_eq!(p.samples(), &[0b11]);
        assert_eq!(d.rows()[0], vec![1.0, -1.0, 1.0]);
    }
}
