//! Linear influence games over binary actions.
//!
//! Player `i` receives payoff `x_i * (w_i . x_-i - b_i)`. A joint action is a
//! pure-strategy Nash equilibrium when every player's action agrees in sign
//! with its influence, with ties counting as best responses for both actions.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest player count accepted by exhaustive scans over `{-1,+1}^n`.
pub const ENUMERATION_CAP: usize = 25;

/// Default tolerance for equilibrium membership with real-valued weights.
pub const DEFAULT_TOL: f64 = 1e-9;

pub(crate) fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::Capacity { what, size, cap })
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn action_of(index: u64, player: usize) -> f64 {
    if (index >> player) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// A joint action `x in {-1,+1}^n`.
///
/// Canonically encoded as an `n`-bit integer: bit `i` is set iff player `i`
/// plays `+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction(Vec<i8>);

impl JointAction {
    pub fn new(actions: Vec<i8>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Argument(
                "joint action needs at least one player".into(),
            ));
        }
        if let Some(bad) = actions.iter().find(|&&a| a != 1 && a != -1) {
            return Err(Error::Argument(format!("action {bad} is not -1 or +1")));
        }
        Ok(Self(actions))
    }

    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Argument(format!("player count {n} out of range")));
        }
        if index >> n != 0 {
            return Err(Error::Argument(format!(
                "index {index} needs more than {n} bits"
            )));
        }
        Ok(Self(
            (0..n)
                .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
                .collect(),
        ))
    }

    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == 1)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, player: usize) -> i8 {
        self.0[player]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

/// Parameters `(w_i, b_i)` of one player, with the diagonal slot removed.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerRow {
    pub w: Vec<f64>,
    pub b: f64,
}

impl PlayerRow {
    /// `w . y - b`, where `y` already excludes the player itself.
    pub fn influence(&self, y: &[f64]) -> f64 {
        self.w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() - self.b
    }

    pub fn is_zero(&self) -> bool {
        self.b == 0.0 && self.w.iter().all(|&w| w == 0.0)
    }
}

/// An influence game `G = (W, b)` with `diag(W) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceGame {
    n: usize,
    /// Row-major `n x n`; entry `(i, j)` is the influence of `j` on `i`.
    weights: Vec<f64>,
    thresholds: Vec<f64>,
}

impl InfluenceGame {
    pub fn new(n: usize, weights: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("a game needs at least one player".into()));
        }
        check_dim(n * n, weights.len())?;
        check_dim(n, thresholds.len())?;
        if weights.iter().chain(&thresholds).any(|v| !v.is_finite()) {
            return Err(Error::Argument("game parameters must be finite".into()));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::Argument(format!(
                    "self-influence w[{i}][{i}] must be zero"
                )));
            }
        }
        Ok(Self {
            n,
            weights,
            thresholds,
        })
    }

    /// Builds a game from full `n x n` rows; the diagonal must be zero.
    pub fn from_rows(rows: &[Vec<f64>], thresholds: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let mut weights = Vec::with_capacity(n * n);
        for row in rows {
            check_dim(n, row.len())?;
            weights.extend_from_slice(row);
        }
        Self::new(n, weights, thresholds)
    }

    /// The trivial game `W = 0, b = 0`, where every joint action is stable.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
            thresholds: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn set_weight(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j && value != 0.0 {
            return Err(Error::Argument("cannot set a diagonal weight".into()));
        }
        if !value.is_finite() {
            return Err(Error::Argument("weights must be finite".into()));
        }
        self.weights[i * self.n + j] = value;
        Ok(())
    }

    pub fn set_threshold(&mut self, i: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Argument("thresholds must be finite".into()));
        }
        self.thresholds[i] = value;
        Ok(())
    }

    pub fn weight_row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn row(&self, i: usize) -> PlayerRow {
        let w = self
            .weight_row(i)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &w)| w)
            .collect();
        PlayerRow {
            w,
            b: self.thresholds[i],
        }
    }

    /// `||W||_1` over off-diagonal entries.
    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// A player is absolutely indifferent when `(w_i, b_i) = 0`.
    pub fn is_absolutely_indifferent(&self, i: usize) -> bool {
        self.thresholds[i] == 0.0 && self.weight_row(i).iter().all(|&w| w == 0.0)
    }

    /// `f_i(x_-i) = w_i . x_-i - b_i` for a joint action given as `+-1.0`.
    #[inline]
    pub fn influence(&self, i: usize, x: &[f64]) -> f64 {
        self.weight_row(i)
            .iter()
            .zip(x)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            - self.thresholds[i]
    }

    #[inline]
    fn index_is_equilibrium(&self, index: u64, x: &mut [f64], tol: f64) -> bool {
        for (j, slot) in x.iter_mut().enumerate() {
            *slot = action_of(index, j);
        }
        (0..self.n).all(|i| x[i] * self.influence(i, x) >= -tol)
    }
}

/// Returns true iff `x_i (w_i . x_-i - b_i) >= -tol` for every player.
pub fn is_equilibrium(game: &InfluenceGame, x: &JointAction, tol: f64) -> Result<bool> {
    check_dim(game.n, x.len())?;
    if !(tol >= 0.0) {
        return Err(Error::Argument(format!("tolerance {tol} must be >= 0")));
    }
    let xs: Vec<f64> = x.as_slice().iter().map(|&a| f64::from(a)).collect();
    Ok((0..game.n).all(|i| xs[i] * game.influence(i, &xs) >= -tol))
}

/// The pure-strategy Nash equilibria of a game, or the defining set of a
/// general game. Members are sorted joint-action indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquilibriaSet {
    n: usize,
    members: Vec<u64>,
}

impl EquilibriaSet {
    pub fn new(n: usize, mut members: Vec<u64>) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Argument(format!("player count {n} out of range")));
        }
        if let Some(bad) = members.iter().find(|&&m| m >> n != 0) {
            return Err(Error::Argument(format!(
                "joint action index {bad} out of range for n={n}"
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { n, members })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            members: Vec::new(),
        }
    }

    /// Every joint action; capped like any other exhaustive scan.
    pub fn full(n: usize) -> Result<Self> {
        check_cap("full equilibria set", n, ENUMERATION_CAP)?;
        Ok(Self {
            n,
            members: (0..1u64 << n).collect(),
        })
    }

    pub fn from_actions<'a>(
        n: usize,
        actions: impl IntoIterator<Item = &'a JointAction>,
    ) -> Result<Self> {
        let mut members = Vec::new();
        for a in actions {
            check_dim(n, a.len())?;
            members.push(a.index());
        }
        Self::new(n, members)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn contains(&self, index: u64) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn contains_action(&self, x: &JointAction) -> bool {
        x.len() == self.n && self.contains(x.index())
    }

    /// Number of joint actions `2^n` as a float; exact for `n <= 53`.
    pub fn space_size(&self) -> f64 {
        (self.n as f64).exp2()
    }

    /// `|NE| / 2^n`.
    pub fn proportion(&self) -> f64 {
        self.members.len() as f64 / self.space_size()
    }

    /// Trivial sets are empty or cover every joint action.
    pub fn is_trivial(&self) -> bool {
        self.members.is_empty() || self.proportion() == 1.0
    }

    pub fn intersection_len(&self, other: &EquilibriaSet) -> usize {
        let (mut a, mut b, mut count) = (0, 0, 0);
        while a < self.members.len() && b < other.members.len() {
            match self.members[a].cmp(&other.members[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        count
    }

    pub fn actions(&self) -> impl Iterator<Item = JointAction> + '_ {
        self.members
            .iter()
            .map(move |&m| JointAction::from_index(m, self.n).expect("validated index"))
    }
}

/// Scans all `2^n` joint actions and keeps the equilibria.
pub fn enumerate_equilibria(game: &InfluenceGame, tol: f64) -> Result<EquilibriaSet> {
    enumerate_equilibria_capped(game, tol, ENUMERATION_CAP)
}

pub fn enumerate_equilibria_capped(
    game: &InfluenceGame,
    tol: f64,
    cap: usize,
) -> Result<EquilibriaSet> {
    check_cap("equilibrium enumeration", game.n, cap.min(ENUMERATION_CAP))?;
    if !(tol >= 0.0) {
        return Err(Error::Argument(format!("tolerance {tol} must be >= 0")));
    }
    let mut x = vec![0.0; game.n];
    let members = (0..1u64 << game.n)
        .filter(|&idx| game.index_is_equilibrium(idx, &mut x, tol))
        .collect();
    Ok(EquilibriaSet { n: game.n, members })
}

/// `pi(G) = |NE(G)| / 2^n`, by exhaustive scan with the default tolerance.
pub fn true_proportion(game: &InfluenceGame) -> Result<f64> {
    Ok(enumerate_equilibria(game, DEFAULT_TOL)?.proportion())
}

/// Counts hypercube vertices `y in {-1,+1}^d` with `|w . y - b| <= tol`.
pub fn hyperplane_vertex_count(w: &[f64], b: f64, tol: f64) -> Result<u64> {
    let d = w.len();
    check_cap("hyperplane vertex count", d, ENUMERATION_CAP)?;
    let count = (0..1u64 << d)
        .filter(|&idx| {
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(j, w)| w * action_of(idx, j))
                .sum();
            (s - b).abs() <= tol
        })
        .count();
    Ok(count as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coordination() -> InfluenceGame {
        InfluenceGame::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 0.0]).unwrap()
    }

    /// The three-player chain with `w21 = 1/2`, `w32 = 1`.
    fn chain3() -> InfluenceGame {
        let mut g = InfluenceGame::zeros(3);
        g.set_weight(1, 0, 0.5).unwrap();
        g.set_weight(2, 1, 1.0).unwrap();
        g
    }

    fn ja(v: &[i8]) -> JointAction {
        JointAction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn coordination_membership() {
        let g = coordination();
        assert!(is_equilibrium(&g, &ja(&[1, 1]), 0.0).unwrap());
        assert!(!is_equilibrium(&g, &ja(&[1, -1]), 0.0).unwrap());
    }

    #[test]
    fn zero_game_everything_is_stable() {
        let g = InfluenceGame::zeros(3);
        for idx in 0..8 {
            assert!(is_equilibrium(&g, &JointAction::from_index(idx, 3).unwrap(), 0.0).unwrap());
        }
        assert_eq!(enumerate_equilibria(&g, 0.0).unwrap().len(), 8);
        assert_eq!(true_proportion(&g).unwrap(), 1.0);
    }

    #[test]
    fn chain_has_two_consensus_equilibria() {
        let ne = enumerate_equilibria(&chain3(), 0.0).unwrap();
        let all_minus = ja(&[-1, -1, -1]).index();
        let all_plus = ja(&[1, 1, 1]).index();
        assert_eq!(ne.members(), &[all_minus, all_plus]);
        assert_eq!(true_proportion(&chain3()).unwrap(), 0.25);
        assert_eq!(true_proportion(&coordination()).unwrap(), 0.5);
    }

    #[test]
    fn dimension_and_capacity_errors() {
        let g = coordination();
        assert!(matches!(
            is_equilibrium(&g, &ja(&[1, 1, 1]), 0.0),
            Err(Error::Dimension { .. })
        ));
        let big = InfluenceGame::zeros(26);
        assert!(matches!(
            enumerate_equilibria(&big, 0.0),
            Err(Error::Capacity { .. })
        ));
        assert!(hyperplane_vertex_count(&[1.0; 26], 0.0, 0.0).is_err());
    }

    #[test]
    fn diagonal_and_finiteness_enforced() {
        assert!(InfluenceGame::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0; 2]).is_err());
        assert!(InfluenceGame::new(1, vec![0.0], vec![f64::NAN]).is_err());
        assert!(JointAction::new(vec![1, 0]).is_err());
    }

    #[test]
    fn index_encoding() {
        let x = ja(&[1, -1, 1]);
        assert_eq!(x.index(), 0b101);
        assert_eq!(JointAction::from_index(0b101, 3).unwrap(), x);
        assert!(JointAction::from_index(8, 3).is_err());
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(hyperplane_vertex_count(&[1.0, 1.0], 0.0, 0.0).unwrap(), 2);
        assert_eq!(hyperplane_vertex_count(&[1.0, 2.0], 0.0, 0.0).unwrap(), 0);
        assert_eq!(
            hyperplane_vertex_count(&[1.0, 2.0, 3.0], 0.0, 0.0).unwrap(),
            2
        );
    }

    #[test]
    fn pure_bias_game_has_unique_equilibrium() {
        let g = InfluenceGame::new(3, vec![0.0; 9], vec![1.0, -2.0, 0.5]).unwrap();
        let ne = enumerate_equilibria(&g, 0.0).unwrap();
        assert_eq!(ne.len(), 1);
        assert_eq!(ne.actions().next().unwrap(), ja(&[-1, 1, -1]));
        assert_eq!(ne.proportion(), 0.125);
    }

    #[test]
    fn set_operations() {
        let a = EquilibriaSet::new(2, vec![3, 0, 3]).unwrap();
        let b = EquilibriaSet::new(2, vec![0, 1]).unwrap();
        assert_eq!(a.members(), &[0, 3]);
        assert_eq!(a.intersection_len(&b), 1);
        assert!(EquilibriaSet::new(2, vec![4]).is_err());
        assert!(EquilibriaSet::empty(2).is_trivial());
        assert!(EquilibriaSet::full(2).unwrap().is_trivial());
        assert!(!a.is_trivial());
    }
}
