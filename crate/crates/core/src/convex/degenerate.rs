//! Detection and repair of absolutely indifferent players.

use super::{ConvexMethod, TrainResult};
use crate::dataset::JointActionDataset;
use crate::error::{Error, Result};
use crate::game::InfluenceGame;

/// Exact balance test under which the independent hinge and logistic losses
/// are minimized by `(w_i, b_i) = 0`: `x_i = +1` in exactly half the samples,
/// and for every `j`, `x_i x_j = +1` in exactly half the samples.
///
/// Both independent losses share the condition, so `method` does not change
/// the answer. Odd `m` is never balanced.
pub fn detect_degenerate(
    dataset: &JointActionDataset,
    player: usize,
    _method: ConvexMethod,
) -> Result<bool> {
    let n = dataset.n();
    if player >= n {
        return Err(Error::Argument(format!(
            "player {player} out of range for n={n}"
        )));
    }
    let m = dataset.len();
    if m % 2 == 1 {
        return Ok(false);
    }
    let half = m / 2;
    let bit = |s: u64, j: usize| (s >> j) & 1;
    let plus = dataset
        .samples()
        .iter()
        .filter(|&&s| bit(s, player) == 1)
        .count();
    if plus != half {
        return Ok(false);
    }
    Ok((0..n).filter(|&j| j != player).all(|j| {
        dataset
            .samples()
            .iter()
            .filter(|&&s| bit(s, player) == bit(s, j))
            .count()
            == half
    }))
}

/// Gives every flagged all-zero player a pure bias: `b_i = +1` when the
/// player mostly played `-1`, otherwise `b_i = -1` (ties included).
pub fn fix_degenerate(result: &TrainResult, dataset: &JointActionDataset) -> Result<InfluenceGame> {
    let mut game = result.game.clone();
    crate::error::check_dim(game.n(), dataset.n())?;
    for (i, &flagged) in result.per_player_degenerate.iter().enumerate() {
        if !flagged || !game.is_absolutely_indifferent(i) {
            continue;
        }
        let sum: i64 = dataset
            .samples()
            .iter()
            .map(|&s| if (s >> i) & 1 == 1 { 1 } else { -1 })
            .sum();
        game.set_threshold(i, if sum < 0 { 1.0 } else { -1.0 })?;
    }
    Ok(game)
}
