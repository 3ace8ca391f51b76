//! Convex loss minimization over the empirical proportion of equilibria.
//!
//! A sample `x` is an equilibrium when every margin
//! `z_i = x_i (w_i . x_-i - b_i)` is non-negative. The learners replace the
//! 0/1 loss `max_i [z_i < 0]` with hinge or logistic surrogates, either per
//! player (independent) or jointly (simultaneous), plus `rho ||W||_1`.

mod degenerate;
mod hinge;
mod logistic;
mod loss;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::dataset::JointActionDataset;
use crate::error::{Error, Result};
use crate::game::InfluenceGame;

pub use degenerate::{detect_degenerate, fix_degenerate};
pub use hinge::{hinge_primal_objective, train_simultaneous_hinge};
pub use logistic::{simultaneous_logistic_smooth, train_simultaneous_logistic};
pub use loss::{logistic_loss, simul_logistic_loss};

/// Rows with every entry at most this in magnitude count as zero.
pub const ZERO_ROW_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexMethod {
    IndSvm,
    SimSvm,
    IndLogistic,
    SimLogistic,
}

impl ConvexMethod {
    pub const ALL: [ConvexMethod; 4] = [
        ConvexMethod::IndSvm,
        ConvexMethod::SimSvm,
        ConvexMethod::IndLogistic,
        ConvexMethod::SimLogistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConvexMethod::IndSvm => "ind_svm",
            ConvexMethod::SimSvm => "sim_svm",
            ConvexMethod::IndLogistic => "ind_logistic",
            ConvexMethod::SimLogistic => "sim_logistic",
        }
    }

    pub fn is_independent(self) -> bool {
        matches!(self, ConvexMethod::IndSvm | ConvexMethod::IndLogistic)
    }
}

impl std::str::FromStr for ConvexMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown convex method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexTrainConfig {
    pub rho: f64,
    pub method: ConvexMethod,
    pub max_iters: usize,
    pub tol_grad: f64,
    pub tol_feas: f64,
    pub seed: u64,
}

impl ConvexTrainConfig {
    pub fn new(method: ConvexMethod, rho: f64) -> Self {
        Self {
            rho,
            method,
            max_iters: 5000,
            tol_grad: 1e-6,
            tol_feas: 1e-7,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::Argument(format!("rho={} must be >= 0", self.rho)));
        }
        if !(self.tol_grad > 0.0 && self.tol_feas > 0.0) {
            return Err(Error::Argument("tolerances must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Argument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub game: InfluenceGame,
    pub per_player_degenerate: Vec<bool>,
    pub objective: f64,
    /// LP dual objective, for the hinge learners.
    pub dual_objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final stationarity residual (first-order learners) or relative duality
    /// gap (LP learners).
    pub residual: f64,
}

/// Trains with whichever learner `config.method` names.
pub fn train(dataset: &JointActionDataset, config: &ConvexTrainConfig) -> Result<TrainResult> {
    match config.method {
        ConvexMethod::IndSvm | ConvexMethod::IndLogistic => train_independent(dataset, config),
        ConvexMethod::SimSvm => train_simultaneous_hinge(dataset, config),
        ConvexMethod::SimLogistic => train_simultaneous_logistic(dataset, config),
    }
}

/// One 1-norm SVM or L1 logistic regression per player, predicting `x_i`
/// from `x_-i`.
pub fn train_independent(
    dataset: &JointActionDataset,
    config: &ConvexTrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    let rows = dataset.rows();
    let n = dataset.n();
    let mut game = InfluenceGame::zeros(n);
    let mut objective = 0.0;
    let mut dual = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let part = match config.method {
            ConvexMethod::IndSvm => hinge::solve(&rows, &[i], config)?,
            ConvexMethod::IndLogistic => logistic::solve(&rows, &[i], config)?,
            other => {
                return Err(Error::Argument(format!(
                    "{} is not an independent method",
                    other.name()
                )))
            }
        };
        objective += part.objective;
        dual += part.dual_objective.unwrap_or(0.0);
        iterations += part.iterations;
        converged &= part.converged;
        residual = residual.max(part.residual);
        part.write_into(&mut game, &[i])?;
    }
    let dual_objective = (config.method == ConvexMethod::IndSvm).then_some(dual);
    finish(
        dataset,
        config,
        game,
        objective,
        dual_objective,
        iterations,
        converged,
        residual,
    )
}

/// Per-player parameters produced by one solve over a subset of players.
pub(crate) struct PartialFit {
    /// For each player in the subset: `n` weights (diagonal zero) then `b`.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub objective: f64,
    pub dual_objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl PartialFit {
    fn write_into(&self, game: &mut InfluenceGame, players: &[usize]) -> Result<()> {
        for (&i, (w, b)) in players.iter().zip(&self.rows) {
            for (j, &v) in w.iter().enumerate() {
                if j != i {
                    game.set_weight(i, j, v)?;
                }
            }
            game.set_threshold(i, *b)?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    dataset: &JointActionDataset,
    config: &ConvexTrainConfig,
    mut game: InfluenceGame,
    objective: f64,
    dual_objective: Option<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
) -> Result<TrainResult> {
    if !objective.is_finite() {
        return Err(Error::Numeric(format!(
            "{} produced a non-finite objective",
            config.method.name()
        )));
    }
    let n = game.n();
    let mut flags = vec![false; n];
    for (i, flag) in flags.iter_mut().enumerate() {
        let tiny = game.threshold(i).abs() <= ZERO_ROW_TOL
            && game.weight_row(i).iter().all(|w| w.abs() <= ZERO_ROW_TOL);
        // For the hinge the zero row is one optimum among several whenever the
        // balance conditions hold; prefer it so the flag is deterministic.
        let balanced =
            config.method == ConvexMethod::IndSvm && detect_degenerate(dataset, i, config.method)?;
        if tiny || balanced {
            *flag = true;
            for j in 0..n {
                game.set_weight(i, j, 0.0)?;
            }
            game.set_threshold(i, 0.0)?;
        }
    }
    Ok(TrainResult {
        game,
        per_player_degenerate: flags,
        objective,
        dual_objective,
        iterations,
        converged,
        residual,
    })
}

/// Margins `z_li = x_i (w_i . x - b_i)` for a row-major parameter layout.
pub(crate) fn margins(x: &[f64], players: &[usize], rows: &[(Vec<f64>, f64)]) -> Vec<f64> {
    players
        .iter()
        .zip(rows)
        .map(|(&i, (w, b))| {
            let f: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() - b;
            x[i] * f
        })
        .collect()
}
