//! 1-norm SVM learners posed as linear programs.
//!
//! Primal, over `W = W+ - W-`, `b = b+ - b-` and per-sample slacks:
//!
//! ```text
//! min (1/m) sum_l xi_l + rho ||W||_1
//! s.t. x_i^l (w_i . x_-i^l - b_i) >= 1 - xi_l   for all l, i
//!      xi_l >= 0
//! ```
//!
//! We run the simplex on its dual (`max sum alpha` with `alpha >= 0`), whose
//! origin is feasible, and read the primal back from the dual prices.

use super::lp::DenseLp;
use super::{finish, margins, ConvexTrainConfig, PartialFit, TrainResult};
use crate::dataset::JointActionDataset;
use crate::error::{Error, Result};
use crate::game::InfluenceGame;

/// Solves the hinge LP for the given players sharing one slack per sample.
/// With a single player this is that player's independent 1-norm SVM.
pub(crate) fn solve(
    rows: &[Vec<f64>],
    players: &[usize],
    config: &ConvexTrainConfig,
) -> Result<PartialFit> {
    let m = rows.len();
    let n = rows[0].len();
    let np = players.len();
    let per_player = 2 * n; // 2(n-1) weight halves + 2 threshold halves
    let primal_vars = np * per_player + m;
    let alphas = m * np;
    let inv_m = 1.0 / m as f64;

    // LP rows are primal variables, LP columns are the multipliers alpha_{l,k}.
    let mut lp = DenseLp::new(primal_vars, alphas);
    lp.c = vec![1.0; alphas];
    for (k, &i) in players.iter().enumerate() {
        let base = k * per_player;
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        for (s, &j) in others.iter().enumerate() {
            lp.b[base + s] = config.rho;
            lp.b[base + n - 1 + s] = config.rho;
            for (l, x) in rows.iter().enumerate() {
                let v = x[i] * x[j];
                lp.set(base + s, l * np + k, v);
                lp.set(base + n - 1 + s, l * np + k, -v);
            }
        }
        for (l, x) in rows.iter().enumerate() {
            lp.set(base + 2 * (n - 1), l * np + k, -x[i]);
            lp.set(base + 2 * (n - 1) + 1, l * np + k, x[i]);
        }
    }
    for l in 0..m {
        let row = np * per_player + l;
        lp.b[row] = inv_m;
        for k in 0..np {
            lp.set(row, l * np + k, 1.0);
        }
    }

    let max_pivots = config.max_iters.max(50 * (primal_vars + alphas));
    let sol = lp.maximize(max_pivots)?;

    let mut fit_rows = Vec::with_capacity(np);
    for (k, &i) in players.iter().enumerate() {
        let base = k * per_player;
        let mut w = vec![0.0; n];
        let others = (0..n).filter(|&j| j != i);
        for (s, j) in others.enumerate() {
            w[j] = sol.y[base + s] - sol.y[base + n - 1 + s];
        }
        let b = sol.y[base + 2 * (n - 1)] - sol.y[base + 2 * (n - 1) + 1];
        fit_rows.push((w, b));
    }

    let primal = shared_hinge_objective(rows, players, &fit_rows, config.rho);
    let dual = sol.objective;
    let violation = dual_violation(&lp, &sol.x);
    if violation > 1e-7 {
        return Err(Error::Solver(format!(
            "dual solution violates its constraints by {violation:e}"
        )));
    }
    let gap = (primal - dual).abs() / (1.0 + primal.abs());
    Ok(PartialFit {
        rows: fit_rows,
        objective: primal,
        dual_objective: Some(dual),
        iterations: sol.pivots,
        converged: gap <= config.tol_feas,
        residual: gap,
    })
}

fn dual_violation(lp: &DenseLp, alpha: &[f64]) -> f64 {
    let mut worst = alpha.iter().fold(0.0f64, |w, &a| w.max(-a));
    for r in 0..lp.rows {
        let lhs: f64 = lp.a[r * lp.cols..(r + 1) * lp.cols]
            .iter()
            .zip(alpha)
            .map(|(a, x)| a * x)
            .sum();
        worst = worst.max(lhs - lp.b[r]);
    }
    worst
}

/// `(1/m) sum_l max(0, max_i (1 - z_li)) + rho ||W||_1` over the given players.
fn shared_hinge_objective(
    rows: &[Vec<f64>],
    players: &[usize],
    fit_rows: &[(Vec<f64>, f64)],
    rho: f64,
) -> f64 {
    let loss: f64 = rows
        .iter()
        .map(|x| {
            margins(x, players, fit_rows)
                .into_iter()
                .fold(0.0f64, |acc, z| acc.max(1.0 - z))
        })
        .sum::<f64>()
        / rows.len() as f64;
    let l1: f64 = fit_rows
        .iter()
        .map(|(w, _)| w.iter().map(|v| v.abs()).sum::<f64>())
        .sum();
    loss + rho * l1
}

/// The simultaneous hinge objective of a game, evaluated directly.
pub fn hinge_primal_objective(dataset: &JointActionDataset, game: &InfluenceGame, rho: f64) -> f64 {
    let n = game.n();
    let players: Vec<usize> = (0..n).collect();
    let fit_rows: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| (game.weight_row(i).to_vec(), game.threshold(i)))
        .collect();
    shared_hinge_objective(&dataset.rows(), &players, &fit_rows, rho)
}

/// All players share each sample's slack.
pub fn train_simultaneous_hinge(
    dataset: &JointActionDataset,
    config: &ConvexTrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    let rows = dataset.rows();
    let n = dataset.n();
    let players: Vec<usize> = (0..n).collect();
    let part = solve(&rows, &players, config)?;
    let mut game = InfluenceGame::zeros(n);
    part.write_into(&mut game, &players)?;
    finish(
        dataset,
        config,
        game,
        part.objective,
        part.dual_objective,
        part.iterations,
        part.converged,
        part.residual,
    )
}
