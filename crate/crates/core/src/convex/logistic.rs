//! L1-regularized logistic learners via accelerated proximal gradient.
//!
//! Parameters for a player `i` are packed into a length-`n` block where slot
//! `j != i` holds `w_ij` and the diagonal slot holds `b_i`. Soft-thresholding
//! touches only weight slots; the threshold is unpenalized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::simul_logistic_grad;
use super::{finish, ConvexTrainConfig, PartialFit, TrainResult};
use crate::dataset::JointActionDataset;
use crate::error::{Error, Result};
use crate::game::InfluenceGame;

struct Problem<'a> {
    rows: &'a [Vec<f64>],
    players: &'a [usize],
    n: usize,
    rho: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.players.len() * self.n
    }

    fn is_weight(&self, slot: usize) -> bool {
        let (k, j) = (slot / self.n, slot % self.n);
        self.players[k] != j
    }

    /// Smooth part `(1/m) sum_l log(1 + sum_k exp(-z_lk))` and its gradient.
    fn smooth(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n;
        let np = self.players.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut z = vec![0.0; np];
        let mut dz = vec![0.0; np];
        let mut total = 0.0;
        for x in self.rows {
            for (k, &i) in self.players.iter().enumerate() {
                let block = &theta[k * n..(k + 1) * n];
                let mut f = -block[i];
                for j in (0..n).filter(|&j| j != i) {
                    f += block[j] * x[j];
                }
                z[k] = x[i] * f;
            }
            total += simul_logistic_grad(&z, &mut dz);
            for (k, &i) in self.players.iter().enumerate() {
                let block = &mut grad[k * n..(k + 1) * n];
                let gi = dz[k] * x[i];
                for j in 0..n {
                    block[j] += if j == i { -gi } else { gi * x[j] };
                }
            }
        }
        let inv_m = 1.0 / self.rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv_m);
        total * inv_m
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        self.rho
            * theta
                .iter()
                .enumerate()
                .filter(|&(s, _)| self.is_weight(s))
                .map(|(_, v)| v.abs())
                .sum::<f64>()
    }

    fn prox(&self, v: &mut [f64], step: f64) {
        let thr = self.rho * step;
        for (s, x) in v.iter_mut().enumerate() {
            if self.is_weight(s) {
                *x = x.signum() * (x.abs() - thr).max(0.0);
            }
        }
    }

    /// Coordinate Newton on the thresholds of players whose weights are all
    /// exactly zero, so that balanced players land on `b_i = 0` to machine
    /// precision rather than to the first-order tolerance.
    fn polish_zero_rows(&self, theta: &mut [f64]) {
        let n = self.n;
        let zero_rows: Vec<usize> = (0..self.players.len())
            .filter(|&k| (0..n).all(|j| !self.is_weight(k * n + j) || theta[k * n + j] == 0.0))
            .collect();
        if zero_rows.is_empty() {
            return;
        }
        let np = self.players.len();
        let mut z = vec![0.0; np];
        let mut p = vec![0.0; np];
        for _ in 0..100 {
            let mut moved = 0.0f64;
            for &k in &zero_rows {
                let i = self.players[k];
                let (mut g, mut h) = (0.0, 0.0);
                for x in self.rows {
                    for (kk, &ii) in self.players.iter().enumerate() {
                        let block = &theta[kk * n..(kk + 1) * n];
                        let mut f = -block[ii];
                        for j in (0..n).filter(|&j| j != ii) {
                            f += block[j] * x[j];
                        }
                        z[kk] = x[ii] * f;
                    }
                    simul_logistic_grad(&z, &mut p);
                    // p holds -dL/dz; dz_k/db_k = -x_i
                    let pk = -p[k];
                    g += pk * x[i];
                    h += pk * (1.0 - pk);
                }
                if h <= 0.0 {
                    continue;
                }
                let delta = g / h;
                theta[k * n + i] -= delta;
                moved = moved.max(delta.abs());
            }
            if moved < 1e-15 {
                break;
            }
        }
    }

    /// Norm of the minimum-norm element of the subdifferential.
    fn residual(&self, theta: &[f64], grad: &[f64]) -> f64 {
        theta
            .iter()
            .zip(grad)
            .enumerate()
            .map(|(s, (&t, &g))| {
                if !self.is_weight(s) {
                    g.abs()
                } else if t != 0.0 {
                    (g + self.rho * t.signum()).abs()
                } else {
                    (g.abs() - self.rho).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn solve(
    rows: &[Vec<f64>],
    players: &[usize],
    config: &ConvexTrainConfig,
) -> Result<PartialFit> {
    let n = rows[0].len();
    let problem = Problem {
        rows,
        players,
        n,
        rho: config.rho,
    };
    let dim = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((players[0] as u64) << 32));
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.01..0.01)).collect();

    let mut grad = vec![0.0; dim];
    let mut fx = problem.smooth(&x, &mut grad) + problem.penalty(&x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut step = 1.0;
    let mut gy = vec![0.0; dim];
    let mut gnew = vec![0.0; dim];
    let mut residual = problem.residual(&x, &grad);
    let mut iterations = 0;

    while iterations < config.max_iters && residual > config.tol_grad {
        iterations += 1;
        let fy = problem.smooth(&y, &mut gy);
        let (x_new, f_new) = loop {
            let mut cand: Vec<f64> = y.iter().zip(&gy).map(|(y, g)| y - step * g).collect();
            problem.prox(&mut cand, step);
            let f_cand = problem.smooth(&cand, &mut gnew);
            let (mut lin, mut quad) = (0.0, 0.0);
            for ((c, y), g) in cand.iter().zip(&y).zip(&gy) {
                let d = c - y;
                lin += g * d;
                quad += d * d;
            }
            if f_cand <= fy + lin + quad / (2.0 * step) + 1e-15 * (1.0 + fy.abs()) {
                break (cand, f_cand);
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(Error::Numeric("proximal step collapsed".into()));
            }
        };
        let obj_new = f_new + problem.penalty(&x_new);
        if !obj_new.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite objective at iteration {iterations}: {x_new:?}"
            )));
        }
        if obj_new > fx {
            // momentum overshoot: restart from the last accepted point
            y.clone_from(&x);
            t = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + beta * (xn - xo))
            .collect();
        t = t_next;
        x = x_new;
        fx = obj_new;
        // gnew holds the gradient at x from the accepted trial
        residual = problem.residual(&x, &gnew);
        step *= 1.25;
    }

    problem.polish_zero_rows(&mut x);
    fx = problem.smooth(&x, &mut grad) + problem.penalty(&x);

    let fit_rows = players
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let mut w = x[k * n..(k + 1) * n].to_vec();
            let b = w[i];
            w[i] = 0.0;
            (w, b)
        })
        .collect();
    Ok(PartialFit {
        rows: fit_rows,
        objective: fx,
        dual_objective: None,
        iterations,
        converged: residual <= config.tol_grad,
        residual,
    })
}

/// Smooth part of the simultaneous logistic objective and its gradient with
/// respect to `W` (row-major, zero diagonal) and `b`.
pub fn simultaneous_logistic_smooth(
    dataset: &JointActionDataset,
    game: &InfluenceGame,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    crate::error::check_dim(game.n(), dataset.n())?;
    let n = game.n();
    let rows = dataset.rows();
    let players: Vec<usize> = (0..n).collect();
    let problem = Problem {
        rows: &rows,
        players: &players,
        n,
        rho: 0.0,
    };
    let mut theta = game.weights().to_vec();
    for i in 0..n {
        theta[i * n + i] = game.threshold(i);
    }
    let mut grad = vec![0.0; n * n];
    let value = problem.smooth(&theta, &mut grad);
    let mut gb = vec![0.0; n];
    for i in 0..n {
        gb[i] = grad[i * n + i];
        grad[i * n + i] = 0.0;
    }
    Ok((value, grad, gb))
}

/// Minimizes `(1/m) sum_l log(1 + sum_i exp(-z_li)) + rho ||W||_1`.
pub fn train_simultaneous_logistic(
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
        None,
        part.iterations,
        part.converged,
        part.residual,
    )
}
