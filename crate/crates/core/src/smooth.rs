//! Sigmoidal surrogates for equilibrium membership.
//!
//! `[x in NE(G)]` is replaced by `prod_i H(z_i)` with
//! `H(z) = (1 + tanh(z/beta - atanh(1 - 2 alpha^(1/n)))) / 2`, so the zero
//! game has smoothed membership exactly `alpha` everywhere. Two objectives are
//! built on top: the smoothed empirical proportion of equilibria, and the
//! smoothed average log-likelihood, whose `pi` sums over all `2^n` actions.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::JointActionDataset;
use crate::error::{check_dim, Error, Result};
use crate::game::{action_of, check_cap, enumerate_equilibria, InfluenceGame, DEFAULT_TOL};
use crate::model::{fit, optimal_q};

/// Largest `n` for the smoothed likelihood, which sums over every action.
pub const LIKELIHOOD_CAP: usize = 15;
/// Largest `n` for which learned games are scored by their exact likelihood.
pub const SCORING_CAP: usize = 20;
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    alpha: f64,
    beta: f64,
    n: usize,
    /// `atanh(1 - 2 alpha^(1/n))`
    shift: f64,
}

impl SigmoidParams {
    pub fn new(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("sigmoid needs n >= 1".into()));
        }
        let root = alpha.powf(1.0 / n as f64);
        if !(alpha > 0.0 && root < 1.0) {
            return Err(Error::Argument(format!(
                "alpha^(1/n) = {root} must lie in (0, 1) (alpha={alpha}, n={n})"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Argument(format!("beta={beta} must be > 0")));
        }
        Ok(Self {
            alpha,
            beta,
            n,
            shift: (1.0 - 2.0 * root).atanh(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn arg(&self, z: f64) -> f64 {
        z / self.beta - self.shift
    }
}

/// `(1 + tanh(u)) / 2 = sigmoid(2u)`
pub fn sigmoid_h(z: f64, p: &SigmoidParams) -> f64 {
    logistic(2.0 * p.arg(z))
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(t))`
fn log_logistic(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMode {
    /// Smoothed average log-likelihood.
    Likelihood,
    /// Smoothed empirical proportion of equilibria.
    Empirical,
}

impl SmoothMode {
    pub fn name(self) -> &'static str {
        match self {
            SmoothMode::Likelihood => "likelihood",
            SmoothMode::Empirical => "empirical",
        }
    }
}

/// Value and gradient of the smooth part of an objective (no L1 term).
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothValue {
    pub value: f64,
    /// Row-major `n x n`, zero diagonal.
    pub grad_w: Vec<f64>,
    pub grad_b: Vec<f64>,
    /// Smoothed empirical proportion of equilibria.
    pub pi_hat: f64,
    /// Smoothed true proportion; `None` in empirical mode.
    pub pi: Option<f64>,
    /// Mixture parameter used; `None` in empirical mode.
    pub q: Option<f64>,
}

/// Accumulates `sum_x c_x M(x)` and its gradient into `gw`, `gb`.
struct Membership<'a> {
    w: &'a [f64],
    b: &'a [f64],
    p: &'a SigmoidParams,
    n: usize,
    factor: Vec<f64>,
}

impl Membership<'_> {
    fn add(&mut self, x: &[f64], weight: f64, gw: &mut [f64], gb: &mut [f64]) -> f64 {
        let n = self.n;
        let mut log_m = 0.0;
        for i in 0..n {
            let row = &self.w[i * n..(i + 1) * n];
            let f: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() - self.b[i];
            let t = 2.0 * self.p.arg(x[i] * f);
            log_m += log_logistic(t);
            // d log H / dz
            self.factor[i] = 2.0 / self.p.beta * logistic(-t);
        }
        let mv = log_m.exp();
        let c = weight * mv;
        if c != 0.0 {
            for i in 0..n {
                let gi = c * self.factor[i] * x[i];
                let row = &mut gw[i * n..(i + 1) * n];
                for (j, g) in row.iter_mut().enumerate() {
                    if j != i {
                        *g += gi * x[j];
                    }
                }
                gb[i] -= gi;
            }
        }
        weight * mv
    }
}

fn x_ln_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Smooth objective for `game` on `dataset`.
///
/// In likelihood mode `q = None` uses `min(pi_hat, 1 - 1/(2m))` evaluated at
/// the smoothed `pi_hat`; the gradient is exact either way.
pub fn smooth_objective(
    game: &InfluenceGame,
    q: Option<f64>,
    dataset: &JointActionDataset,
    params: &SigmoidParams,
    mode: SmoothMode,
) -> Result<SmoothValue> {
    let n = game.n();
    check_dim(n, dataset.n())?;
    check_dim(n, params.n)?;
    if mode == SmoothMode::Likelihood {
        check_cap("smoothed likelihood", n, LIKELIHOOD_CAP)?;
    }
    if let Some(q) = q {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Argument(format!("q={q} outside (0,1)")));
        }
    }
    let m = dataset.len();
    let mut acc = Membership {
        w: game.weights(),
        b: game.thresholds(),
        p: params,
        n,
        factor: vec![0.0; n],
    };
    let mut x = vec![0.0; n];
    let set_x = |x: &mut [f64], idx: u64| {
        for (i, v) in x.iter_mut().enumerate() {
            *v = action_of(idx, i);
        }
    };

    let mut hw = vec![0.0; n * n];
    let mut hb = vec![0.0; n];
    let inv_m = 1.0 / m as f64;
    let mut pi_hat = 0.0;
    for &(idx, count) in dataset.unique() {
        set_x(&mut x, idx);
        pi_hat += acc.add(&x, count as f64 * inv_m, &mut hw, &mut hb);
    }
    if mode == SmoothMode::Empirical {
        return Ok(SmoothValue {
            value: pi_hat,
            grad_w: hw,
            grad_b: hb,
            pi_hat,
            pi: None,
            q: None,
        });
    }

    let mut pw = vec![0.0; n * n];
    let mut pb = vec![0.0; n];
    let inv_space = (-(n as f64) * LN_2).exp();
    let mut pi = 0.0;
    for idx in 0..1u64 << n {
        set_x(&mut x, idx);
        pi += acc.add(&x, inv_space, &mut pw, &mut pb);
    }
    let q = q.unwrap_or_else(|| optimal_q(pi_hat, m));
    let value = x_ln_y(pi_hat, q) + x_ln_y(1.0 - pi_hat, 1.0 - q)
        - x_ln_y(pi_hat, pi)
        - x_ln_y(1.0 - pi_hat, 1.0 - pi)
        - n as f64 * LN_2;
    let d_pi_hat = q.ln() - (1.0 - q).ln() - pi.ln() + (1.0 - pi).ln();
    let d_pi = -pi_hat / pi + (1.0 - pi_hat) / (1.0 - pi);
    let grad_w = hw
        .iter()
        .zip(&pw)
        .map(|(h, p)| d_pi_hat * h + d_pi * p)
        .collect();
    let grad_b = hb
        .iter()
        .zip(&pb)
        .map(|(h, p)| d_pi_hat * h + d_pi * p)
        .collect();
    Ok(SmoothValue {
        value,
        grad_w,
        grad_b,
        pi_hat,
        pi: Some(pi),
        q: Some(q),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothTrainConfig {
    pub rho: f64,
    pub step: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once an accepted step improves the objective by less than
    /// `tol_obj * (1 + |value|)`.
    pub tol_obj: f64,
    pub alpha: f64,
    pub beta: f64,
    pub restarts: usize,
}

impl Default for SmoothTrainConfig {
    fn default() -> Self {
        Self {
            rho: 0.0,
            step: 0.1,
            max_iters: 500,
            seed: 0,
            tol_obj: 1e-9,
            alpha: 0.1,
            beta: 0.001,
            restarts: 5,
        }
    }
}

impl SmoothTrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Argument(format!("rho={} must be >= 0", self.rho)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Argument(format!("step={} must be > 0", self.step)));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::Argument(
                "max_iters and restarts must be >= 1".into(),
            ));
        }
        if !(self.tol_obj >= 0.0) {
            return Err(Error::Argument("tol_obj must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothFit {
    pub game: InfluenceGame,
    /// Closed-form mixture parameter for the learned game's exact `pi_hat`.
    pub q: f64,
    /// Exact empirical proportion of equilibria of `game`.
    pub pi_hat: f64,
    /// Exact average log-likelihood; `None` above [`SCORING_CAP`].
    pub loglik: Option<f64>,
    /// Penalized smoothed objective per iteration of the kept restart,
    /// starting at its initial point.
    pub trace: Vec<f64>,
    pub restart: usize,
    pub iterations: usize,
}

/// Gradient ascent on `smooth - rho ||W||_1` from several random starts. Each
/// restart ends at its best smoothed value; across restarts the game with
/// the best exact likelihood is kept (exact `pi_hat` above the scoring cap).
pub fn train_sigmoidal(
    dataset: &JointActionDataset,
    config: &SmoothTrainConfig,
    mode: SmoothMode,
) -> Result<SmoothFit> {
    config.validate()?;
    let n = dataset.n();
    if mode == SmoothMode::Likelihood {
        check_cap("smoothed likelihood", n, LIKELIHOOD_CAP)?;
    }
    let params = SigmoidParams::new(config.alpha, config.beta, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(f64, SmoothFit)> = None;
    for restart in 0..config.restarts {
        let mut game = InfluenceGame::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    game.set_weight(i, j, rng.random_range(-0.1..0.1))?;
                }
            }
            game.set_threshold(i, rng.random_range(-0.1..0.1))?;
        }
        let (game, trace, iterations) = ascend(game, dataset, config, &params, mode)?;
        let (score, q, pi_hat, loglik) = score(&game, dataset)?;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((
                score,
                SmoothFit {
                    game,
                    q,
                    pi_hat,
                    loglik,
                    trace,
                    restart,
                    iterations,
                },
            ));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn penalized(
    game: &InfluenceGame,
    dataset: &JointActionDataset,
    config: &SmoothTrainConfig,
    params: &SigmoidParams,
    mode: SmoothMode,
) -> Result<SmoothValue> {
    let mut v = smooth_objective(game, None, dataset, params, mode)?;
    v.value -= config.rho * game.l1_norm();
    if !v.value.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite sigmoidal objective at W={:?}, b={:?}",
            game.weights(),
            game.thresholds()
        )));
    }
    Ok(v)
}

fn ascend(
    mut game: InfluenceGame,
    dataset: &JointActionDataset,
    config: &SmoothTrainConfig,
    params: &SigmoidParams,
    mode: SmoothMode,
) -> Result<(InfluenceGame, Vec<f64>, usize)> {
    let n = game.n();
    let mut cur = penalized(&game, dataset, config, params, mode)?;
    let mut trace = vec![cur.value];
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let mut dir_w = cur.grad_w.clone();
        for (d, &w) in dir_w.iter_mut().zip(game.weights()) {
            if w != 0.0 {
                *d -= config.rho * w.signum();
            }
        }
        let mut step = config.step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = game.clone();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        cand.set_weight(i, j, game.weight(i, j) + step * dir_w[i * n + j])?;
                    }
                }
                cand.set_threshold(i, game.threshold(i) + step * cur.grad_b[i])?;
            }
            let v = penalized(&cand, dataset, config, params, mode)?;
            if v.value >= cur.value {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let gain = v.value - cur.value;
        game = cand;
        cur = v;
        trace.push(cur.value);
        if gain <= config.tol_obj * (1.0 + cur.value.abs()) {
            break;
        }
    }
    Ok((game, trace, iterations))
}

/// `(selection score, q, pi_hat, loglik)` for a learned game.
fn score(
    game: &InfluenceGame,
    dataset: &JointActionDataset,
) -> Result<(f64, f64, f64, Option<f64>)> {
    let n = game.n();
    if n <= SCORING_CAP {
        let ne = enumerate_equilibria(game, DEFAULT_TOL)?;
        let f = fit(&ne, dataset)?;
        return Ok((f.loglik, f.q_hat, f.pi_hat, Some(f.loglik)));
    }
    let mut hits = 0usize;
    for &(idx, c) in dataset.unique() {
        let x: Vec<f64> = (0..n).map(|i| action_of(idx, i)).collect();
        if (0..n).all(|i| x[i] * game.influence(i, &x) >= -DEFAULT_TOL) {
            hits += c;
        }
    }
    let pi_hat = hits as f64 / dataset.len() as f64;
    Ok((pi_hat, optimal_q(pi_hat, dataset.len()), pi_hat, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_at_zero_is_alpha_root() {
        let p = SigmoidParams::new(0.1, 0.001, 1).unwrap();
        assert!((sigmoid_h(0.0, &p) - 0.1).abs() < 1e-15);
        let p = SigmoidParams::new(0.1, 0.001, 2).unwrap();
        assert!((sigmoid_h(0.0, &p) - 0.316228).abs() < 1e-6);
        for alpha in [0.05, 0.1, 0.5] {
            for n in 1..=20 {
                let p = SigmoidParams::new(alpha, 0.001, n).unwrap();
                assert!((sigmoid_h(0.0, &p).powi(n as i32) - alpha).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn h_limits_and_monotonicity() {
        let p = SigmoidParams::new(0.1, 0.01, 3).unwrap();
        assert_eq!(sigmoid_h(1e3, &p), 1.0);
        assert_eq!(sigmoid_h(-1e3, &p), 0.0);
        let mut prev = 0.0;
        for k in -50..=50 {
            let h = sigmoid_h(k as f64 * 1e-3, &p);
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn invalid_alpha() {
        assert!(SigmoidParams::new(1.0, 0.1, 3).is_err());
        assert!(SigmoidParams::new(0.0, 0.1, 3).is_err());
        assert!(SigmoidParams::new(0.1, 0.0, 3).is_err());
    }

    #[test]
    fn zero_game_membership_is_alpha() {
        let d = JointActionDataset::from_indices(3, vec![0, 5, 7]).unwrap();
        let p = SigmoidParams::new(0.1, 0.001, 3).unwrap();
        let v = smooth_objective(
            &InfluenceGame::zeros(3),
            None,
            &d,
            &p,
            SmoothMode::Empirical,
        )
        .unwrap();
        assert!((v.value - 0.1).abs() < 1e-12);
        let v = smooth_objective(
            &InfluenceGame::zeros(3),
            None,
            &d,
            &p,
            SmoothMode::Likelihood,
        )
        .unwrap();
        assert!((v.pi.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn likelihood_cap() {
        let d = JointActionDataset::from_indices(16, vec![0]).unwrap();
        let p = SigmoidParams::new(0.1, 0.001, 16).unwrap();
        let r = smooth_objective(
            &InfluenceGame::zeros(16),
            None,
            &d,
            &p,
            SmoothMode::Likelihood,
        );
        assert!(matches!(r, Err(Error::Capacity { .. })));
    }
}
