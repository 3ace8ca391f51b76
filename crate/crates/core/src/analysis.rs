//! Evaluation metrics, generalization-bound calculators and influence scores.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::JointActionDataset;
use crate::error::{check_dim, Error, Result};
use crate::game::{check_cap, true_proportion, EquilibriaSet, InfluenceGame};
use crate::model::{avg_log_likelihood, empirical_proportion, MixtureModel};

/// Largest `n` for metrics that sum over the whole action space.
pub const METRICS_CAP: usize = 20;
/// Largest `n` for the Monte Carlo estimate of `E[pi(G)]`.
pub const MONTE_CARLO_CAP: usize = 12;
/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// `KL(truth || learned)` in nats; `None` without a ground truth or above
    /// [`METRICS_CAP`].
    pub kl_to_truth: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub ne_count: Option<u64>,
    pub pi_hat: f64,
    pub test_loglik: Option<f64>,
}

/// Scores a learned equilibria set with mixture parameter `q` on held-out
/// data, and against `truth` when one is known.
pub fn evaluate(
    learned: &EquilibriaSet,
    q: f64,
    test: &JointActionDataset,
    truth: Option<&MixtureModel>,
) -> Result<EvalMetrics> {
    let n = learned.n();
    check_dim(n, test.n())?;
    let pi_hat = empirical_proportion(learned, test)?;
    let test_loglik = avg_log_likelihood(learned, q, test)?;
    let (kl, precision, recall) = match truth {
        Some(t) => {
            check_dim(n, t.n())?;
            let (p, r) = equilibrium_precision_recall(t.equilibria(), learned)?;
            let kl = kl_sum(n, |x| t.pmf_index(x), |x| mixture_pmf(learned, q, x))?;
            (Some(kl), Some(p), Some(r))
        }
        None => (None, None, None),
    };
    Ok(EvalMetrics {
        kl_to_truth: kl,
        precision,
        recall,
        ne_count: Some(learned.len() as u64),
        pi_hat,
        test_loglik: Some(test_loglik),
    })
}

/// Mixture PMF that also accepts `q` in `{0, 1}` for non-trivial sets.
fn mixture_pmf(ne: &EquilibriaSet, q: f64, index: u64) -> f64 {
    let space = ne.space_size();
    if ne.is_trivial() {
        return 1.0 / space;
    }
    let k = ne.len() as f64;
    if ne.contains(index) {
        q / k
    } else {
        (1.0 - q) / (space - k)
    }
}

fn kl_sum(n: usize, p: impl Fn(u64) -> f64, q: impl Fn(u64) -> f64) -> Result<f64> {
    check_cap("exact model KL", n, METRICS_CAP)?;
    let mut total = 0.0;
    for x in 0..1u64 << n {
        let a = p(x);
        if a == 0.0 {
            continue;
        }
        let b = q(x);
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

/// `sum_x p_truth(x) log(p_truth(x) / p_learned(x))`, `+inf` when the learned
/// model misses support of the truth.
pub fn model_kl_exact(truth: &MixtureModel, learned: &MixtureModel) -> Result<f64> {
    check_dim(truth.n(), learned.n())?;
    kl_sum(truth.n(), |x| truth.pmf_index(x), |x| learned.pmf_index(x))
}

/// `(|L & T| / |L|, |L & T| / |T|)`, with an empty side scoring 1.
pub fn equilibrium_precision_recall(
    truth: &EquilibriaSet,
    learned: &EquilibriaSet,
) -> Result<(f64, f64)> {
    check_dim(truth.n(), learned.n())?;
    let common = truth.intersection_len(learned) as f64;
    let ratio = |len: usize| if len == 0 { 1.0 } else { common / len as f64 };
    Ok((ratio(learned.len()), ratio(truth.len())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub q_bar: f64,
    /// Amount by which the learned model's expected log-likelihood may fall
    /// short of the best in the class.
    pub bound_value: f64,
    /// `log` of the VC-style class-size bound, `n^3 log 2`.
    pub vc_term: f64,
}

/// `(log max(2m, 1/(1-q_bar)) + n log 2) * sqrt((2/m)(n^3 log 2 + log(4/delta)))`
pub fn generalization_bound(n: usize, m: usize, delta: f64, q_bar: f64) -> Result<BoundReport> {
    if m == 0 {
        return Err(Error::Argument("m must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(format!("delta={delta} outside (0,1)")));
    }
    if !(q_bar > 0.0 && q_bar < 1.0) {
        return Err(Error::Argument(format!("q_bar={q_bar} outside (0,1)")));
    }
    let nf = n as f64;
    let mf = m as f64;
    let vc_term = nf.powi(3) * LN_2;
    let range = (2.0 * mf).max(1.0 / (1.0 - q_bar)).ln() + nf * LN_2;
    let bound_value = range * ((2.0 / mf) * (vc_term + (4.0 / delta).ln())).sqrt();
    Ok(BoundReport {
        n,
        m,
        delta,
        q_bar,
        bound_value,
        vc_term,
    })
}

/// Markov bound: `pi(G) <= (3/4)^n / delta` with probability at least
/// `1 - delta` over games with continuous random rows.
pub fn tpe_bound(n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!("delta={delta} outside (0,1]")));
    }
    Ok(0.75f64.powi(n as i32) / delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDist {
    /// I.i.d. standard normal weights and thresholds.
    StandardNormal,
    /// I.i.d. uniform on `(-half_width, half_width)`.
    Uniform { half_width: f64 },
}

impl WeightDist {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            WeightDist::StandardNormal => rng.sample(StandardNormal),
            WeightDist::Uniform { half_width } => rng.random_range(-half_width..half_width),
        }
    }

    /// A game with every row and threshold drawn independently.
    pub fn random_game(&self, n: usize, rng: &mut ChaCha8Rng) -> InfluenceGame {
        let mut g = InfluenceGame::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.set_weight(i, j, self.draw(rng)).expect("finite draw");
                }
            }
            g.set_threshold(i, self.draw(rng)).expect("finite draw");
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPi {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    /// Normal-approximation 99% interval for the mean.
    pub ci: (f64, f64),
    pub proportions: Vec<f64>,
}

impl MonteCarloPi {
    /// Fraction of sampled games with `pi` strictly above `threshold`.
    pub fn exceedance(&self, threshold: f64) -> f64 {
        self.proportions.iter().filter(|&&p| p > threshold).count() as f64
            / self.proportions.len() as f64
    }
}

/// Sample mean of `pi(G)` over `trials` random games.
pub fn monte_carlo_expected_pi(
    n: usize,
    dist: WeightDist,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloPi> {
    check_cap("Monte Carlo proportion", n, MONTE_CARLO_CAP)?;
    if n == 0 || trials < 2 {
        return Err(Error::Argument(
            "need n >= 1 and at least two trials".into(),
        ));
    }
    if let WeightDist::Uniform { half_width } = dist {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Argument(format!(
                "half_width={half_width} must be > 0"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proportions = (0..trials)
        .map(|_| true_proportion(&dist.random_game(n, &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let t = trials as f64;
    let mean = proportions.iter().sum::<f64>() / t;
    let var = proportions.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let std_dev = var.sqrt();
    let std_err = std_dev / t.sqrt();
    Ok(MonteCarloPi {
        mean,
        std_dev,
        std_err,
        ci: (mean - Z99 * std_err, mean + Z99 * std_err),
        proportions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceScores {
    /// `sum_i |w_ij|` over normalized rows, indexed by `j`.
    pub influence: Vec<f64>,
    /// `|b_i|` over normalized rows.
    pub bias: Vec<f64>,
}

/// Normalizes each row `(w_i, b_i)` by `||w_i||_1 + |b_i|`, then sums the
/// magnitude each player exerts on the others.
pub fn influence_scores(game: &InfluenceGame) -> Result<InfluenceScores> {
    let n = game.n();
    let mut influence = vec![0.0; n];
    let mut bias = vec![0.0; n];
    for i in 0..n {
        let row = game.weight_row(i);
        let norm = row.iter().map(|w| w.abs()).sum::<f64>() + game.threshold(i).abs();
        if norm == 0.0 {
            return Err(Error::Argument(format!(
                "player {i} has an all-zero row; apply fix_degenerate first"
            )));
        }
        for (j, w) in row.iter().enumerate() {
            influence[j] += w.abs() / norm;
        }
        bias[i] = game.threshold(i).abs() / norm;
    }
    Ok(InfluenceScores { influence, bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kl_bernoulli;

    fn coord(q: f64) -> MixtureModel {
        MixtureModel::new(EquilibriaSet::new(2, vec![0, 3]).unwrap(), q).unwrap()
    }

    #[test]
    fn kl_values() {
        let uniform = MixtureModel::new(EquilibriaSet::full(2).unwrap(), 0.5).unwrap();
        let kl = model_kl_exact(&coord(0.9), &uniform).unwrap();
        assert!((kl - (0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln())).abs() < 1e-12);
        assert!((kl - 0.368064).abs() < 1e-6);
        let kl = model_kl_exact(&coord(0.9), &coord(0.8)).unwrap();
        // identical equilibria sets: the mixture KL is the Bernoulli KL of q
        assert!((kl - kl_bernoulli(0.9, 0.8)).abs() < 1e-12);
        assert!((kl - 0.036690).abs() < 1e-6);
        assert_eq!(model_kl_exact(&coord(0.7), &coord(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn kl_support_mismatch_is_infinite() {
        let ne = EquilibriaSet::new(2, vec![0]).unwrap();
        let learned = EquilibriaSet::new(2, vec![0, 3]).unwrap();
        let d = JointActionDataset::from_indices(2, vec![0, 3]).unwrap();
        let m = evaluate(
            &learned,
            1.0,
            &d,
            Some(&MixtureModel::new(ne, 0.9).unwrap()),
        )
        .unwrap();
        assert_eq!(m.kl_to_truth, Some(f64::INFINITY));
    }

    #[test]
    fn precision_recall_conventions() {
        let t = EquilibriaSet::new(2, vec![0, 1]).unwrap();
        let l = EquilibriaSet::new(2, vec![0, 2]).unwrap();
        assert_eq!(equilibrium_precision_recall(&t, &l).unwrap(), (0.5, 0.5));
        assert_eq!(equilibrium_precision_recall(&t, &t).unwrap(), (1.0, 1.0));
        let e = EquilibriaSet::empty(2);
        assert_eq!(equilibrium_precision_recall(&t, &e).unwrap(), (1.0, 0.0));
        assert_eq!(equilibrium_precision_recall(&e, &e).unwrap(), (1.0, 1.0));
        assert_eq!(equilibrium_precision_recall(&e, &t).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn tpe_values() {
        assert!((tpe_bound(5, 1.0).unwrap() - 0.237305).abs() < 1e-6);
        assert!((tpe_bound(9, 0.5).unwrap() - 0.150169).abs() < 1e-6);
        assert!(tpe_bound(3, 0.0).is_err());
    }

    #[test]
    fn bound_shrinks_with_m_and_delta() {
        let mut prev = f64::INFINITY;
        for m in [10, 50, 100, 1000, 10_000] {
            let b = generalization_bound(6, m, 0.05, 0.7).unwrap().bound_value;
            assert!(b < prev);
            prev = b;
        }
        let lo = generalization_bound(6, 100, 0.9, 0.7).unwrap().bound_value;
        let hi = generalization_bound(6, 100, 0.1, 0.7).unwrap().bound_value;
        assert!(lo < hi);
        let r = generalization_bound(20, 50, 0.05, 0.7).unwrap();
        assert_eq!(r.vc_term, 8000.0 * LN_2);
    }

    #[test]
    fn influence_example() {
        let mut g = InfluenceGame::zeros(2);
        g.set_weight(1, 0, 2.0).unwrap();
        assert!(influence_scores(&g).is_err());
        g.set_threshold(0, 1.0).unwrap();
        let s = influence_scores(&g).unwrap();
        assert_eq!(s.influence, vec![1.0, 0.0]);
        assert_eq!(s.bias, vec![1.0, 0.0]);
    }
}
