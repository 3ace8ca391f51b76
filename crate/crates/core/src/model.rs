//! The Nash-equilibrium mixture over joint actions.
//!
//! With probability `q` a joint action is drawn uniformly from `NE(G)`, and
//! otherwise uniformly from its complement. All logarithms are natural.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::JointActionDataset;
use crate::error::{check_dim, Error, Result};
use crate::game::{check_cap, EquilibriaSet, JointAction, ENUMERATION_CAP};

/// A game, identified by its equilibria, paired with the mixture parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    ne: EquilibriaSet,
    q: f64,
}

impl MixtureModel {
    /// Non-trivial games need `0 < q < 1`. Trivial games induce the uniform
    /// PMF, so `q` is forced to `0` (empty set) or `1` (full set).
    pub fn new(ne: EquilibriaSet, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidModel(format!("q={q} outside [0,1]")));
        }
        if ne.is_empty() {
            return Ok(Self { ne, q: 0.0 });
        }
        if ne.proportion() == 1.0 {
            return Ok(Self { ne, q: 1.0 });
        }
        if q == 0.0 || q == 1.0 {
            return Err(Error::InvalidModel(format!(
                "q={q} with {} of {} equilibria does not define a PMF",
                ne.len(),
                ne.space_size()
            )));
        }
        Ok(Self { ne, q })
    }

    pub fn equilibria(&self) -> &EquilibriaSet {
        &self.ne
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.ne.n()
    }

    pub fn is_trivial(&self) -> bool {
        self.ne.is_trivial()
    }

    /// `q > pi(G)`, the identifiability condition.
    pub fn is_identifiable(&self) -> bool {
        !self.is_trivial() && self.q > self.ne.proportion()
    }

    pub fn pmf_index(&self, index: u64) -> f64 {
        let total = self.ne.space_size();
        if self.is_trivial() {
            return 1.0 / total;
        }
        let k = self.ne.len() as f64;
        if self.ne.contains(index) {
            self.q / k
        } else {
            (1.0 - self.q) / (total - k)
        }
    }
}

pub fn pmf(model: &MixtureModel, x: &JointAction) -> Result<f64> {
    check_dim(model.n(), x.len())?;
    Ok(model.pmf_index(x.index()))
}

/// Draws `m` i.i.d. joint actions; identical seeds give identical datasets.
pub fn sample(model: &MixtureModel, seed: u64, m: usize) -> Result<JointActionDataset> {
    if m == 0 {
        return Err(Error::Argument("sample size must be >= 1".into()));
    }
    let n = model.n();
    check_cap("sampling", n, ENUMERATION_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 1u64 << n;
    let ne = model.equilibria();
    // Dense equilibria sets make rejection slow, so list the complement.
    let complement: Option<Vec<u64>> = (!model.is_trivial() && ne.len() as u64 * 2 > total)
        .then(|| (0..total).filter(|&i| !ne.contains(i)).collect());

    let samples = (0..m)
        .map(|_| {
            if model.is_trivial() {
                return rng.random_range(0..total);
            }
            if rng.random::<f64>() < model.q() {
                ne.members()[rng.random_range(0..ne.len())]
            } else if let Some(c) = &complement {
                c[rng.random_range(0..c.len())]
            } else {
                loop {
                    let candidate = rng.random_range(0..total);
                    if !ne.contains(candidate) {
                        break candidate;
                    }
                }
            }
        })
        .collect();
    JointActionDataset::from_indices(n, samples)
}

/// Fraction of samples that are equilibria.
pub fn empirical_proportion(ne: &EquilibriaSet, dataset: &JointActionDataset) -> Result<f64> {
    check_dim(ne.n(), dataset.n())?;
    let hits: usize = dataset
        .unique()
        .iter()
        .filter(|(idx, _)| ne.contains(*idx))
        .map(|(_, c)| c)
        .sum();
    Ok(hits as f64 / dataset.len() as f64)
}

/// `a log(a/b)` with `0 log 0 = 0` and `+inf` when `b = 0 < a`.
fn rel_entropy_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// KL divergence between Bernoulli(p1) and Bernoulli(p2), in nats.
pub fn kl_bernoulli(p1: f64, p2: f64) -> f64 {
    rel_entropy_term(p1, p2) + rel_entropy_term(1.0 - p1, 1.0 - p2)
}

/// Shrinks `pi_hat = 1` so the fitted model stays a valid PMF.
pub fn optimal_q(pi_hat: f64, m: usize) -> f64 {
    pi_hat.min(1.0 - 1.0 / (2.0 * m as f64))
}

/// Average log-likelihood `KL(pi_hat||pi) - KL(pi_hat||q) - n log 2`.
///
/// Trivial games score `-n log 2` regardless of `q`. For `q` on the boundary
/// the value is the limit of the expression and may be `-inf`.
pub fn avg_log_likelihood(ne: &EquilibriaSet, q: f64, dataset: &JointActionDataset) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("q={q} outside [0,1]")));
    }
    let pi_hat = empirical_proportion(ne, dataset)?;
    let n = ne.n() as f64;
    if ne.is_trivial() {
        return Ok(-n * LN_2);
    }
    let pi = ne.proportion();
    Ok(kl_bernoulli(pi_hat, pi) - kl_bernoulli(pi_hat, q) - n * LN_2)
}

/// Mean of `log pmf(x)` over the dataset, computed sample by sample.
pub fn direct_avg_log_likelihood(
    model: &MixtureModel,
    dataset: &JointActionDataset,
) -> Result<f64> {
    check_dim(model.n(), dataset.n())?;
    let total: f64 = dataset
        .unique()
        .iter()
        .map(|&(idx, c)| c as f64 * model.pmf_index(idx).ln())
        .sum();
    Ok(total / dataset.len() as f64)
}

/// Bracket `(-pi_hat log pi - log 2, -pi_hat log pi)` on `KL(pi_hat||pi)`.
pub fn kl_bounds(pi_hat: f64, pi: f64) -> Result<(f64, f64)> {
    if !(0.0 < pi && pi < pi_hat && pi_hat <= 1.0) {
        return Err(Error::Argument(format!(
            "bounds need 0 < pi < pi_hat <= 1, got pi={pi}, pi_hat={pi_hat}"
        )));
    }
    let upper = -pi_hat * pi.ln();
    Ok((upper - LN_2, upper))
}

/// Likelihood of a candidate equilibria set with its closed-form mixture
/// parameter, the score every learner is compared by.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub pi: f64,
    pub pi_hat: f64,
    pub q_hat: f64,
    pub loglik: f64,
    /// Whether `0 < pi < q_hat < 1`. Fits outside that set are still scored.
    pub identifiable: bool,
}

pub fn fit(ne: &EquilibriaSet, dataset: &JointActionDataset) -> Result<Fit> {
    let pi_hat = empirical_proportion(ne, dataset)?;
    let q_hat = optimal_q(pi_hat, dataset.len());
    let loglik = avg_log_likelihood(ne, q_hat, dataset)?;
    let pi = ne.proportion();
    Ok(Fit {
        pi,
        pi_hat,
        q_hat,
        loglik,
        identifiable: 0.0 < pi && pi < q_hat && q_hat < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coord_ne() -> EquilibriaSet {
        EquilibriaSet::new(2, vec![0, 3]).unwrap()
    }

    /// (+1,+1) x3, (-1,-1) x2, (+1,-1) x1 with player 0 as the first entry.
    fn coord_data() -> JointActionDataset {
        JointActionDataset::from_indices(2, vec![3, 3, 3, 0, 0, 1]).unwrap()
    }

    #[test]
    fn pmf_values() {
        let trivial = MixtureModel::new(EquilibriaSet::full(3).unwrap(), 0.3).unwrap();
        assert_eq!(trivial.pmf_index(5), 0.125);
        let m = MixtureModel::new(coord_ne(), 0.75).unwrap();
        assert_eq!(m.pmf_index(0), 0.375);
        assert_eq!(m.pmf_index(1), 0.125);
        let m3 = MixtureModel::new(EquilibriaSet::new(3, vec![0, 7]).unwrap(), 0.5).unwrap();
        assert_eq!(m3.pmf_index(7), 0.25);
        assert!((m3.pmf_index(1) - 0.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_models() {
        assert!(matches!(
            MixtureModel::new(coord_ne(), 1.0),
            Err(Error::InvalidModel(_))
        ));
        assert!(MixtureModel::new(coord_ne(), 0.0).is_err());
        assert!(MixtureModel::new(coord_ne(), 1.5).is_err());
        assert_eq!(
            MixtureModel::new(EquilibriaSet::empty(2), 0.4).unwrap().q(),
            0.0
        );
    }

    #[test]
    fn sampling_is_deterministic_and_respects_q() {
        let m = MixtureModel::new(coord_ne(), 0.6).unwrap();
        assert_eq!(sample(&m, 9, 50).unwrap(), sample(&m, 9, 50).unwrap());
        let ne = EquilibriaSet::new(4, vec![0, 3, 12, 15]).unwrap();
        let m = MixtureModel::new(ne.clone(), 0.7).unwrap();
        let d = sample(&m, 1, 10_000).unwrap();
        let frac = empirical_proportion(&ne, &d).unwrap();
        assert!((frac - 0.7).abs() <= 0.02, "{frac}");
        // dense set goes through the complement list
        let dense = EquilibriaSet::new(2, vec![0, 1, 2]).unwrap();
        let d = sample(&MixtureModel::new(dense.clone(), 0.9).unwrap(), 3, 2000).unwrap();
        assert!(d.samples().contains(&3));
    }

    #[test]
    fn empirical_proportions() {
        assert!(
            (empirical_proportion(&coord_ne(), &coord_data()).unwrap() - 5.0 / 6.0).abs() < 1e-15
        );
        assert_eq!(
            empirical_proportion(&EquilibriaSet::empty(2), &coord_data()).unwrap(),
            0.0
        );
    }

    #[test]
    fn bernoulli_kl() {
        assert_eq!(kl_bernoulli(0.3, 0.3), 0.0);
        assert!((kl_bernoulli(0.75, 0.5) - 0.130812).abs() < 1e-6);
        assert!((kl_bernoulli(1.0, 0.5) - LN_2).abs() < 1e-15);
        assert_eq!(kl_bernoulli(0.5, 0.0), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.0, 0.0), 0.0);
    }

    #[test]
    fn likelihood_values() {
        let ll = avg_log_likelihood(&coord_ne(), 5.0 / 6.0, &coord_data()).unwrap();
        assert!((ll - (-1.143708)).abs() < 1e-6, "{ll}");
        let d = JointActionDataset::from_indices(2, vec![3, 0, 3, 1]).unwrap();
        let ll = avg_log_likelihood(&coord_ne(), 0.75, &d).unwrap();
        assert!((ll - (-1.255482)).abs() < 1e-6, "{ll}");
        // pi_hat = pi, q = pi_hat
        let d = JointActionDataset::from_indices(2, vec![3, 1]).unwrap();
        let ll = avg_log_likelihood(&coord_ne(), 0.5, &d).unwrap();
        assert!((ll + 2.0 * LN_2).abs() < 1e-15);
        let direct =
            direct_avg_log_likelihood(&MixtureModel::new(coord_ne(), 0.3).unwrap(), &coord_data())
                .unwrap();
        let eq7 = avg_log_likelihood(&coord_ne(), 0.3, &coord_data()).unwrap();
        assert!((direct - eq7).abs() < 1e-12);
    }

    #[test]
    fn q_shrinkage() {
        assert_eq!(optimal_q(1.0, 50), 0.99);
        assert_eq!(optimal_q(0.75, 4), 0.75);
        assert_eq!(optimal_q(0.9, 5), 0.9);
    }

    #[test]
    fn kl_bounds_bracket() {
        let (lo, hi) = kl_bounds(0.75, 0.25).unwrap();
        assert!((lo - 0.346574).abs() < 1e-6 && (hi - 1.039721).abs() < 1e-6);
        let kl = kl_bernoulli(0.75, 0.25);
        assert!((kl - 0.549306).abs() < 1e-6 && lo < kl && kl < hi);
        let (_, hi) = kl_bounds(1.0, 0.5f64.powi(7)).unwrap();
        assert!((hi - 7.0 * LN_2).abs() < 1e-12);
        let pi = 0.75f64.powi(9);
        let (lo, hi) = kl_bounds(0.9, pi).unwrap();
        let kl = kl_bernoulli(0.9, pi);
        assert!(lo < kl && kl < hi);
        assert!(kl_bounds(0.2, 0.3).is_err());
    }

    #[test]
    fn fit_flags_non_identifiable() {
        let f = fit(&coord_ne(), &coord_data()).unwrap();
        assert!(f.identifiable);
        let bad = JointActionDataset::from_indices(2, vec![1, 2, 1, 3]).unwrap();
        let f = fit(&coord_ne(), &bad).unwrap();
        assert!(!f.identifiable);
        assert!(f.loglik.is_finite());
    }
}
