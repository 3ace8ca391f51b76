//! Ground-truth games with unit-magnitude signed edges and zero thresholds,
//! plus the train/validation/test samples drawn from them.

use lig_core::{enumerate_equilibria, sample, InfluenceGame, JointActionDataset, MixtureModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{derive_seed, HarnessError, Result};

/// Attempts before giving up on drawing a non-trivial truth.
pub const MAX_ATTEMPTS: u64 = 100;
/// Equilibria are enumerated for truths up to this size.
pub const TRUTH_CAP: usize = 20;

const TRUTH_STREAM: u64 = 0x7472_7574;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    /// Edges present with probability `density`, `+1` with probability `p_plus`.
    Random,
    /// Two coordinated pairs on a 4-player path: 4 equilibria, `pi = 1/4`.
    StandInN4,
    /// A connected 9-player signed graph with 16 equilibria.
    StandInN9,
}

impl TruthSource {
    pub fn name(self) -> &'static str {
        match self {
            TruthSource::Random => "random",
            TruthSource::StandInN4 => "stand_in_n4",
            TruthSource::StandInN9 => "stand_in_n9",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Random, Self::StandInN4, Self::StandInN9]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub density: f64,
    pub p_plus: f64,
    pub q_g: f64,
    pub m_train: usize,
    pub m_val: usize,
    pub m_test: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub truth: TruthSource,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n == 0 || self.n > TRUTH_CAP {
            return bad(format!("n={} must be in 1..={TRUTH_CAP}", self.n));
        }
        for (name, v) in [("density", self.density), ("p_plus", self.p_plus)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name}={v} outside [0,1]"));
            }
        }
        if !(self.q_g > 0.0 && self.q_g < 1.0) {
            return bad(format!("q_g={} outside (0,1)", self.q_g));
        }
        if self.m_train == 0 || self.m_val == 0 || self.m_test == 0 || self.repetitions == 0 {
            return bad("sample sizes and repetitions must be >= 1".into());
        }
        let fixed = match self.truth {
            TruthSource::Random => None,
            TruthSource::StandInN4 => Some(4),
            TruthSource::StandInN9 => Some(9),
        };
        if let Some(k) = fixed.filter(|&k| k != self.n) {
            return bad(format!("{} needs n={k}, got {}", self.truth.name(), self.n));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: JointActionDataset,
    pub val: JointActionDataset,
    pub test: JointActionDataset,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub truth: InfluenceGame,
    pub model: MixtureModel,
    /// Seed that produced the kept truth after regenerations.
    pub truth_seed: u64,
    pub splits: Vec<Split>,
}

fn symmetric(n: usize, edges: &[(usize, usize, f64)]) -> InfluenceGame {
    let mut g = InfluenceGame::zeros(n);
    for &(i, j, w) in edges {
        g.set_weight(i, j, w).expect("valid edge");
        g.set_weight(j, i, w).expect("valid edge");
    }
    g
}

pub fn stand_in_n4() -> InfluenceGame {
    symmetric(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
}

pub fn stand_in_n9() -> InfluenceGame {
    symmetric(
        9,
        &[
            (0, 1, 1.0),
            (0, 8, 1.0),
            (1, 3, 1.0),
            (1, 5, -1.0),
            (2, 4, 1.0),
            (2, 6, -1.0),
            (3, 6, 1.0),
            (4, 5, -1.0),
            (4, 6, -1.0),
            (6, 7, -1.0),
        ],
    )
}

/// Directed edges drawn independently per ordered pair.
pub fn random_truth(n: usize, density: f64, p_plus: f64, seed: u64) -> InfluenceGame {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TRUTH_STREAM]));
    let mut g = InfluenceGame::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                let w = if rng.random_bool(p_plus) { 1.0 } else { -1.0 };
                g.set_weight(i, j, w).expect("finite weight");
            }
        }
    }
    g
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let (truth, truth_seed, ne) = match spec.truth {
        TruthSource::StandInN4 | TruthSource::StandInN9 => {
            let g = if spec.truth == TruthSource::StandInN4 {
                stand_in_n4()
            } else {
                stand_in_n9()
            };
            let ne = enumerate_equilibria(&g, 0.0)?;
            (g, spec.seed, ne)
        }
        TruthSource::Random => {
            let mut found = None;
            for attempt in 0..MAX_ATTEMPTS {
                let seed = spec.seed.wrapping_add(attempt);
                let g = random_truth(spec.n, spec.density, spec.p_plus, seed);
                let ne = enumerate_equilibria(&g, 0.0)?;
                if !ne.is_trivial() {
                    found = Some((g, seed, ne));
                    break;
                }
            }
            found.ok_or_else(|| {
                HarnessError::Config(format!(
                    "no non-trivial truth in {MAX_ATTEMPTS} attempts (n={}, density={})",
                    spec.n, spec.density
                ))
            })?
        }
    };
    let model = MixtureModel::new(ne, spec.q_g)?;
    let splits = (0..spec.repetitions as u64)
        .map(|rep| {
            let draw =
                |stream: u64, m: usize| sample(&model, derive_seed(spec.seed, &[rep, stream]), m);
            Ok(Split {
                train: draw(0, spec.m_train)?,
                val: draw(1, spec.m_val)?,
                test: draw(2, spec.m_test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticData {
        truth,
        model,
        truth_seed,
        splits,
    })
}
