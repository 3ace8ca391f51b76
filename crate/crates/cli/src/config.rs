//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to end of line
//! source = synthetic          # or: votes
//! truth = random              # random | stand_in_n4 | stand_in_n9
//! n = 4
//! density = 0.5
//! p_plus = 0.5
//! q_g = 0.9
//! m_train = 50
//! m_val = 50
//! m_test = 50
//! repetitions = 10
//! seed = 1
//! votes_file = senate.csv     # relative to the config file
//! votes_subset = 20
//! votes_seed = 7
//! methods = sample_picking, ind_logistic, sim_logistic
//! rho_grid = default          # or a comma list
//! large_n_rho = 0.0006
//! sigmoid_alpha = 0.1
//! sigmoid_beta = 0.001
//! sigmoid_step = 0.1
//! sigmoid_iters = 500
//! sigmoid_restarts = 5
//! convex_max_iters = 5000
//! census_cache = census4.txt
//! timing = false
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lig_core::ConvexMethod;
use serde::{Deserialize, Serialize};

use crate::synthetic::{SyntheticSpec, TruthSource};
use crate::votes::Subset;
use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    SamplePicking,
    Exhaustive,
    SigmoidLikelihood,
    SigmoidEmpirical,
    Convex(ConvexMethodKey),
}

/// `ConvexMethod` with a total order, for sorted report emission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConvexMethodKey {
    IndSvm,
    SimSvm,
    IndLogistic,
    SimLogistic,
}

impl ConvexMethodKey {
    pub fn method(self) -> ConvexMethod {
        match self {
            ConvexMethodKey::IndSvm => ConvexMethod::IndSvm,
            ConvexMethodKey::SimSvm => ConvexMethod::SimSvm,
            ConvexMethodKey::IndLogistic => ConvexMethod::IndLogistic,
            ConvexMethodKey::SimLogistic => ConvexMethod::SimLogistic,
        }
    }

    fn from_method(m: ConvexMethod) -> Self {
        match m {
            ConvexMethod::IndSvm => ConvexMethodKey::IndSvm,
            ConvexMethod::SimSvm => ConvexMethodKey::SimSvm,
            ConvexMethod::IndLogistic => ConvexMethodKey::IndLogistic,
            ConvexMethod::SimLogistic => ConvexMethodKey::SimLogistic,
        }
    }
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::SamplePicking,
        Method::Exhaustive,
        Method::SigmoidLikelihood,
        Method::SigmoidEmpirical,
        Method::Convex(ConvexMethodKey::IndSvm),
        Method::Convex(ConvexMethodKey::SimSvm),
        Method::Convex(ConvexMethodKey::IndLogistic),
        Method::Convex(ConvexMethodKey::SimLogistic),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SamplePicking => "sample_picking",
            Method::Exhaustive => "exhaustive",
            Method::SigmoidLikelihood => "sigmoid_likelihood",
            Method::SigmoidEmpirical => "sigmoid_empirical",
            Method::Convex(c) => c.method().name(),
        }
    }

    /// Whether the method is trained along the regularization path.
    pub fn uses_rho(self) -> bool {
        !matches!(self, Method::SamplePicking | Method::Exhaustive)
    }

    pub fn convex(m: ConvexMethod) -> Self {
        Method::Convex(ConvexMethodKey::from_method(m))
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown method `{s}`")))
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Votes {
        /// As written in the config; resolved against `base_dir` when read.
        file: String,
        subset: Option<Subset>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothSettings {
    pub alpha: f64,
    pub beta: f64,
    pub step: f64,
    pub max_iters: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub rho_grid: Vec<f64>,
    /// Used without selection when `n` is too large to score likelihoods.
    pub large_n_rho: f64,
    pub smooth: SmoothSettings,
    pub convex_max_iters: usize,
    pub census_cache: Option<String>,
    pub timing: bool,
    /// Directory relative paths are resolved against; not echoed.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Ten log-spaced points on `[1e-4, 1]` plus `6e-4`, ascending.
pub fn default_rho_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..10)
        .map(|k| 10f64.powf(-4.0 + 4.0 * k as f64 / 9.0))
        .collect();
    grid.push(0.0006);
    grid.sort_by(f64::total_cmp);
    grid
}

const KEYS: &[&str] = &[
    "source",
    "truth",
    "n",
    "density",
    "p_plus",
    "q_g",
    "m_train",
    "m_val",
    "m_test",
    "repetitions",
    "seed",
    "votes_file",
    "votes_subset",
    "votes_seed",
    "methods",
    "rho_grid",
    "large_n_rho",
    "sigmoid_alpha",
    "sigmoid_beta",
    "sigmoid_step",
    "sigmoid_iters",
    "sigmoid_restarts",
    "convex_max_iters",
    "census_cache",
    "timing",
];

struct Entries {
    map: BTreeMap<String, (u64, String)>,
}

impl Entries {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse().map_err(|_| {
                HarnessError::Config(format!("line {line}: cannot parse `{key} = {raw}`"))
            }),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line_no = k as u64 + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {line_no}: expected `key = value`"))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(HarnessError::Config(format!(
                    "line {line_no}: unknown key `{key}`"
                )));
            }
            if map
                .insert(key.to_string(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(HarnessError::Config(format!(
                    "line {line_no}: duplicate key `{key}`"
                )));
            }
        }
        let e = Entries { map };

        let source = match e.raw("source").unwrap_or("synthetic") {
            "synthetic" => {
                let truth_name = e.raw("truth").unwrap_or("random");
                let truth = TruthSource::parse(truth_name)
                    .ok_or_else(|| HarnessError::Config(format!("unknown truth `{truth_name}`")))?;
                let default_n = match truth {
                    TruthSource::StandInN4 => 4,
                    TruthSource::StandInN9 => 9,
                    TruthSource::Random => 0,
                };
                DataSource::Synthetic(SyntheticSpec {
                    n: e.get("n", default_n)?,
                    density: e.get("density", 0.5)?,
                    p_plus: e.get("p_plus", 0.5)?,
                    q_g: e.get("q_g", 0.9)?,
                    m_train: e.get("m_train", 50)?,
                    m_val: e.get("m_val", 50)?,
                    m_test: e.get("m_test", 50)?,
                    repetitions: e.get("repetitions", 1)?,
                    seed: e.get("seed", 0)?,
                    truth,
                })
            }
            "votes" => {
                let file = e
                    .raw("votes_file")
                    .ok_or_else(|| HarnessError::Config("votes source needs votes_file".into()))?
                    .to_string();
                let subset = match e.raw("votes_subset") {
                    None => None,
                    Some(_) => Some(Subset {
                        size: e.get("votes_subset", 0)?,
                        seed: e.get("votes_seed", 0)?,
                    }),
                };
                DataSource::Votes { file, subset }
            }
            other => return Err(HarnessError::Config(format!("unknown source `{other}`"))),
        };

        let methods = match e.raw("methods") {
            None => Method::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<Method>>>()?,
        };
        if methods.is_empty() {
            return Err(HarnessError::Config("methods list is empty".into()));
        }
        let rho_grid = match e.raw("rho_grid") {
            None | Some("default") => default_rho_grid(),
            Some(list) => {
                let mut g = list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| *v >= 0.0 && v.is_finite())
                            .ok_or_else(|| HarnessError::Config(format!("bad rho `{}`", s.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            }
        };
        Ok(Self {
            source,
            methods,
            rho_grid,
            large_n_rho: e.get("large_n_rho", 0.0006)?,
            smooth: SmoothSettings {
                alpha: e.get("sigmoid_alpha", 0.1)?,
                beta: e.get("sigmoid_beta", 0.001)?,
                step: e.get("sigmoid_step", 0.1)?,
                max_iters: e.get("sigmoid_iters", 500)?,
                restarts: e.get("sigmoid_restarts", 5)?,
            },
            convex_max_iters: e.get("convex_max_iters", 5000)?,
            census_cache: e.raw("census_cache").map(str::to_string),
            timing: e.get("timing", false)?,
            base_dir,
        })
    }

    /// Seed of the data source, reused to derive learner seeds.
    pub fn base_seed(&self) -> u64 {
        match &self.source {
            DataSource::Synthetic(spec) => spec.seed,
            DataSource::Votes { subset, .. } => subset.map_or(0, |s| s.seed),
        }
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
