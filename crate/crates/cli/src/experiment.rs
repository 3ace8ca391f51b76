//! The experiment pipeline: per repetition and method, train along the
//! regularization path, select `rho` on validation data, score on test data.

use std::time::Instant;

use lig_core::analysis::{evaluate, EvalMetrics, METRICS_CAP};
use lig_core::convex::{fix_degenerate, train};
use lig_core::exact::{
    enumerate_influence_games, exhaustive_mle_influence, sample_picking, GameCensus,
};
use lig_core::model::fit;
use lig_core::smooth::{train_sigmoidal, SmoothMode, SmoothTrainConfig};
use lig_core::{
    avg_log_likelihood, enumerate_equilibria, optimal_q, ConvexTrainConfig, EquilibriaSet,
    InfluenceGame, JointActionDataset, MixtureModel, DEFAULT_TOL,
};

use crate::config::{DataSource, ExperimentConfig, Method};
use crate::report::{aggregate, ExperimentReport, ResultRow, TruthSummary, SCHEMA_VERSION};
use crate::synthetic::gen_synthetic;
use crate::votes::ingest_votes;
use crate::{derive_seed, HarnessError, Result};

/// `argmax` over `(rho, value)` pairs; ties go to the larger `rho`.
pub fn select_rho(vals: &[(f64, f64)]) -> Option<f64> {
    vals.iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 > best.1 || (cur.1 == best.1 && cur.0 > best.0) {
                cur
            } else {
                best
            }
        })
        .map(|(rho, _)| rho)
}

/// One train / validation / test split.
pub struct Fold {
    pub train: JointActionDataset,
    pub val: JointActionDataset,
    pub test: JointActionDataset,
}

/// Six train/validation/test assignments of three contiguous thirds.
pub fn six_fold_rotation(data: &JointActionDataset) -> Result<Vec<Fold>> {
    let m = data.len();
    if m < 3 {
        return Err(HarnessError::Config(format!(
            "need at least 3 votes, have {m}"
        )));
    }
    let thirds: Vec<JointActionDataset> = (0..3)
        .map(|k| {
            let pos: Vec<usize> = (k * m / 3..(k + 1) * m / 3).collect();
            data.select(&pos)
        })
        .collect::<lig_core::Result<_>>()?;
    const ORDERS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    Ok(ORDERS
        .iter()
        .map(|o| Fold {
            train: thirds[o[0]].clone(),
            val: thirds[o[1]].clone(),
            test: thirds[o[2]].clone(),
        })
        .collect())
}

/// A trained model. Games are kept for scoring when their equilibria are too
/// many to list.
struct Trained {
    game: Option<InfluenceGame>,
    /// Enumerated equilibria when `n` allows it.
    ne: Option<EquilibriaSet>,
    q: f64,
    train_pi_hat: f64,
    degenerate: usize,
    seconds: f64,
}

fn game_pi_hat(game: &InfluenceGame, data: &JointActionDataset) -> f64 {
    let hits: usize = data
        .unique()
        .iter()
        .filter(|&&(idx, _)| {
            let x = data_action(idx, game.n());
            (0..game.n()).all(|i| x[i] * game.influence(i, &x) >= -DEFAULT_TOL)
        })
        .map(|&(_, c)| c)
        .sum();
    hits as f64 / data.len() as f64
}

fn data_action(idx: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if idx >> i & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

impl Trained {
    fn from_game(
        game: InfluenceGame,
        train: &JointActionDataset,
        degenerate: usize,
    ) -> Result<Self> {
        let n = game.n();
        let (ne, q, train_pi_hat) = if n <= METRICS_CAP {
            let ne = enumerate_equilibria(&game, DEFAULT_TOL)?;
            let f = fit(&ne, train)?;
            (Some(ne), f.q_hat, f.pi_hat)
        } else {
            let p = game_pi_hat(&game, train);
            (None, optimal_q(p, train.len()), p)
        };
        Ok(Self {
            game: Some(game),
            ne,
            q,
            train_pi_hat,
            degenerate,
            seconds: 0.0,
        })
    }

    fn from_set(ne: EquilibriaSet, train: &JointActionDataset) -> Result<Self> {
        let f = fit(&ne, train)?;
        Ok(Self {
            game: None,
            ne: Some(ne),
            q: f.q_hat,
            train_pi_hat: f.pi_hat,
            degenerate: 0,
            seconds: 0.0,
        })
    }

    fn val_loglik(&self, val: &JointActionDataset) -> Result<Option<f64>> {
        Ok(match &self.ne {
            Some(ne) => Some(avg_log_likelihood(ne, self.q, val)?),
            None => None,
        })
    }

    fn evaluate(
        &self,
        test: &JointActionDataset,
        truth: Option<&MixtureModel>,
    ) -> Result<EvalMetrics> {
        match (&self.ne, &self.game) {
            (Some(ne), _) => Ok(evaluate(ne, self.q, test, truth)?),
            (None, Some(g)) => Ok(EvalMetrics {
                kl_to_truth: None,
                precision: None,
                recall: None,
                ne_count: None,
                pi_hat: game_pi_hat(g, test),
                test_loglik: None,
            }),
            (None, None) => unreachable!("sets are always enumerated"),
        }
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    census: Option<&'a GameCensus>,
    truth: Option<&'a MixtureModel>,
}

impl Context<'_> {
    fn train(
        &self,
        method: Method,
        rho: Option<f64>,
        rep: usize,
        data: &JointActionDataset,
    ) -> Result<Trained> {
        let wrap = |source: lig_core::Error| HarnessError::Run {
            method: method.name().to_string(),
            rho,
            rep,
            source,
        };
        let start = Instant::now();
        let rho_v = rho.unwrap_or(0.0);
        let mut t = match method {
            Method::SamplePicking => {
                Trained::from_set(sample_picking(data).map_err(wrap)?.ne, data)?
            }
            Method::Exhaustive => {
                let census = self.census.expect("census built for exhaustive runs");
                Trained::from_set(
                    exhaustive_mle_influence(data, census).map_err(wrap)?.ne,
                    data,
                )?
            }
            Method::SigmoidLikelihood | Method::SigmoidEmpirical => {
                let s = &self.config.smooth;
                let cfg = SmoothTrainConfig {
                    rho: rho_v,
                    step: s.step,
                    max_iters: s.max_iters,
                    seed: derive_seed(self.config.base_seed(), &[rep as u64, 0x5167]),
                    alpha: s.alpha,
                    beta: s.beta,
                    restarts: s.restarts,
                    ..SmoothTrainConfig::default()
                };
                let mode = if method == Method::SigmoidLikelihood {
                    SmoothMode::Likelihood
                } else {
                    SmoothMode::Empirical
                };
                let f = train_sigmoidal(data, &cfg, mode).map_err(wrap)?;
                Trained::from_game(f.game, data, 0)?
            }
            Method::Convex(key) => {
                let mut cfg = ConvexTrainConfig::new(key.method(), rho_v);
                cfg.max_iters = self.config.convex_max_iters;
                let r = train(data, &cfg).map_err(wrap)?;
                let flagged = r.per_player_degenerate.iter().filter(|&&f| f).count();
                let game = fix_degenerate(&r, data).map_err(wrap)?;
                Trained::from_game(game, data, flagged)?
            }
        };
        t.seconds = start.elapsed().as_secs_f64();
        Ok(t)
    }

    fn row(
        &self,
        method: Method,
        rho: Option<f64>,
        rep: usize,
        t: &Trained,
        fold: &Fold,
        val: Option<f64>,
    ) -> Result<ResultRow> {
        let metrics = t.evaluate(&fold.test, self.truth)?;
        Ok(ResultRow {
            method,
            rho,
            rep,
            selected: false,
            q: t.q,
            train_pi_hat: t.train_pi_hat,
            val_loglik: val,
            degenerate_players: t.degenerate,
            metrics: metrics.into(),
            seconds: self.config.timing.then_some(t.seconds),
        })
    }

    fn run_fold(&self, rep: usize, fold: &Fold) -> Result<Vec<ResultRow>> {
        let n = fold.train.n();
        let mut rows = Vec::new();
        for &method in &self.config.methods {
            if !method.uses_rho() {
                let t = self.train(method, None, rep, &fold.train)?;
                let val = t.val_loglik(&fold.val)?;
                let mut row = self.row(method, None, rep, &t, fold, val)?;
                row.selected = true;
                rows.push(row);
                continue;
            }
            if n > METRICS_CAP {
                let rho = self.config.large_n_rho;
                let t = self.train(method, Some(rho), rep, &fold.train)?;
                let mut row = self.row(method, Some(rho), rep, &t, fold, None)?;
                row.selected = true;
                rows.push(row);
                continue;
            }
            let first = rows.len();
            let mut scores = Vec::new();
            for &rho in &self.config.rho_grid {
                let t = self.train(method, Some(rho), rep, &fold.train)?;
                let val = t
                    .val_loglik(&fold.val)?
                    .expect("enumerable below the metrics cap");
                scores.push((rho, val));
                rows.push(self.row(method, Some(rho), rep, &t, fold, Some(val))?);
            }
            let chosen = select_rho(&scores);
            for r in &mut rows[first..] {
                r.selected = r.rho == chosen;
            }
        }
        Ok(rows)
    }
}

/// Runs `work(k)` for `k in 0..count` on a small thread pool, returning
/// results in index order.
fn parallel_map<T: Send>(count: usize, work: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |p| p.get())
        .min(count.max(1));
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<_> = slots
            .chunks_mut(count.div_ceil(threads).max(1))
            .enumerate()
            .map(|(c, chunk)| {
                let work = &work;
                let base = c * count.div_ceil(threads).max(1);
                s.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(work(base + k));
                    }
                })
            })
            .collect();
        for h in chunks {
            h.join().expect("worker panicked");
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (folds, truth, summary, n) = match &config.source {
        DataSource::Synthetic(spec) => {
            let data = gen_synthetic(spec)?;
            let summary = TruthSummary {
                n: spec.n,
                seed: data.truth_seed,
                ne_count: data.model.equilibria().len(),
                pi: data.model.equilibria().proportion(),
                q_g: spec.q_g,
                weights: (0..spec.n)
                    .map(|i| data.truth.weight_row(i).to_vec())
                    .collect(),
            };
            let folds = data
                .splits
                .into_iter()
                .map(|s| Fold {
                    train: s.train,
                    val: s.val,
                    test: s.test,
                })
                .collect();
            (folds, Some(data.model), Some(summary), spec.n)
        }
        DataSource::Votes { file, subset } => {
            let v = ingest_votes(&config.resolve(file), *subset)?;
            let n = v.dataset.n();
            (six_fold_rotation(&v.dataset)?, None, None, n)
        }
    };

    let census = if config.methods.contains(&Method::Exhaustive) {
        Some(match &config.census_cache {
            Some(path) => GameCensus::load_or_build(&config.resolve(path), n)?,
            None => enumerate_influence_games(n)?,
        })
    } else {
        None
    };
    let ctx = Context {
        config,
        census: census.as_ref(),
        truth: truth.as_ref(),
    };
    let per_fold = parallel_map(folds.len(), |rep| ctx.run_fold(rep, &folds[rep]));
    let mut rows = Vec::new();
    for r in per_fold {
        rows.extend(r?);
    }
    let order = |m: Method| config.methods.iter().position(|&x| x == m);
    rows.sort_by(|a, b| {
        order(a.method)
            .cmp(&order(b.method))
            .then(a.rep.cmp(&b.rep))
            .then(a.rho.unwrap_or(-1.0).total_cmp(&b.rho.unwrap_or(-1.0)))
    });
    let aggregates = aggregate(&rows, &config.methods);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        n,
        selection_rule: if n > METRICS_CAP {
            "fixed"
        } else {
            "validation_loglik"
        }
        .to_string(),
        truth: summary,
        rows,
        aggregates,
    })
}
