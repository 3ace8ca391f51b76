use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lig_cli::config::{ExperimentConfig, Method};
use lig_cli::synthetic::{gen_synthetic, SyntheticSpec, TruthSource};
use lig_cli::votes::{ingest_votes, Subset};
use lig_core::analysis::{
    generalization_bound, influence_scores, monte_carlo_expected_pi, tpe_bound, WeightDist,
};
use lig_core::convex::{fix_degenerate, train};
use lig_core::exact::{strict_census_count, GameCensus};
use lig_core::{
    enumerate_equilibria, ConvexMethod, ConvexTrainConfig, JointActionDataset, DEFAULT_TOL,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "lig",
    version,
    about = "Learn linear influence games from joint actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ground-truth game and write train/validation/test vote files.
    Gen {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0.5)]
        p_plus: f64,
        #[arg(long, default_value_t = 0.9)]
        q_g: f64,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// random, stand_in_n4 or stand_in_n9
        #[arg(long, default_value = "random")]
        truth: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count equilibria sets realizable by influence games on n <= 4 players.
    Census {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Fit one convex learner to a vote file.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// ind_svm, sim_svm, ind_logistic or sim_logistic
        #[arg(long, default_value = "sim_logistic")]
        method: String,
        #[arg(long, default_value_t = 0.0006)]
        rho: f64,
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a full experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the generalization and equilibrium-proportion bounds.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0.7)]
        q_bar: f64,
        /// Monte Carlo trials for E[pi(G)]; 0 skips the simulation.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_votes(path: &PathBuf, data: &JointActionDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..data.n()).map(|i| format!("p{i}")))?;
    for l in 0..data.len() {
        let x = data.action(l);
        w.write_record(
            x.as_slice()
                .iter()
                .map(|&a| if a > 0 { "yea" } else { "nay" }),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            n,
            density,
            p_plus,
            q_g,
            m,
            seed,
            truth,
            out,
        } => {
            let truth =
                TruthSource::parse(&truth).with_context(|| format!("unknown truth `{truth}`"))?;
            let spec = SyntheticSpec {
                n,
                density,
                p_plus,
                q_g,
                m_train: m,
                m_val: m,
                m_test: m,
                repetitions: 1,
                seed,
                truth,
            };
            let data = gen_synthetic(&spec)?;
            fs::create_dir_all(&out)?;
            let split = &data.splits[0];
            write_votes(&out.join("train.csv"), &split.train)?;
            write_votes(&out.join("val.csv"), &split.val)?;
            write_votes(&out.join("test.csv"), &split.test)?;
            let summary = json!({
                "n": n,
                "truth_seed": data.truth_seed,
                "weights": (0..n).map(|i| data.truth.weight_row(i).to_vec()).collect::<Vec<_>>(),
                "equilibria": data.model.equilibria().members(),
                "q_g": q_g,
            });
            fs::write(
                out.join("truth.json"),
                serde_json::to_string_pretty(&summary)? + "\n",
            )?;
            println!(
                "wrote {} ({} equilibria)",
                out.display(),
                data.model.equilibria().len()
            );
        }
        Command::Census { n, cache } => {
            let census = match cache {
                Some(path) => GameCensus::load_or_build(&path, n)?,
                None => lig_core::exact::enumerate_influence_games(n)?,
            };
            println!("tie-aware influence games (n={n}): {}", census.count());
            println!(
                "strict-threshold influence games (n={n}): {}",
                strict_census_count(n)?
            );
        }
        Command::Train {
            data,
            method,
            rho,
            subset,
            seed,
        } => {
            let method: ConvexMethod = method.parse()?;
            let votes = ingest_votes(&data, subset.map(|size| Subset { size, seed }))?;
            let r = train(&votes.dataset, &ConvexTrainConfig::new(method, rho))?;
            let game = fix_degenerate(&r, &votes.dataset)?;
            let n = game.n();
            let scores = influence_scores(&game)?;
            let ne_count = if n <= 20 {
                Some(enumerate_equilibria(&game, DEFAULT_TOL)?.len())
            } else {
                None
            };
            let out = json!({
                "method": Method::convex(method).name(),
                "rho": rho,
                "players": votes.names,
                "weights": (0..n).map(|i| game.weight_row(i).to_vec()).collect::<Vec<_>>(),
                "thresholds": game.thresholds(),
                "degenerate": r.per_player_degenerate,
                "objective": r.objective,
                "converged": r.converged,
                "ne_count": ne_count,
                "influence": scores.influence,
                "bias": scores.bias,
            });
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let report = lig_cli::experiment::run_experiment(&cfg)?;
            report.write(&out)?;
            println!("wrote {} rows to {}", report.rows.len(), out.display());
        }
        Command::Bounds {
            n,
            m,
            delta,
            q_bar,
            trials,
            seed,
        } => {
            if n == 0 {
                bail!("n must be >= 1");
            }
            let b = generalization_bound(n, m, delta, q_bar)?;
            let mut out = json!({
                "generalization": b,
                "tpe_bound": tpe_bound(n, delta)?,
                "expected_pi_range": [0.5f64.powi(n as i32), 0.75f64.powi(n as i32)],
            });
            if trials > 0 {
                let mc = monte_carlo_expected_pi(n, WeightDist::StandardNormal, trials, seed)?;
                out["monte_carlo"] = json!({
                    "trials": trials,
                    "mean": mc.mean,
                    "std_err": mc.std_err,
                    "ci99": [mc.ci.0, mc.ci.1],
                    "markov_violation_rate": mc.exceedance(tpe_bound(n, delta)?),
                });
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}
