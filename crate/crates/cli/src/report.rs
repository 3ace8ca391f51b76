//! Report rows, aggregates and their JSON / CSV emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use lig_core::EvalMetrics;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;
/// Magnitude non-finite metrics are clipped to for display.
pub const CLIP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub kl_to_truth: Option<f64>,
    pub kl_clipped: bool,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub ne_count: Option<u64>,
    pub pi_hat: f64,
    pub test_loglik: Option<f64>,
    pub test_loglik_clipped: bool,
}

fn clip(v: Option<f64>) -> (Option<f64>, bool) {
    match v {
        Some(x) if !x.is_finite() => (Some(x.signum() * CLIP), true),
        other => (other, false),
    }
}

impl From<EvalMetrics> for ReportMetrics {
    fn from(m: EvalMetrics) -> Self {
        let (kl_to_truth, kl_clipped) = clip(m.kl_to_truth);
        let (test_loglik, test_loglik_clipped) = clip(m.test_loglik);
        Self {
            kl_to_truth,
            kl_clipped,
            precision: m.precision,
            recall: m.recall,
            ne_count: m.ne_count,
            pi_hat: m.pi_hat,
            test_loglik,
            test_loglik_clipped,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub rho: Option<f64>,
    pub rep: usize,
    pub selected: bool,
    /// Mixture parameter fitted on the training split.
    pub q: f64,
    pub train_pi_hat: f64,
    pub val_loglik: Option<f64>,
    /// Players flagged as degenerate and given a pure-bias row.
    pub degenerate_players: usize,
    pub metrics: ReportMetrics,
    /// Training wall time; only recorded when `timing = true`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub n: usize,
    pub seed: u64,
    pub ne_count: usize,
    pub pi: f64,
    pub q_g: f64,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub n: usize,
    /// `validation_loglik`, or `fixed` when `n` is too large to score.
    pub selection_rule: String,
    pub truth: Option<TruthSummary>,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ResultRow {
    fn metric_values(&self) -> Vec<(&'static str, Option<f64>)> {
        let m = &self.metrics;
        vec![
            ("kl_to_truth", m.kl_to_truth),
            ("precision", m.precision),
            ("recall", m.recall),
            ("ne_count", m.ne_count.map(|c| c as f64)),
            ("pi_hat", Some(m.pi_hat)),
            ("test_loglik", m.test_loglik),
            ("val_loglik", self.val_loglik),
            ("train_pi_hat", Some(self.train_pi_hat)),
            ("q", Some(self.q)),
        ]
    }
}

/// Mean and sample standard deviation of each metric over selected rows.
pub fn aggregate(rows: &[ResultRow], methods: &[Method]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &method in methods {
        let chosen: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.method == method && r.selected)
            .collect();
        let Some(first) = chosen.first() else {
            continue;
        };
        for (k, (metric, _)) in first.metric_values().into_iter().enumerate() {
            let vals: Vec<f64> = chosen
                .iter()
                .filter_map(|r| r.metric_values()[k].1)
                .collect();
            if vals.is_empty() {
                continue;
            }
            let c = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / c;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(Aggregate {
                method,
                metric: metric.to_string(),
                count: vals.len(),
                mean,
                std,
            });
        }
    }
    out
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Long format: one line per `(method, rho, rep, metric)`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "rho", "rep", "selected", "metric", "value"])?;
        for r in &self.rows {
            let rho = r.rho.map(|v| v.to_string()).unwrap_or_default();
            for (metric, v) in r.metric_values() {
                let Some(v) = v else { continue };
                w.write_record([
                    r.method.name(),
                    &rho,
                    &r.rep.to_string(),
                    if r.selected { "1" } else { "0" },
                    metric,
                    &v.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::File::create(dir.join("report.json"))?.write_all(self.to_json()?.as_bytes())?;
        fs::File::create(dir.join("report.csv"))?.write_all(self.to_csv()?.as_bytes())?;
        Ok(())
    }
}
