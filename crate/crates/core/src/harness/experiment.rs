//! Replication engine: simulate, estimate, score, aggregate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{estimate, EstimatorKind, SampleStats};
use crate::gwishart::{band_posterior, default_k_max};
use crate::harness::config::{Bandwidth, ExperimentConfig};
use crate::matrix::NormKind;
use crate::scenarios::{sample_mvn_with, scenario_truth, substream, ScenarioKind};

/// Mean and standard deviation of one (estimator, norm) error over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub estimator: EstimatorKind,
    pub norm: NormKind,
    pub mean: f64,
    /// Sample standard deviation; 0 when fewer than two replications succeeded.
    pub sd: f64,
    /// False when `sd` is a placeholder (fewer than two successful replications).
    pub sd_defined: bool,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub model: ScenarioKind,
    pub n: usize,
    pub p: usize,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub meta: TableMeta,
    /// Ordered by estimator (config order), then norm (config order).
    pub cells: Vec<CellSummary>,
}

impl ResultTable {
    pub fn cell(&self, estimator: EstimatorKind, norm: NormKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.norm == norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    /// 1-based replication index.
    pub replication: usize,
    /// Estimator name, or `selection` when bandwidth selection failed.
    pub stage: String,
    pub message: String,
}

/// A completed experiment: the summary table plus per-replication detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub table: ResultTable,
    /// Bandwidth used in each replication (`None` if selection failed).
    pub bandwidths: Vec<Option<usize>>,
    pub failures: Vec<ReplicationFailure>,
}

struct ReplicationOutcome {
    k: Option<usize>,
    /// Per estimator: errors per norm, or a failure message.
    errors: Vec<std::result::Result<Vec<f64>, String>>,
    selection_error: Option<String>,
}

/// Runs every replication of `cfg`. Replication `r` draws its data from
/// stream `r` of the configured seed, and results are aggregated in
/// replication order, so the output is independent of the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let scenario = &cfg.scenario;
    let (sigma, omega) = scenario_truth(scenario)?;

    let outcomes: Vec<ReplicationOutcome> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(scenario.seed, r as u64);
            // sigma passed chol inside scenario_truth, sampling cannot fail
            let x = sample_mvn_with(&sigma, scenario.n, &mut rng)
                .expect("scenario covariance is positive definite");
            let stats = SampleStats::from_observations(&x);
            let k = match cfg.bandwidth {
                Bandwidth::Fixed(k) => Ok(k),
                Bandwidth::Auto { k_max } => {
                    let k_max = k_max.unwrap_or_else(|| default_k_max(scenario.p, scenario.n));
                    band_posterior(&stats, &cfg.prior, &cfg.rho_prior, k_max).map(|bp| bp.mode)
                }
            };
            let k = match k {
                Ok(k) => k,
                Err(e) => {
                    return ReplicationOutcome {
                        k: None,
                        errors: vec![Err(e.to_string()); cfg.estimators.len()],
                        selection_error: Some(e.to_string()),
                    }
                }
            };
            let errors = cfg
                .estimators
                .iter()
                .map(|&kind| {
                    estimate(kind, &stats, k, &cfg.prior)
                        .map(|est| {
                            let diff = &est - &omega;
                            cfg.norms.iter().map(|&nk| diff.norm(nk)).collect()
                        })
                        .map_err(|e| e.to_string())
                })
                .collect();
            ReplicationOutcome {
                k: Some(k),
                errors,
                selection_error: None,
            }
        })
        .collect();

    let mut failures = Vec::new();
    for (r, o) in outcomes.iter().enumerate() {
        if let Some(msg) = &o.selection_error {
            failures.push(ReplicationFailure {
                replication: r + 1,
                stage: "selection".into(),
                message: msg.clone(),
            });
            continue;
        }
        for (e, kind) in o.errors.iter().zip(&cfg.estimators) {
            if let Err(msg) = e {
                failures.push(ReplicationFailure {
                    replication: r + 1,
                    stage: kind.name().into(),
                    message: msg.clone(),
                });
            }
        }
    }

    let mut cells = Vec::with_capacity(cfg.estimators.len() * cfg.norms.len());
    for (ei, &estimator) in cfg.estimators.iter().enumerate() {
        for (ni, &norm) in cfg.norms.iter().enumerate() {
            let values: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o.errors[ei].as_ref().ok().map(|v| v[ni]))
                .collect();
            let (mean, sd, sd_defined) = mean_sd(&values);
            cells.push(CellSummary {
                estimator,
                norm,
                mean,
                sd,
                sd_defined,
                successes: values.len(),
                failures: outcomes.len() - values.len(),
            });
        }
    }

    Ok(ExperimentRun {
        config: cfg.clone(),
        table: ResultTable {
            meta: TableMeta {
                model: scenario.kind,
                n: scenario.n,
                p: scenario.p,
                bandwidth: cfg.bandwidth,
                seed: scenario.seed,
                replications: scenario.replications,
            },
            cells,
        },
        bandwidths: outcomes.iter().map(|o| o.k).collect(),
        failures,
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64, bool) {
    match values.len() {
        0 => (f64::NAN, 0.0, false),
        1 => (values[0], 0.0, false),
        m => {
            let mean = values.iter().sum::<f64>() / m as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (mean, var.sqrt(), true)
        }
    }
}
