use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::graph::{compute_homophily, load_dataset, Graph, LabelFeatures};
use crate::metrics::{graph_difference, EvalReport};
use crate::model::{Method, ModelParams};
use crate::rng::{seeded, stream};
use crate::synthetic::generate_synthetic;
use crate::train::{infer, train, ConfidenceVariant, EpochRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

/// Final metrics of one seed, from inference with the best parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub test_macro_f1: f64,
    /// Graph difference over test nodes.
    pub gd_test: f64,
    /// Graph difference over every labeled node.
    pub gd_all: f64,
    pub ld_test: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: Option<SeedMetrics>,
    /// `CODE: message` when the run aborted.
    pub error: Option<String>,
    #[serde(skip)]
    pub history: Vec<EpochRecord>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub train_acc: Option<MeanStd>,
    pub val_acc: Option<MeanStd>,
    pub test_acc: Option<MeanStd>,
    pub test_macro_f1: Option<MeanStd>,
    pub gd_test: Option<MeanStd>,
    pub gd_all: Option<MeanStd>,
    pub failed_seeds: Vec<u64>,
}

impl Aggregate {
    pub fn over(seeds: &[SeedResult]) -> Self {
        let ok: Vec<&SeedMetrics> = seeds.iter().filter_map(|s| s.metrics.as_ref()).collect();
        let stat = |f: fn(&SeedMetrics) -> f64| MeanStd::of(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
        Self {
            train_acc: stat(|m| m.train_acc),
            val_acc: stat(|m| m.val_acc),
            test_acc: stat(|m| m.test_acc),
            test_macro_f1: stat(|m| m.test_macro_f1),
            gd_test: stat(|m| m.gd_test),
            gd_all: stat(|m| m.gd_all),
            failed_seeds: seeds.iter().filter(|s| s.metrics.is_none()).map(|s| s.seed).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// The resolved configuration, every default explicit.
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

impl RunResult {
    pub fn test_acc_mean(&self) -> Option<f64> {
        self.aggregate.test_acc.map(|m| m.mean)
    }
}

/// Trains and evaluates one seed. Training failures are recorded rather
/// than propagated.
pub fn run_seed(g: &Graph, config: &ExperimentConfig, seed: u64) -> SeedResult {
    let start = Instant::now();
    let mut history = Vec::new();
    let metrics = seed_metrics(g, config, seed, &mut history);
    let wall_clock_secs = start.elapsed().as_secs_f64();
    match metrics {
        Ok(m) => SeedResult { seed, metrics: Some(m), error: None, history, wall_clock_secs },
        Err(e) => {
            SeedResult { seed, metrics: None, error: Some(format!("{}: {e}", e.code())), history, wall_clock_secs }
        }
    }
}

fn seed_metrics(
    g: &Graph,
    config: &ExperimentConfig,
    seed: u64,
    history: &mut Vec<EpochRecord>,
) -> Result<SeedMetrics> {
    let backbone = config.backbone_config();
    let train_cfg = config.train_config(seed);
    let labels = LabelFeatures::one_hot(g.num_classes());
    let init = ModelParams::init(
        config.method,
        &backbone,
        g.feature_dim(),
        labels.dim(),
        g.num_classes(),
        &mut seeded(seed, stream::INIT),
    );
    let outcome = train(g, &labels, config.method, &backbone, &train_cfg, init)?;
    *history = outcome.history.clone();
    let inference = infer(g, &labels, config.method, &backbone, &outcome.params)?;
    let splits = g.splits();
    if splits.test.is_empty() {
        return Err(Error::Contract("evaluation needs a non-empty test split".into()));
    }
    let test = EvalReport::compute(g, &inference.probs, &inference.z_node, &splits.test)?;
    let train_report = EvalReport::compute(g, &inference.probs, &inference.z_node, &splits.train)?;
    let val_report = EvalReport::compute(g, &inference.probs, &inference.z_node, &splits.valid)?;
    let all: Vec<usize> = (0..g.num_nodes()).collect();
    Ok(SeedMetrics {
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len(),
        train_acc: train_report.accuracy,
        val_acc: val_report.accuracy,
        test_acc: test.accuracy,
        test_macro_f1: test.macro_f1,
        gd_test: test.gd,
        gd_all: graph_difference(&inference.z_node, g.labels(), &all, g.num_classes())?,
        ld_test: test.ld,
    })
}

/// Runs every seed of `config` on `g`, in parallel, in seed order.
pub fn run_on_graph(g: &Graph, config: &ExperimentConfig) -> Result<RunResult> {
    let config = config.clone().resolve()?;
    let seeds: Vec<SeedResult> = config.seeds.par_iter().map(|&s| run_seed(g, &config, s)).collect();
    let aggregate = Aggregate::over(&seeds);
    Ok(RunResult { config, seeds, aggregate })
}

/// Loads the dataset and runs every seed, without writing files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    let config = config.clone().resolve()?;
    let g = load_dataset(&config.dataset)?;
    run_on_graph(&g, &config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s: usize,
    pub homophily: f64,
    /// One result per entry of `sweep_methods`, in that order.
    pub results: Vec<(Method, Option<MeanStd>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
    #[serde(skip)]
    pub runs: Vec<Vec<RunResult>>,
}

/// Adds `s` cross-label edges to `base` for each `s` and trains every sweep
/// method on the result.
pub fn run_synthetic_sweep(base: &Graph, s_values: &[usize], config: &ExperimentConfig) -> Result<SweepResult> {
    if s_values.is_empty() {
        return Err(Error::config("s_values", "at least one value is required"));
    }
    let config = config.clone().resolve()?;
    let mut points = Vec::with_capacity(s_values.len());
    let mut runs = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let g = generate_synthetic(base, s, config.synthetic_seed)?;
        let homophily = compute_homophily(&g)?;
        let mut per_method = Vec::new();
        let mut results = Vec::new();
        for &method in &config.sweep_methods {
            let run = run_on_graph(&g, &ExperimentConfig { method, ..config.clone() })?;
            results.push((method, run.aggregate.test_acc));
            per_method.push(run);
        }
        points.push(SweepPoint { s, homophily, results });
        runs.push(per_method);
    }
    Ok(SweepResult { config, points, runs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    /// Every labeled node connected and predicted.
    Tns,
    Tc,
    Ec,
    /// Threshold-only pseudo labeling.
    Both,
}

impl std::str::FromStr for AblationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tns" => Ok(Self::Tns),
            "tc" => Ok(Self::Tc),
            "ec" => Ok(Self::Ec),
            "both" => Ok(Self::Both),
            _ => Err(Error::config("kind", format!("`{s}` is not one of tns, tc, ec, both"))),
        }
    }
}

impl AblationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tns => "tns",
            Self::Tc => "tc",
            Self::Ec => "ec",
            Self::Both => "both",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub kind: AblationKind,
    /// `(variant name, run)` pairs, reference variant first.
    pub variants: Vec<(String, RunResult)>,
}

/// Trains the reference configuration next to the ablated one(s).
pub fn run_ablation_on_graph(g: &Graph, config: &ExperimentConfig, kind: AblationKind) -> Result<AblationResult> {
    let base = config.clone().resolve()?;
    let variants: Vec<(String, ExperimentConfig)> = match kind {
        AblationKind::Tns => {
            if base.method == Method::Vanilla {
                return Err(Error::config("method", "the tns ablation needs a method that uses labels as input"));
            }
            vec![
                ("with_tns".into(), ExperimentConfig { node_selection: true, ..base.clone() }),
                ("without_tns".into(), ExperimentConfig { node_selection: false, ..base.clone() }),
            ]
        }
        AblationKind::Tc | AblationKind::Ec | AblationKind::Both => {
            let ablated = match kind {
                AblationKind::Tc => ConfidenceVariant::NoTc,
                AblationKind::Ec => ConfidenceVariant::NoEc,
                _ => ConfidenceVariant::ThresholdOnly,
            };
            let st = |confidence| ExperimentConfig { self_training: true, confidence, ..base.clone() };
            vec![
                ("full".into(), st(ConfidenceVariant::Full)),
                (format!("without_{}", kind.as_str()), st(ablated)),
                ("no_self_training".into(), ExperimentConfig { self_training: false, ..base.clone() }),
            ]
        }
    };
    let variants =
        variants.into_iter().map(|(name, cfg)| Ok((name, run_on_graph(g, &cfg)?))).collect::<Result<Vec<_>>>()?;
    Ok(AblationResult { kind, variants })
}

pub fn run_ablation(config: &ExperimentConfig, kind: AblationKind) -> Result<AblationResult> {
    let config = config.clone().resolve()?;
    let g = load_dataset(&config.dataset)?;
    run_ablation_on_graph(&g, &config, kind)
}
