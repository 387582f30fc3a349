use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelFeatures};
use crate::metrics::{accuracy, pseudo_label_accuracy};
use crate::model::{forward, BackboneConfig, GraphInput, Method, Mode, ModelParams};
use crate::rng::{seeded, stream};
use crate::tensor::Tensor;
use crate::train::confidence::{gate_pseudo_labels, ConfidenceVariant, PseudoState};
use crate::train::loss::composite_loss;
use crate::train::optim::{cosine_lr, Adam};
use crate::train::selection::select_training_nodes;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Fraction of labeled nodes used as prediction targets each epoch.
    pub alpha: f64,
    /// Epoch at which the training confidence reaches 0.5.
    pub delta: f64,
    /// Pseudo-label threshold.
    pub threshold: f64,
    /// Weight of the pseudo-label loss.
    pub lambda: f64,
    pub lr: f64,
    pub lr_min: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub self_training: bool,
    /// Split labeled nodes into targets and connected nodes each epoch.
    /// When off, every labeled node is both connected and predicted.
    pub node_selection: bool,
    pub confidence: ConfidenceVariant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            delta: 10.0,
            threshold: 0.7,
            lambda: 0.5,
            lr: 0.01,
            lr_min: 0.0,
            max_epochs: 200,
            patience: 50,
            seed: 0,
            self_training: false,
            node_selection: true,
            confidence: ConfidenceVariant::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.alpha) {
            return Err(Error::config("alpha", format!("{} outside (0, 1)", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", format!("{} must be positive", self.delta)));
        }
        if !open_unit(self.threshold) {
            return Err(Error::config("threshold", format!("{} outside (0, 1)", self.threshold)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", format!("{} must be >= 0", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", format!("{} must be positive", self.lr)));
        }
        if !(self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return Err(Error::config("lr_min", format!("{} outside [0, lr]", self.lr_min)));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: Option<f64>,
    pub num_pseudo: usize,
    pub tc: f64,
    pub pseudo_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the best validation accuracy.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub history: Vec<EpochRecord>,
}

/// Deterministic predictions and representations.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub probs: Tensor,
    pub z_node: Tensor,
    pub z_label: Option<Tensor>,
}

/// Eval-mode forward pass exposing the labels of `connected`.
pub fn infer_with(
    g: &Graph,
    label_features: &LabelFeatures,
    method: Method,
    backbone: &BackboneConfig,
    params: &ModelParams,
    connected: &[usize],
) -> Result<Inference> {
    let input = GraphInput::new(method, backbone.kind, g, connected)?;
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    // Eval mode never draws from the generator.
    let mut rng = seeded(0, 0);
    let out = forward(&mut tape, backbone, &vars, g, label_features, &input, Mode::Eval, &mut rng)?;
    Ok(Inference {
        probs: tape.value(out.probs).clone(),
        z_node: tape.value(out.z_node).clone(),
        z_label: out.z_label.map(|z| tape.value(z).clone()),
    })
}

/// Inference with every training node exposed.
pub fn infer(
    g: &Graph,
    label_features: &LabelFeatures,
    method: Method,
    backbone: &BackboneConfig,
    params: &ModelParams,
) -> Result<Inference> {
    let connected = if method == Method::Vanilla { &[][..] } else { g.train_nodes() };
    infer_with(g, label_features, method, backbone, params, connected)
}

fn split_accuracy(probs: &Tensor, g: &Graph, nodes: &[usize]) -> Result<f64> {
    let pred = probs.select_rows(nodes)?.argmax_rows();
    let truth: Vec<usize> = nodes.iter().map(|&v| g.label(v).expect("split nodes are labeled")).collect();
    accuracy(&pred, &truth)
}

/// Full-batch training with per-epoch node selection, optional
/// self-training, Adam under a cosine schedule, and early stopping on
/// validation accuracy.
pub fn train(
    g: &Graph,
    label_features: &LabelFeatures,
    method: Method,
    backbone: &BackboneConfig,
    config: &TrainConfig,
    init: ModelParams,
) -> Result<TrainOutcome> {
    backbone.validate()?;
    config.validate()?;
    let labeled = g.train_nodes().to_vec();
    let valid = g.splits().valid.clone();
    let test = g.splits().test.clone();
    if valid.is_empty() {
        return Err(Error::Contract("training needs a non-empty validation split".into()));
    }
    if labeled.is_empty() {
        return Err(Error::Contract("training needs a non-empty train split".into()));
    }
    let unlabeled = g.non_train_nodes();

    let mut select_rng = seeded(config.seed, stream::SELECTION);
    let mut step_rng = seeded(config.seed, stream::STEP);
    let mut params = init;
    let mut adam = Adam::new(params.tensors());

    let mut last = infer(g, label_features, method, backbone, &params)?;
    let mut best = (params.clone(), 0usize, f64::NEG_INFINITY);
    let mut since_best = 0usize;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        let lr = cosine_lr(epoch - 1, config.max_epochs, config.lr, config.lr_min);
        let (targets, connected) = match method {
            Method::Vanilla => (labeled.clone(), Vec::new()),
            _ if !config.node_selection => (labeled.clone(), labeled.clone()),
            _ => {
                let s = select_training_nodes(&labeled, config.alpha, &mut select_rng)?;
                (s.targets, s.connected)
            }
        };

        let pseudo = if config.self_training {
            let tc = config.confidence.tc(epoch, config.delta);
            gate_pseudo_labels(&last.probs, &unlabeled, tc, config.threshold)
        } else {
            PseudoState { members: Vec::new(), tc: 0.0 }
        };

        let input = GraphInput::new(method, backbone.kind, g, &connected)?;
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let out = forward(&mut tape, backbone, &vars, g, label_features, &input, Mode::Train, &mut step_rng)?;
        let target_labels: Vec<(usize, usize)> =
            targets.iter().map(|&v| (v, g.label(v).expect("train nodes are labeled"))).collect();
        let loss =
            composite_loss(&mut tape, out.probs, &target_labels, &pseudo, config.lambda, config.confidence.uses_ec())?;
        let loss_value = tape.value(loss).item()?;
        if !loss_value.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss_value} at epoch {epoch}")));
        }
        let mut grads = tape.backward(loss)?;
        let grads: Vec<Tensor> =
            vars.all().into_iter().map(|v| grads.take(v).expect("every parameter has a gradient")).collect();
        adam.step(&mut params.tensors_mut(), &grads, lr)?;

        last = infer(g, label_features, method, backbone, &params)?;
        let val_acc = split_accuracy(&last.probs, g, &valid)?;
        let record = EpochRecord {
            epoch,
            lr,
            loss: loss_value,
            train_acc: split_accuracy(&last.probs, g, &labeled)?,
            val_acc,
            test_acc: if test.is_empty() { None } else { Some(split_accuracy(&last.probs, g, &test)?) },
            num_pseudo: pseudo.len(),
            tc: pseudo.tc,
            pseudo_acc: pseudo_label_accuracy(&pseudo, g.labels()).map(|p| p.accuracy),
        };
        history.push(record);

        if val_acc > best.2 {
            best = (params.clone(), epoch, val_acc);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let (params, best_epoch, best_val_acc) = best;
    Ok(TrainOutcome { params, best_epoch, best_val_acc, history })
}
