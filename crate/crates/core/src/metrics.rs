//! Classification and representation-smoothness metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;
use crate::train::confidence::PseudoState;

fn check_pair(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::Contract("metric over an empty prediction set".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::dim("metric", format!("{} predictions, {} labels", pred.len(), truth.len())));
    }
    Ok(())
}

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true instances.
    pub support: usize,
}

/// Per-class precision, recall and F1. A ratio with a zero denominator is 0.
pub fn class_scores(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<Vec<ClassScores>> {
    check_pair(pred, truth)?;
    let (mut tp, mut fp, mut fnn) = (vec![0usize; num_classes], vec![0usize; num_classes], vec![0usize; num_classes]);
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::Contract(format!("label pair ({p}, {t}) outside [0, {num_classes})")));
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fnn[t] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok((0..num_classes)
        .map(|c| {
            let precision = ratio(tp[c], tp[c] + fp[c]);
            let recall = ratio(tp[c], tp[c] + fnn[c]);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            ClassScores { precision, recall, f1, support: tp[c] + fnn[c] }
        })
        .collect())
}

/// Unweighted mean of the per-class F1 over all `num_classes` classes.
pub fn macro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    let scores = class_scores(pred, truth, num_classes)?;
    Ok(scores.iter().map(|s| s.f1).sum::<f64>() / num_classes as f64)
}

/// Mean Euclidean distance of the member rows of `z` to their mean row.
pub fn label_difference(z: &Tensor, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::Contract("label difference of an empty class".into()));
    }
    let mut center = vec![0.0; z.cols()];
    for &v in members {
        for (c, x) in center.iter_mut().zip(z.row(v)) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= members.len() as f64);
    let total: f64 =
        members.iter().map(|&v| z.row(v).iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).sum();
    Ok(total / members.len() as f64)
}

/// `LD_c` for every class, `None` for classes with no member in `nodes`.
pub fn class_label_differences(
    z: &Tensor,
    labels: &[Option<usize>],
    nodes: &[usize],
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    let mut members = vec![Vec::new(); num_classes];
    for &v in nodes {
        if let Some(c) = labels[v] {
            members[c].push(v);
        }
    }
    members.iter().map(|m| if m.is_empty() { Ok(None) } else { label_difference(z, m).map(Some) }).collect()
}

/// Mean of `LD_c` over the classes present among the labeled `nodes`.
pub fn graph_difference(z: &Tensor, labels: &[Option<usize>], nodes: &[usize], num_classes: usize) -> Result<f64> {
    let lds: Vec<f64> = class_label_differences(z, labels, nodes, num_classes)?.into_iter().flatten().collect();
    if lds.is_empty() {
        return Err(Error::Contract("graph difference without labeled nodes".into()));
    }
    Ok(lds.iter().sum::<f64>() / lds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBucket {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub correct: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoAccuracy {
    pub accuracy: f64,
    pub evaluated: usize,
    /// Ten buckets of width 0.1 over the top predicted probability; bucket
    /// `k` holds `(k/10, (k+1)/10]`.
    pub buckets: Vec<ConfidenceBucket>,
}

/// Accuracy of pseudo labels against known ground truth. Members without a
/// known label are skipped; `None` when nothing is left to evaluate.
pub fn pseudo_label_accuracy(pseudo: &PseudoState, labels: &[Option<usize>]) -> Option<PseudoAccuracy> {
    let mut buckets: Vec<ConfidenceBucket> = (0..10)
        .map(|k| ConfidenceBucket { lower: k as f64 / 10.0, upper: (k + 1) as f64 / 10.0, count: 0, correct: 0 })
        .collect();
    let (mut evaluated, mut correct) = (0usize, 0usize);
    for m in &pseudo.members {
        let Some(truth) = labels.get(m.node).copied().flatten() else { continue };
        let hit = truth == m.label;
        let k = ((m.confidence * 10.0).ceil() as usize).clamp(1, 10) - 1;
        buckets[k].count += 1;
        buckets[k].correct += usize::from(hit);
        evaluated += 1;
        correct += usize::from(hit);
    }
    (evaluated > 0).then(|| PseudoAccuracy { accuracy: correct as f64 / evaluated as f64, evaluated, buckets })
}

/// Metrics for one set of evaluated nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub classes: Vec<ClassScores>,
    /// Graph difference over the evaluated nodes.
    pub gd: f64,
    pub ld: Vec<Option<f64>>,
    pub pseudo_accuracy: Option<f64>,
}

impl EvalReport {
    /// Scores the argmax of `probs` and the representations `z` on `nodes`,
    /// which must all be labeled.
    pub fn compute(g: &Graph, probs: &Tensor, z: &Tensor, nodes: &[usize]) -> Result<Self> {
        let pred: Vec<usize> = probs.select_rows(nodes)?.argmax_rows();
        let truth = nodes
            .iter()
            .map(|&v| g.label(v).ok_or_else(|| Error::Contract(format!("evaluated node {v} has no label"))))
            .collect::<Result<Vec<_>>>()?;
        let c = g.num_classes();
        let ld = class_label_differences(z, g.labels(), nodes, c)?;
        let present: Vec<f64> = ld.iter().flatten().copied().collect();
        Ok(Self {
            accuracy: accuracy(&pred, &truth)?,
            macro_f1: macro_f1(&pred, &truth, c)?,
            classes: class_scores(&pred, &truth, c)?,
            gd: present.iter().sum::<f64>() / present.len() as f64,
            ld,
            pseudo_accuracy: None,
        })
    }
}
