use serde::{Deserialize, Serialize};

use crate::autodiff::sigmoid;
use crate::tensor::Tensor;

/// Which confidence factors self-training applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceVariant {
    /// Gate on `p · TC`, weight pseudo terms by `TC` and `EC`.
    #[default]
    Full,
    /// `TC` fixed at 1 in both the gate and the loss.
    NoTc,
    /// `EC` fixed at 1 in the loss.
    NoEc,
    /// Both fixed at 1: plain threshold gating `p > t`.
    ThresholdOnly,
}

impl ConfidenceVariant {
    pub fn uses_tc(self) -> bool {
        matches!(self, Self::Full | Self::NoEc)
    }

    pub fn uses_ec(self) -> bool {
        matches!(self, Self::Full | Self::NoTc)
    }

    /// The training confidence this variant applies at `epoch`.
    pub fn tc(self, epoch: usize, delta: f64) -> f64 {
        if self.uses_tc() {
            training_confidence(epoch, delta)
        } else {
            1.0
        }
    }
}

/// `sigmoid(ln(e / δ))`, which equals `e / (e + δ)`.
pub fn training_confidence(epoch: usize, delta: f64) -> f64 {
    sigmoid((epoch as f64 / delta).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub node: usize,
    pub label: usize,
    /// Highest predicted probability of the node.
    pub confidence: f64,
}

/// Pseudo-labeled nodes for one epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PseudoState {
    pub members: Vec<PseudoLabel>,
    pub tc: f64,
}

impl PseudoState {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Keeps each candidate whose top probability `p` satisfies `p · tc > t`,
/// labeled with its most probable class (lowest index on ties).
pub fn gate_pseudo_labels(probs: &Tensor, candidates: &[usize], tc: f64, t: f64) -> PseudoState {
    let members = candidates
        .iter()
        .filter_map(|&node| {
            let row = probs.row(node);
            let (label, &p) =
                row.iter().enumerate().fold((0, &row[0]), |best, (c, v)| if *v > *best.1 { (c, v) } else { best });
            (p * tc > t).then_some(PseudoLabel { node, label, confidence: p })
        })
        .collect();
    PseudoState { members, tc }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(training_confidence(10, 10.0), 0.5);
        assert!((training_confidence(100, 10.0) - 10.0 / 11.0).abs() < 1e-12);
        assert!((training_confidence(1, 10.0) - 1.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn gate_arithmetic() {
        let probs = Tensor::from_rows(&[vec![0.05, 0.95], vec![0.5, 0.5]]).unwrap();
        let s = gate_pseudo_labels(&probs, &[0, 1], 0.8, 0.7);
        assert_eq!(s.members, vec![PseudoLabel { node: 0, label: 1, confidence: 0.95 }]);
        assert!(gate_pseudo_labels(&probs, &[0, 1], 0.5, 0.7).is_empty());
        let tie = gate_pseudo_labels(&probs, &[1], 1.0, 0.1);
        assert_eq!(tie.members[0].label, 0);
    }
}
