use crate::autodiff::{NllTerm, Tape, Var, LOG_CLAMP};
use crate::error::{Error, Result};
use crate::train::confidence::PseudoState;

/// `-ln p[class]` with `p` clamped below at `1e-12`.
pub fn cross_entropy(class: usize, probs: &[f64]) -> f64 {
    -probs[class].max(LOG_CLAMP).ln()
}

/// Mean cross-entropy over `targets` plus the confidence-weighted pseudo
/// term `(λ · TC / |U′|) Σ EC_i · CE_i`.
///
/// `TC` is `pseudo.tc`; `EC_i` is each member's confidence when `use_ec`,
/// otherwise 1. Both enter as constants.
pub fn composite_loss(
    tape: &mut Tape,
    probs: Var,
    targets: &[(usize, usize)],
    pseudo: &PseudoState,
    lambda: f64,
    use_ec: bool,
) -> Result<Var> {
    if targets.is_empty() {
        return Err(Error::Contract("supervised loss over an empty target set".into()));
    }
    let supervised = 1.0 / targets.len() as f64;
    let mut terms: Vec<NllTerm> =
        targets.iter().map(|&(row, class)| NllTerm { row, class, weight: supervised }).collect();
    if lambda != 0.0 && !pseudo.is_empty() {
        let scale = lambda * pseudo.tc / pseudo.len() as f64;
        terms.extend(pseudo.members.iter().map(|m| NllTerm {
            row: m.node,
            class: m.label,
            weight: scale * if use_ec { m.confidence } else { 1.0 },
        }));
    }
    tape.weighted_nll(probs, terms)
}
