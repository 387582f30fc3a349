use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// One epoch's partition of the labeled nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    /// Nodes whose labels are predicted this epoch (sorted).
    pub targets: Vec<usize>,
    /// Nodes joined to their label vertex this epoch (sorted).
    pub connected: Vec<usize>,
}

/// Draws `⌊α·|labeled|⌋` prediction targets uniformly without replacement;
/// the remaining labeled nodes are connected.
pub fn select_training_nodes(labeled: &[usize], alpha: f64, rng: &mut impl Rng) -> Result<Selection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha", format!("{alpha} outside (0, 1)")));
    }
    let n = labeled.len();
    let k = (alpha * n as f64).floor() as usize;
    if k == 0 || k == n {
        return Err(Error::DegenerateSplit(format!("alpha {alpha} selects {k} of {n} labeled nodes")));
    }
    let mut shuffled = labeled.to_vec();
    shuffled.shuffle(rng);
    let mut targets = shuffled[..k].to_vec();
    let mut connected = shuffled[k..].to_vec();
    targets.sort_unstable();
    connected.sort_unstable();
    Ok(Selection { targets, connected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn floor_sizes() {
        let mut rng = seeded(0, 0);
        let s = select_training_nodes(&(0..10).collect::<Vec<_>>(), 0.5, &mut rng).unwrap();
        assert_eq!((s.targets.len(), s.connected.len()), (5, 5));
        let s = select_training_nodes(&(0..7).collect::<Vec<_>>(), 0.5, &mut rng).unwrap();
        assert_eq!((s.targets.len(), s.connected.len()), (3, 4));
    }

    #[test]
    fn degenerate_splits() {
        let mut rng = seeded(0, 0);
        assert!(matches!(select_training_nodes(&[1], 0.5, &mut rng), Err(Error::DegenerateSplit(_))));
        assert!(matches!(select_training_nodes(&[1, 2], 0.2, &mut rng), Err(Error::DegenerateSplit(_))));
        assert!(matches!(select_training_nodes(&[1, 2], 1.0, &mut rng), Err(Error::Config { .. })));
    }
}
