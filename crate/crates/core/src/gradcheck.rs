//! Finite-difference gradient checking.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares reverse-mode gradients of `f` against central differences.
///
/// `f` builds a scalar loss on the given tape from the parameter vars, which
/// are registered in the same order as `params`. Returns the largest
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)` over every
/// parameter entry.
///
/// `f` must be deterministic: a function that records dropout, or whose
/// value changes between two identical evaluations, is rejected.
pub fn grad_check<F>(mut f: F, params: &[Tensor], step: f64) -> Result<f64>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    if tape.is_stochastic() {
        return Err(Error::Contract("grad_check requires a deterministic function (dropout is active)".into()));
    }
    let base = tape.value(loss).item()?;
    let grads = tape.backward(loss)?;

    let mut eval = |ps: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param(p.clone())).collect();
        let loss = f(&mut tape, &vars)?;
        if tape.is_stochastic() {
            return Err(Error::Contract("grad_check requires a deterministic function (dropout is active)".into()));
        }
        tape.value(loss).item()
    };

    let again = eval(params)?;
    if again.to_bits() != base.to_bits() {
        return Err(Error::Contract(format!("function is not deterministic: {base} then {again}")));
    }

    let mut worst: f64 = 0.0;
    let mut work: Vec<Tensor> = params.to_vec();
    for (p, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).expect("every parameter receives a gradient");
        for k in 0..params[p].len() {
            let orig = params[p].data()[k];
            work[p].data_mut()[k] = orig + step;
            let plus = eval(&work)?;
            work[p].data_mut()[k] = orig - step;
            let minus = eval(&work)?;
            work[p].data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Activation, NllTerm};
    use crate::sparse::SparseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::new(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn squared_norm_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random(&mut rng, 3, 4);
        let err = grad_check(
            |t, v| {
                let sq = t.mul(v[0], v[0])?;
                t.sum(sq)
            },
            &[w],
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn two_layer_network_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(&mut rng, 5, 3);
        let params = vec![random(&mut rng, 3, 4), random(&mut rng, 1, 4), random(&mut rng, 4, 3)];
        let err = grad_check(
            |t, v| {
                let x = t.constant(x.clone());
                let h = t.matmul(x, v[0])?;
                let h = t.add_row_bias(h, v[1])?;
                let h = t.activation(h, Activation::Elu)?;
                let o = t.matmul(h, v[2])?;
                let o = t.activation(o, Activation::Sigmoid)?;
                let p = t.softmax_rows(o)?;
                let terms = (0..5).map(|r| NllTerm { row: r, class: r % 3, weight: 0.2 }).collect();
                t.weighted_nll(p, terms)
            },
            &params,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn sparse_paths_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pattern = Arc::new(
            SparseMatrix::from_triplets(
                4,
                4,
                vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0), (3, 2, 1.0), (3, 0, 1.0)],
            )
            .unwrap(),
        );
        let params = vec![random(&mut rng, 4, 2), random(&mut rng, 2, 1), random(&mut rng, 4, 2)];
        let err = grad_check(
            |t, v| {
                let scores = t.matmul(v[0], v[1])?;
                let logits = t.edge_score_sum(&pattern, scores)?;
                let logits = t.activation(logits, Activation::LeakyRelu { slope: 0.2 })?;
                let att = t.edge_softmax(&pattern, logits)?;
                let agg = t.spmm_values(&pattern, att, v[2])?;
                let agg = t.spmm(&pattern, agg)?;
                let top = t.slice_rows(agg, 1, 3)?;
                let both = t.vstack(top, v[0])?;
                let sq = t.mul(both, both)?;
                let s = t.scale(sq, 0.5)?;
                t.sum(s)
            },
            &params,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn dropout_is_rejected() {
        let w = Tensor::ones(2, 2);
        let res = grad_check(
            |t, v| {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let d = t.dropout(v[0], 0.5, &mut rng)?;
                t.sum(d)
            },
            &[w],
            DEFAULT_STEP,
        );
        assert!(matches!(res, Err(Error::Contract(_))));
    }
}
