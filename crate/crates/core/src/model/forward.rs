use std::sync::Arc;

use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelFeatures};
use crate::hetero::{build_hetero_graph, HeteroGraph};
use crate::model::config::{BackboneConfig, BackboneKind, Method};
use crate::model::layers::{gcn_normalize, hetero_layer_forward, mean_normalize, sample_neighbors, LayerAdjacency};
use crate::model::params::ParamVars;
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active; `sage` samples neighbors.
    Train,
    /// Deterministic: no dropout, full neighborhoods.
    Eval,
}

/// Graph structure for one forward pass, with the adjacency preprocessing
/// of the chosen backbone done once.
#[derive(Clone, Debug)]
pub struct GraphInput {
    method: Method,
    kind: BackboneKind,
    hetero: HeteroGraph,
    /// Normalized adjacency for `gcn`, full mean adjacency for `sage`,
    /// binary pattern for `gat`.
    adjacency: Arc<SparseMatrix>,
    /// Label matrix restricted to the connected nodes (baselines only).
    visible_labels: Option<Tensor>,
}

impl GraphInput {
    /// Labels of the `connected` nodes are exposed to the model: as label
    /// edges for the node+label method, as input features for `concat` and
    /// `addition`. `vanilla` ignores them.
    pub fn new(method: Method, kind: BackboneKind, g: &Graph, connected: &[usize]) -> Result<Self> {
        let hetero = match method {
            Method::Legnn => build_hetero_graph(g, connected)?,
            _ => HeteroGraph::node_only(g),
        };
        let visible_labels = match method {
            Method::Concat | Method::Addition => {
                if let Some(&i) = connected.iter().find(|&&i| i >= g.num_nodes() || g.label(i).is_none()) {
                    return Err(Error::Contract(format!("visible node {i} is out of range or unlabeled")));
                }
                Some(g.label_matrix_for(connected))
            }
            Method::Vanilla | Method::Legnn => None,
        };
        let adjacency = Arc::new(match kind {
            BackboneKind::Gcn => gcn_normalize(&hetero),
            BackboneKind::Sage => mean_normalize(&hetero),
            BackboneKind::Gat => hetero.adjacency().clone(),
        });
        Ok(Self { method, kind, hetero, adjacency, visible_labels })
    }

    pub fn hetero(&self) -> &HeteroGraph {
        &self.hetero
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn kind(&self) -> BackboneKind {
        self.kind
    }
}

/// Tape handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardOutput {
    /// Final node representations (`M × D`).
    pub z_node: Var,
    /// Final label representations (`C × D`), node+label method only.
    pub z_label: Option<Var>,
    pub logits: Var,
    pub probs: Var,
}

/// `H⁰ = [X P_N ; E P_L]`.
pub fn project_inputs(tape: &mut Tape, x: Var, e: Var, proj_node: Var, proj_label: Var) -> Result<Var> {
    let hn = tape.matmul(x, proj_node)?;
    let hl = tape.matmul(e, proj_label)?;
    tape.vstack(hn, hl)
}

/// `X ∥ Y_visible`.
pub fn augment_concat(x: &Tensor, y_visible: &Tensor) -> Result<Tensor> {
    x.hstack(y_visible)
}

/// `X + Y_visible · W`, where `W` maps labels into feature space.
pub fn augment_addition(x: &Tensor, y_visible: &Tensor, w: &Tensor) -> Result<Tensor> {
    x.add(&y_visible.matmul(w)?)
}

fn input_layer(
    tape: &mut Tape,
    input: &GraphInput,
    g: &Graph,
    label_features: &LabelFeatures,
    params: &ParamVars,
) -> Result<Var> {
    match input.method {
        Method::Vanilla => {
            let x = tape.constant(g.features().clone());
            tape.matmul(x, params.proj_node)
        }
        Method::Concat => {
            let y = input.visible_labels.as_ref().expect("built for concat");
            let x = tape.constant(augment_concat(g.features(), y)?);
            tape.matmul(x, params.proj_node)
        }
        Method::Addition => {
            let w = params.label_aug.ok_or_else(|| Error::Contract("addition needs a label transform".into()))?;
            let y = tape.constant(input.visible_labels.clone().expect("built for addition"));
            let x = tape.constant(g.features().clone());
            let shift = tape.matmul(y, w)?;
            let x = tape.add(x, shift)?;
            tape.matmul(x, params.proj_node)
        }
        Method::Legnn => {
            let p_l =
                params.proj_label.ok_or_else(|| Error::Contract("node+label model without label projection".into()))?;
            if label_features.num_classes() != g.num_classes() {
                return Err(Error::dim(
                    "project_inputs",
                    format!("{} label feature rows for {} classes", label_features.num_classes(), g.num_classes()),
                ));
            }
            let x = tape.constant(g.features().clone());
            let e = tape.constant(label_features.tensor().clone());
            project_inputs(tape, x, e, params.proj_node, p_l)
        }
    }
}

/// Stacked layers on the prepared graph, then `softmax(Z_N W + b)`.
///
/// `rng` drives dropout and neighbor sampling and is untouched in
/// [`Mode::Eval`].
#[allow(clippy::too_many_arguments)]
pub fn forward(
    tape: &mut Tape,
    config: &BackboneConfig,
    params: &ParamVars,
    g: &Graph,
    label_features: &LabelFeatures,
    input: &GraphInput,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<ForwardOutput> {
    if config.kind != input.kind {
        return Err(Error::Contract(format!("graph prepared for {} used with {}", input.kind, config.kind)));
    }
    if params.layers.len() != config.layers {
        return Err(Error::Contract(format!(
            "{} layer parameter sets for {} layers",
            params.layers.len(),
            config.layers
        )));
    }
    let m = g.num_nodes();
    if input.hetero.num_nodes() != m {
        return Err(Error::dim(
            "forward",
            format!("graph input for {} nodes, graph has {m}", input.hetero.num_nodes()),
        ));
    }

    let adjacencies: Vec<LayerAdjacency> = match (config.kind, mode) {
        (BackboneKind::Sage, Mode::Train) => sample_neighbors(&input.hetero, &config.fanouts, rng.gen())
            .into_iter()
            .map(|a| LayerAdjacency::Fixed(Arc::new(a)))
            .collect(),
        (BackboneKind::Gat, _) => vec![LayerAdjacency::Attention(Arc::clone(&input.adjacency)); config.layers],
        _ => vec![LayerAdjacency::Fixed(Arc::clone(&input.adjacency)); config.layers],
    };

    let mut h = input_layer(tape, input, g, label_features, params)?;
    for (layer, adjacency) in params.layers.iter().zip(&adjacencies) {
        let x = match mode {
            Mode::Train => tape.dropout(h, config.dropout, rng)?,
            Mode::Eval => h,
        };
        h = hetero_layer_forward(tape, x, config.residual.then_some(h), m, adjacency, layer, config.activation)?;
    }

    let rows = tape.value(h).rows();
    let (z_node, z_label) =
        if rows > m { (tape.slice_rows(h, 0, m)?, Some(tape.slice_rows(h, m, rows)?)) } else { (h, None) };
    let scores = tape.matmul(z_node, params.pred_w)?;
    let logits = tape.add_row_bias(scores, params.pred_b)?;
    let probs = tape.softmax_rows(logits)?;
    Ok(ForwardOutput { z_node, z_label, logits, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;
    use crate::model::params::ModelParams;
    use crate::rng::seeded;

    fn toy() -> Graph {
        let x = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.2, 0.1]]).unwrap();
        let splits = Splits { train: vec![0, 2], valid: vec![1], test: vec![3] };
        Graph::new(2, [(0, 1), (1, 2), (2, 3)], x, vec![Some(0), Some(0), Some(1), Some(1)], splits).unwrap()
    }

    #[test]
    fn probabilities_are_normalized_and_eval_is_repeatable() {
        let g = toy();
        let e = LabelFeatures::one_hot(2);
        for kind in BackboneKind::ALL {
            let cfg = BackboneConfig::new(kind, 2, 4);
            let p = ModelParams::init(Method::Legnn, &cfg, 2, 2, 2, &mut seeded(1, 0));
            let input = GraphInput::new(Method::Legnn, kind, &g, &[0, 2]).unwrap();
            let run = || {
                let mut tape = Tape::new();
                let vars = p.bind(&mut tape);
                let out = forward(&mut tape, &cfg, &vars, &g, &e, &input, Mode::Eval, &mut seeded(0, 0)).unwrap();
                assert_eq!(tape.value(out.z_label.unwrap()).shape(), (2, 4));
                tape.value(out.probs).clone()
            };
            let a = run();
            for r in 0..a.rows() {
                assert!((a.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            assert_eq!(a, run());
        }
    }

    #[test]
    fn concat_hides_invisible_labels() {
        let g = toy();
        let y = g.label_matrix_for(&[2]);
        let out = augment_concat(g.features(), &y).unwrap();
        assert_eq!(out.row(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(out.row(2), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn addition_shifts_visible_rows_only() {
        let g = toy();
        let y = g.label_matrix_for(&[1]);
        let w = Tensor::from_rows(&[vec![10.0, 20.0], vec![30.0, 40.0]]).unwrap();
        let out = augment_addition(g.features(), &y, &w).unwrap();
        assert_eq!(out.row(1), &[10.5, 20.5]);
        for r in [0, 2, 3] {
            assert_eq!(out.row(r), g.features().row(r));
        }
    }

    #[test]
    fn unlabeled_visible_node_is_rejected() {
        let mut labels = toy().labels().to_vec();
        labels[3] = None;
        let g = Graph::new(2, [(0, 1)], toy().features().clone(), labels, Splits::default()).unwrap();
        assert!(GraphInput::new(Method::Concat, BackboneKind::Gcn, &g, &[3]).is_err());
        assert!(GraphInput::new(Method::Legnn, BackboneKind::Gcn, &g, &[3]).is_err());
    }
}
