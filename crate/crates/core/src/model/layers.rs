//! Adjacency preparation and the heterogeneous message-passing layer.

use std::sync::Arc;

use rand::seq::index::sample;

use crate::autodiff::{Activation, Tape, Var};
use crate::error::{Error, Result};
use crate::hetero::HeteroGraph;
use crate::model::params::{LayerParams, LayerVars};
use crate::rng::seeded;
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Slope of the LeakyReLU applied to attention logits.
pub const ATTENTION_SLOPE: f64 = 0.2;

/// The aggregation operator of one layer.
#[derive(Clone, Debug)]
pub enum LayerAdjacency {
    /// A constant weighted adjacency (normalized or sampled).
    Fixed(Arc<SparseMatrix>),
    /// A binary pattern whose weights are computed by attention.
    Attention(Arc<SparseMatrix>),
}

/// `D̃^{-1/2} (A′ + I) D̃^{-1/2}` where `D̃` holds the row sums of `A′ + I`.
pub fn gcn_normalize(h: &HeteroGraph) -> SparseMatrix {
    let n = h.num_vertices();
    let mut triplets: Vec<(usize, usize, f64)> = h.adjacency().iter().collect();
    triplets.extend((0..n).map(|i| (i, i, 1.0)));
    let with_loops = SparseMatrix::from_triplets(n, n, triplets).expect("square pattern");
    let inv_sqrt: Vec<f64> = (0..n).map(|r| with_loops.row_values(r).iter().sum::<f64>().powf(-0.5)).collect();
    let values = with_loops.iter().map(|(r, c, v)| inv_sqrt[r] * v * inv_sqrt[c]).collect();
    with_loops.with_values(values).expect("same pattern")
}

fn mean_rows(n: usize, rows: Vec<Vec<usize>>) -> SparseMatrix {
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for mut cols in rows {
        cols.sort_unstable();
        let w = 1.0 / cols.len().max(1) as f64;
        values.extend(std::iter::repeat_n(w, cols.len()));
        indices.extend(cols);
        indptr.push(indices.len());
    }
    SparseMatrix::from_csr(n, n, indptr, indices, values).expect("sorted in-bounds rows")
}

/// Every neighbor of a vertex weighted `1 / degree`.
pub fn mean_normalize(h: &HeteroGraph) -> SparseMatrix {
    let a = h.adjacency();
    mean_rows(a.rows(), (0..a.rows()).map(|r| a.row_indices(r).to_vec()).collect())
}

/// One mean-aggregation adjacency per layer, keeping at most `fanouts[k]`
/// uniformly sampled neighbors of each vertex at layer `k`.
pub fn sample_neighbors(h: &HeteroGraph, fanouts: &[usize], seed: u64) -> Vec<SparseMatrix> {
    let a = h.adjacency();
    fanouts
        .iter()
        .enumerate()
        .map(|(k, &fanout)| {
            let mut rng = seeded(seed, k as u64);
            let rows = (0..a.rows())
                .map(|r| {
                    let neigh = a.row_indices(r);
                    if neigh.len() <= fanout {
                        neigh.to_vec()
                    } else {
                        sample(&mut rng, neigh.len(), fanout).into_iter().map(|i| neigh[i]).collect()
                    }
                })
                .collect();
            mean_rows(a.rows(), rows)
        })
        .collect()
}

/// Type-specific transform: node rows by `W_N`, label rows by `W_L`.
fn transform(tape: &mut Tape, h: Var, num_nodes: usize, layer: &LayerVars) -> Result<Var> {
    let rows = tape.value(h).rows();
    match layer.w_label {
        Some(w_label) if rows > num_nodes => {
            let hn = tape.slice_rows(h, 0, num_nodes)?;
            let hl = tape.slice_rows(h, num_nodes, rows)?;
            let tn = tape.matmul(hn, layer.w_node)?;
            let tl = tape.matmul(hl, w_label)?;
            tape.vstack(tn, tl)
        }
        _ if rows == num_nodes => tape.matmul(h, layer.w_node),
        _ => Err(Error::dim("transform", format!("{rows} rows, {num_nodes} nodes, no label transform"))),
    }
}

/// Attention weights over the stored entries of `pattern`, normalized per
/// destination row. `transformed` holds `W_φ(u) h_u` for every vertex.
pub fn attention_values(
    tape: &mut Tape,
    transformed: Var,
    num_nodes: usize,
    pattern: &Arc<SparseMatrix>,
    att_node: Var,
    att_label: Option<Var>,
) -> Result<Var> {
    let rows = tape.value(transformed).rows();
    let scores = match att_label {
        Some(al) if rows > num_nodes => {
            let tn = tape.slice_rows(transformed, 0, num_nodes)?;
            let tl = tape.slice_rows(transformed, num_nodes, rows)?;
            let sn = tape.matmul(tn, att_node)?;
            let sl = tape.matmul(tl, al)?;
            tape.vstack(sn, sl)?
        }
        _ => tape.matmul(transformed, att_node)?,
    };
    let logits = tape.edge_score_sum(pattern, scores)?;
    let logits = tape.activation(logits, Activation::LeakyRelu { slope: ATTENTION_SLOPE })?;
    tape.edge_softmax(pattern, logits)
}

/// Attention-valued `A′` for one head of a layer, evaluated outside training.
pub fn gat_edge_weights(h: &Tensor, graph: &HeteroGraph, layer: &LayerParams, head: usize) -> Result<SparseMatrix> {
    if head >= layer.att_node.len() {
        return Err(Error::Contract(format!("head {head} of {}", layer.att_node.len())));
    }
    let mut tape = Tape::new();
    let hv = tape.constant(h.clone());
    let vars = LayerVars {
        w_node: tape.constant(layer.w_node.clone()),
        w_label: layer.w_label.clone().map(|w| tape.constant(w)),
        att_node: vec![tape.constant(layer.att_node[head].clone())],
        att_label: layer.att_label.get(head).map(|a| tape.constant(a.clone())).into_iter().collect(),
    };
    let pattern = Arc::new(graph.adjacency().clone());
    let t = transform(&mut tape, hv, graph.num_nodes(), &vars)?;
    let att =
        attention_values(&mut tape, t, graph.num_nodes(), &pattern, vars.att_node[0], vars.att_label.first().copied())?;
    pattern.with_values(tape.value(att).data().to_vec())
}

/// One layer: `σ(Â · [H_N W_N ; H_L W_L] + residual)`.
///
/// With `Â = A′` this is, row block by row block,
/// `H_N' = σ(A H_N W_N + Ŷ H_L W_L)` and `H_L' = σ(Ŷᵀ H_N W_N)`.
/// Vertices with no neighbors under attention receive only the residual.
#[allow(clippy::too_many_arguments)]
pub fn hetero_layer_forward(
    tape: &mut Tape,
    input: Var,
    residual: Option<Var>,
    num_nodes: usize,
    adjacency: &LayerAdjacency,
    layer: &LayerVars,
    activation: Activation,
) -> Result<Var> {
    let rows = tape.value(input).rows();
    let transformed = transform(tape, input, num_nodes, layer)?;
    let aggregated = match adjacency {
        LayerAdjacency::Fixed(adj) => {
            if adj.shape() != (rows, rows) {
                return Err(Error::dim("hetero_layer_forward", format!("adjacency {:?} for {rows} rows", adj.shape())));
            }
            tape.spmm(adj, transformed)?
        }
        LayerAdjacency::Attention(pattern) => {
            if pattern.shape() != (rows, rows) {
                return Err(Error::dim(
                    "hetero_layer_forward",
                    format!("pattern {:?} for {rows} rows", pattern.shape()),
                ));
            }
            if layer.att_node.is_empty() {
                return Err(Error::Contract("attention layer without attention vectors".into()));
            }
            let mut sum: Option<Var> = None;
            for (h, &a_node) in layer.att_node.iter().enumerate() {
                let a_label = layer.att_label.get(h).copied();
                let att = attention_values(tape, transformed, num_nodes, pattern, a_node, a_label)?;
                let out = tape.spmm_values(pattern, att, transformed)?;
                sum = Some(match sum {
                    Some(s) => tape.add(s, out)?,
                    None => out,
                });
            }
            let sum = sum.expect("at least one head");
            let heads = layer.att_node.len();
            if heads > 1 {
                tape.scale(sum, 1.0 / heads as f64)?
            } else {
                sum
            }
        }
    };
    let pre = match residual {
        Some(r) => tape.add(aggregated, r)?,
        None => aggregated,
    };
    tape.activation(pre, activation)
}
