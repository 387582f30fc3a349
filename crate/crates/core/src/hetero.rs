//! Node + label heterogeneous graphs.
//!
//! Each class becomes an extra vertex appended after the `M` nodes. A node in
//! the connected set is joined to the vertex of its class, giving the block
//! adjacency
//!
//! ```text
//! A′ = | A   Ŷ |
//!      | Ŷᵀ  0 |
//! ```
//!
//! where `Ŷ` holds the one-hot labels of connected nodes only.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct HeteroGraph {
    num_nodes: usize,
    num_label_vertices: usize,
    adjacency: SparseMatrix,
    connected: Vec<usize>,
}

impl HeteroGraph {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// `C` for a node+label graph, 0 for a node-only graph.
    pub fn num_label_vertices(&self) -> usize {
        self.num_label_vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.num_nodes + self.num_label_vertices
    }

    /// Binary adjacency `A′` over all vertices.
    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Sorted ids of nodes whose label edges are present.
    pub fn connected(&self) -> &[usize] {
        &self.connected
    }

    /// The plain node graph `A` with no label vertices, used by baselines.
    pub fn node_only(g: &Graph) -> Self {
        Self { num_nodes: g.num_nodes(), num_label_vertices: 0, adjacency: g.adjacency(), connected: Vec::new() }
    }
}

/// Builds `A′` with label edges for the nodes in `connected`.
pub fn build_hetero_graph(g: &Graph, connected: &[usize]) -> Result<HeteroGraph> {
    let m = g.num_nodes();
    let c = g.num_classes();
    let mut connected = connected.to_vec();
    connected.sort_unstable();
    connected.dedup();

    let mut triplets: Vec<(usize, usize, f64)> = g.adjacency().iter().collect();
    for &i in &connected {
        if i >= m {
            return Err(Error::Contract(format!("connected node {i} outside [0, {m})")));
        }
        let class =
            g.label(i).ok_or_else(|| Error::Contract(format!("connected node {i} has an all-zero label row")))?;
        triplets.push((i, m + class, 1.0));
        triplets.push((m + class, i, 1.0));
    }
    let adjacency = SparseMatrix::from_triplets(m + c, m + c, triplets)?;
    Ok(HeteroGraph { num_nodes: m, num_label_vertices: c, adjacency, connected })
}
