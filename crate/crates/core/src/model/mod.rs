//! GCN, GraphSAGE and GAT backbones over node-only or node+label graphs.

pub mod config;
pub mod forward;
pub mod layers;
pub mod params;

pub use config::{default_fanouts, BackboneConfig, BackboneKind, Method};
pub use forward::{augment_addition, augment_concat, forward, project_inputs, ForwardOutput, GraphInput, Mode};
pub use layers::{
    attention_values, gat_edge_weights, gcn_normalize, hetero_layer_forward, mean_normalize, sample_neighbors,
    LayerAdjacency,
};
pub use params::{LayerParams, LayerVars, ModelParams, ParamVars};
