use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneKind {
    Gcn,
    Sage,
    Gat,
}

impl BackboneKind {
    pub const ALL: [BackboneKind; 3] = [BackboneKind::Gcn, BackboneKind::Sage, BackboneKind::Gat];

    /// ELU for attention layers, ReLU otherwise.
    pub fn default_activation(self) -> Activation {
        match self {
            BackboneKind::Gat => Activation::Elu,
            BackboneKind::Gcn | BackboneKind::Sage => Activation::Relu,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackboneKind::Gcn => "gcn",
            BackboneKind::Sage => "sage",
            BackboneKind::Gat => "gat",
        }
    }
}

impl fmt::Display for BackboneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackboneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(BackboneKind::Gcn),
            "sage" => Ok(BackboneKind::Sage),
            "gat" => Ok(BackboneKind::Gat),
            _ => Err(Error::config("backbone", format!("`{s}` is not one of gcn, sage, gat"))),
        }
    }
}

/// How labels enter the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Labels are used only in the loss.
    Vanilla,
    /// Visible one-hot labels are appended to the node features.
    Concat,
    /// Visible labels are projected to feature space and added to the features.
    Addition,
    /// Labels become vertices of a node+label graph.
    Legnn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Vanilla, Method::Concat, Method::Addition, Method::Legnn];

    /// Whether some training labels are part of the model input.
    pub fn uses_label_input(self) -> bool {
        !matches!(self, Method::Vanilla)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Concat => "concat",
            Method::Addition => "addition",
            Method::Legnn => "legnn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Method::Vanilla),
            "concat" => Ok(Method::Concat),
            "addition" => Ok(Method::Addition),
            "legnn" => Ok(Method::Legnn),
            _ => Err(Error::config("method", format!("`{s}` is not one of vanilla, concat, addition, legnn"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub kind: BackboneKind,
    pub layers: usize,
    pub hidden: usize,
    /// Attention heads; outputs of the heads are averaged.
    pub heads: usize,
    /// Sampled in-neighbors per vertex at each layer, used by `sage` in
    /// training mode.
    pub fanouts: Vec<usize>,
    pub residual: bool,
    pub dropout: f64,
    pub activation: Activation,
}

impl BackboneConfig {
    pub fn new(kind: BackboneKind, layers: usize, hidden: usize) -> Self {
        Self {
            kind,
            layers,
            hidden,
            heads: 1,
            fanouts: default_fanouts(layers),
            residual: true,
            dropout: 0.0,
            activation: kind.default_activation(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::config("layers", "must be >= 1"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be >= 1"));
        }
        if self.heads == 0 {
            return Err(Error::config("heads", "must be >= 1"));
        }
        if self.kind == BackboneKind::Sage && self.fanouts.len() != self.layers {
            return Err(Error::config(
                "fanouts",
                format!("{} fan-outs for {} layers", self.fanouts.len(), self.layers),
            ));
        }
        if self.fanouts.contains(&0) {
            return Err(Error::config("fanouts", "every fan-out must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", format!("{} outside [0, 1)", self.dropout)));
        }
        self.activation.validate().map_err(|e| Error::config("activation", e.to_string()))
    }
}

/// 15, 10, 5 for the first three layers, then 5.
pub fn default_fanouts(layers: usize) -> Vec<usize> {
    (0..layers).map(|k| [15, 10, 5].get(k).copied().unwrap_or(5)).collect()
}
