use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};
use crate::model::{default_fanouts, BackboneConfig, BackboneKind, Method};
use crate::train::{ConfidenceVariant, TrainConfig};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "LEGNN_OUTPUT_ROOT";

/// Flat experiment description as read from JSON. Unknown fields are
/// rejected; missing fields take the defaults below, and
/// [`ExperimentConfig::resolve`] makes every default explicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub method: Method,
    pub backbone: BackboneKind,
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub fanouts: Option<Vec<usize>>,
    pub residual: bool,
    pub dropout: f64,
    pub activation: Option<Activation>,
    pub lr: f64,
    pub lr_min: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub alpha: f64,
    pub delta: f64,
    pub threshold: f64,
    pub lambda: f64,
    pub self_training: bool,
    pub node_selection: bool,
    pub confidence: ConfidenceVariant,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Methods trained at each point of a synthetic sweep.
    pub sweep_methods: Vec<Method>,
    /// Seed of the cross-label edge generator in a sweep.
    pub synthetic_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            dataset: PathBuf::new(),
            method: Method::Legnn,
            backbone: BackboneKind::Gcn,
            layers: 2,
            hidden: 32,
            heads: 1,
            fanouts: None,
            residual: true,
            dropout: 0.5,
            activation: None,
            lr: t.lr,
            lr_min: t.lr_min,
            max_epochs: t.max_epochs,
            patience: t.patience,
            alpha: t.alpha,
            delta: t.delta,
            threshold: t.threshold,
            lambda: t.lambda,
            self_training: t.self_training,
            node_selection: t.node_selection,
            confidence: t.confidence,
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: PathBuf::from("results"),
            sweep_methods: vec![Method::Vanilla, Method::Legnn],
            synthetic_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
                .unwrap_or("config")
                .to_string();
            Error::config(field, msg)
        })
    }

    /// Reads a config file. A relative `dataset` path is taken relative to
    /// the directory holding the file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.dataset.is_relative() && !cfg.dataset.as_os_str().is_empty() {
            if let Some(parent) = path.parent() {
                cfg.dataset = parent.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    /// Fills optional fields with their effective values and validates.
    pub fn resolve(mut self) -> Result<Self> {
        if self.fanouts.is_none() {
            self.fanouts = Some(default_fanouts(self.layers));
        }
        if self.activation.is_none() {
            self.activation = Some(self.backbone.default_activation());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::config("dataset", "required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        if self.sweep_methods.is_empty() {
            return Err(Error::config("sweep_methods", "at least one method is required"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "required"));
        }
        self.backbone_config().validate()?;
        self.train_config(self.seeds[0]).validate()
    }

    pub fn backbone_config(&self) -> BackboneConfig {
        BackboneConfig {
            kind: self.backbone,
            layers: self.layers,
            hidden: self.hidden,
            heads: self.heads,
            fanouts: self.fanouts.clone().unwrap_or_else(|| default_fanouts(self.layers)),
            residual: self.residual,
            dropout: self.dropout,
            activation: self.activation.unwrap_or_else(|| self.backbone.default_activation()),
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            delta: self.delta,
            threshold: self.threshold,
            lambda: self.lambda,
            lr: self.lr,
            lr_min: self.lr_min,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
            self_training: self.self_training,
            node_selection: self.node_selection,
            confidence: self.confidence,
        }
    }

    /// `output_dir`, placed under `$LEGNN_OUTPUT_ROOT` when that is set and
    /// the directory is relative.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_explicitly() {
        let cfg = ExperimentConfig::from_json(r#"{"dataset": "d", "backbone": "sage", "layers": 3}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.fanouts, Some(vec![15, 10, 5]));
        assert_eq!(cfg.activation, Some(Activation::Relu));
    }

    #[test]
    fn unknown_field_names_the_field() {
        match ExperimentConfig::from_json(r#"{"dataset": "d", "lerning_rate": 1}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "lerning_rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let bad = |json: &str| match ExperimentConfig::from_json(json).unwrap().resolve() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(bad(r#"{"dataset": "d", "alpha": 1.5}"#), "alpha");
        assert_eq!(bad(r#"{"dataset": "d", "seeds": []}"#), "seeds");
        assert_eq!(bad(r#"{"dataset": "d", "backbone": "sage", "layers": 2, "fanouts": [3]}"#), "fanouts");
        assert_eq!(bad(r#"{}"#), "dataset");
    }

    #[test]
    fn bad_enum_is_a_config_error() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"method": "magic"}"#), Err(Error::Config { .. })));
    }
}
