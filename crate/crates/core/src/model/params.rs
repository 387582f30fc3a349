use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::model::config::{BackboneConfig, BackboneKind, Method};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub w_node: Tensor,
    pub w_label: Option<Tensor>,
    /// One `D × 1` attention vector per head (attention backbones only).
    pub att_node: Vec<Tensor>,
    pub att_label: Vec<Tensor>,
}

/// All trainable tensors of a model. Label-path tensors are present only
/// for the node+label method; `label_aug` only for the addition baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub proj_node: Tensor,
    pub proj_label: Option<Tensor>,
    pub layers: Vec<LayerParams>,
    pub pred_w: Tensor,
    pub pred_b: Tensor,
    pub label_aug: Option<Tensor>,
}

#[derive(Clone, Debug)]
pub struct LayerVars {
    pub w_node: Var,
    pub w_label: Option<Var>,
    pub att_node: Vec<Var>,
    pub att_label: Vec<Var>,
}

/// [`ModelParams`] registered on a tape.
#[derive(Clone, Debug)]
pub struct ParamVars {
    pub proj_node: Var,
    pub proj_label: Option<Var>,
    pub layers: Vec<LayerVars>,
    pub pred_w: Var,
    pub pred_b: Var,
    pub label_aug: Option<Var>,
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::new(rows, cols, data).expect("shape matches data")
}

impl ModelParams {
    /// Glorot-uniform weights and a zero classifier bias.
    ///
    /// `input_dim` is the node feature width `F`, `label_dim` the label
    /// feature width `F′`.
    pub fn init(
        method: Method,
        config: &BackboneConfig,
        input_dim: usize,
        label_dim: usize,
        num_classes: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let d = config.hidden;
        let with_label = method == Method::Legnn;
        let heads = if config.kind == BackboneKind::Gat { config.heads } else { 0 };
        let node_in = if method == Method::Concat { input_dim + num_classes } else { input_dim };
        let proj_node = glorot(rng, node_in, d);
        let proj_label = with_label.then(|| glorot(rng, label_dim, d));
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                w_node: glorot(rng, d, d),
                w_label: with_label.then(|| glorot(rng, d, d)),
                att_node: (0..heads).map(|_| glorot(rng, d, 1)).collect(),
                att_label: if with_label { (0..heads).map(|_| glorot(rng, d, 1)).collect() } else { Vec::new() },
            })
            .collect();
        let pred_w = glorot(rng, d, num_classes);
        let pred_b = Tensor::zeros(1, num_classes);
        let label_aug = (method == Method::Addition).then(|| glorot(rng, num_classes, input_dim));
        Self { proj_node, proj_label, layers, pred_w, pred_b, label_aug }
    }

    /// Every tensor in a fixed order shared with [`Self::tensors_mut`],
    /// [`Self::names`] and [`ParamVars::all`].
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.proj_node];
        out.extend(self.proj_label.iter());
        for l in &self.layers {
            out.push(&l.w_node);
            out.extend(l.w_label.iter());
            out.extend(l.att_node.iter());
            out.extend(l.att_label.iter());
        }
        out.push(&self.pred_w);
        out.push(&self.pred_b);
        out.extend(self.label_aug.iter());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.proj_node];
        out.extend(self.proj_label.iter_mut());
        for l in &mut self.layers {
            out.push(&mut l.w_node);
            out.extend(l.w_label.iter_mut());
            out.extend(l.att_node.iter_mut());
            out.extend(l.att_label.iter_mut());
        }
        out.push(&mut self.pred_w);
        out.push(&mut self.pred_b);
        out.extend(self.label_aug.iter_mut());
        out
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = vec!["proj_node".to_string()];
        if self.proj_label.is_some() {
            out.push("proj_label".into());
        }
        for (k, l) in self.layers.iter().enumerate() {
            out.push(format!("layer{k}.w_node"));
            if l.w_label.is_some() {
                out.push(format!("layer{k}.w_label"));
            }
            out.extend((0..l.att_node.len()).map(|h| format!("layer{k}.att_node{h}")));
            out.extend((0..l.att_label.len()).map(|h| format!("layer{k}.att_label{h}")));
        }
        out.push("pred_w".into());
        out.push("pred_b".into());
        if self.label_aug.is_some() {
            out.push("label_aug".into());
        }
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Registers every tensor as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape) -> ParamVars {
        let vars: Vec<Var> = self.tensors().into_iter().map(|t| tape.param(t.clone())).collect();
        self.structure(&vars).expect("one var per tensor")
    }

    /// Arranges `vars` (in [`Self::tensors`] order) into this layout.
    pub fn structure(&self, vars: &[Var]) -> Result<ParamVars> {
        let expected = self.tensors().len();
        if vars.len() != expected {
            return Err(Error::Contract(format!("{} vars for {expected} parameter tensors", vars.len())));
        }
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("length checked");
        let proj_node = next();
        let proj_label = self.proj_label.as_ref().map(|_| next());
        let layers = self
            .layers
            .iter()
            .map(|l| LayerVars {
                w_node: next(),
                w_label: l.w_label.as_ref().map(|_| next()),
                att_node: l.att_node.iter().map(|_| next()).collect(),
                att_label: l.att_label.iter().map(|_| next()).collect(),
            })
            .collect();
        let pred_w = next();
        let pred_b = next();
        let label_aug = self.label_aug.as_ref().map(|_| next());
        Ok(ParamVars { proj_node, proj_label, layers, pred_w, pred_b, label_aug })
    }

    /// Sets every label-path tensor to zero.
    pub fn zero_label_path(&mut self) {
        let zero = |t: &mut Tensor| t.data_mut().fill(0.0);
        self.proj_label.iter_mut().for_each(zero);
        for l in &mut self.layers {
            l.w_label.iter_mut().for_each(zero);
            l.att_label.iter_mut().for_each(zero);
        }
        self.label_aug.iter_mut().for_each(zero);
    }

    /// The node-path tensors alone, as parameters of a vanilla model.
    pub fn node_path(&self) -> Self {
        Self {
            proj_node: self.proj_node.clone(),
            proj_label: None,
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    w_node: l.w_node.clone(),
                    w_label: None,
                    att_node: l.att_node.clone(),
                    att_label: Vec::new(),
                })
                .collect(),
            pred_w: self.pred_w.clone(),
            pred_b: self.pred_b.clone(),
            label_aug: None,
        }
    }
}

impl ParamVars {
    pub fn all(&self) -> Vec<Var> {
        let mut out = vec![self.proj_node];
        out.extend(self.proj_label);
        for l in &self.layers {
            out.push(l.w_node);
            out.extend(l.w_label);
            out.extend(l.att_node.iter().copied());
            out.extend(l.att_label.iter().copied());
        }
        out.push(self.pred_w);
        out.push(self.pred_b);
        out.extend(self.label_aug);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn layouts_agree() {
        let mut cfg = BackboneConfig::new(BackboneKind::Gat, 2, 4);
        cfg.heads = 2;
        for method in Method::ALL {
            let p = ModelParams::init(method, &cfg, 5, 3, 3, &mut seeded(0, 0));
            let mut tape = Tape::new();
            let vars = p.bind(&mut tape);
            assert_eq!(vars.all().len(), p.tensors().len());
            assert_eq!(p.names().len(), p.tensors().len());
            for (v, t) in vars.all().iter().zip(p.tensors()) {
                assert_eq!(tape.value(*v), t);
            }
        }
    }

    #[test]
    fn shapes_follow_method() {
        let cfg = BackboneConfig::new(BackboneKind::Gcn, 2, 8);
        let p = ModelParams::init(Method::Legnn, &cfg, 5, 3, 3, &mut seeded(0, 0));
        assert_eq!(p.proj_node.shape(), (5, 8));
        assert_eq!(p.proj_label.as_ref().unwrap().shape(), (3, 8));
        assert_eq!(p.pred_w.shape(), (8, 3));
        assert_eq!(p.pred_b.shape(), (1, 3));
        let c = ModelParams::init(Method::Concat, &cfg, 5, 3, 3, &mut seeded(0, 0));
        assert_eq!(c.proj_node.shape(), (8, 8));
        let a = ModelParams::init(Method::Addition, &cfg, 5, 3, 3, &mut seeded(0, 0));
        assert_eq!(a.label_aug.as_ref().unwrap().shape(), (3, 5));
    }
}
