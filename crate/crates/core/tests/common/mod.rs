#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;

use legnn::autodiff::Tape;
use legnn::graph::{Graph, LabelFeatures, Splits};
use legnn::model::{forward, BackboneConfig, BackboneKind, GraphInput, Method, Mode, ModelParams};
use legnn::rng::seeded;
use legnn::tensor::Tensor;

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy4")
}

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// A connected random graph with every node labeled and a train/valid/test
/// split of roughly 50/25/25.
pub fn random_graph(m: usize, c: usize, f: usize, extra_edges: usize, seed: u64) -> Graph {
    let mut rng = seeded(seed, 99);
    let mut edges: Vec<(usize, usize)> = (1..m).map(|i| (rng.gen_range(0..i), i)).collect();
    for _ in 0..extra_edges {
        let (u, v) = (rng.gen_range(0..m), rng.gen_range(0..m));
        if u != v {
            edges.push((u, v));
        }
    }
    let labels = (0..m).map(|i| Some(if i < c { i } else { rng.gen_range(0..c) })).collect();
    let split = Splits {
        train: (0..m).filter(|i| i % 4 < 2).collect(),
        valid: (0..m).filter(|i| i % 4 == 2).collect(),
        test: (0..m).filter(|i| i % 4 == 3).collect(),
    };
    Graph::new(c, edges, random_tensor(&mut rng, m, f), labels, split).unwrap()
}

/// Eval-mode logits of a model on a graph.
pub fn eval_logits(
    g: &Graph,
    method: Method,
    cfg: &BackboneConfig,
    params: &ModelParams,
    connected: &[usize],
) -> Tensor {
    let input = GraphInput::new(method, cfg.kind, g, connected).unwrap();
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let lf = LabelFeatures::one_hot(g.num_classes());
    let out = forward(&mut tape, cfg, &vars, g, &lf, &input, Mode::Eval, &mut seeded(0, 0)).unwrap();
    tape.value(out.logits).clone()
}

pub fn config(kind: BackboneKind, layers: usize, hidden: usize) -> BackboneConfig {
    BackboneConfig::new(kind, layers, hidden)
}
