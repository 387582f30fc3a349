//! Synthetic graphs: cross-label edge injection and planted-partition fixtures.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::rng::seeded;
use crate::tensor::Tensor;

/// Adds `s` new edges, each joining two labeled nodes of different classes.
///
/// The first endpoint is drawn uniformly from the labeled nodes, the second
/// uniformly from labeled nodes of any other class. Self-loops cannot occur;
/// pairs that already exist are redrawn. The draws form one stream per
/// seed, so the edges added for `s` are a prefix of those added for any
/// larger `s`.
pub fn generate_synthetic(g: &Graph, s: usize, seed: u64) -> Result<Graph> {
    if s == 0 {
        return Ok(g.clone());
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); g.num_classes()];
    for (i, l) in g.labels().iter().enumerate() {
        if let Some(c) = l {
            by_class[*c].push(i);
        }
    }
    if by_class.iter().filter(|v| !v.is_empty()).count() < 2 {
        return Err(Error::Contract("cross-label edges need at least two classes among labeled nodes".into()));
    }
    let labeled: Vec<usize> = by_class.iter().flatten().copied().collect();
    let n = labeled.len();

    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let total_pairs: usize = (n * n - sizes.iter().map(|k| k * k).sum::<usize>()) / 2;
    let existing_cross =
        g.edges().iter().filter(|&&(u, v)| matches!((g.label(u), g.label(v)), (Some(a), Some(b)) if a != b)).count();
    let available = total_pairs - existing_cross;
    if s > available {
        return Err(Error::Capacity(format!("{s} cross-label edges requested, only {available} pairs are free")));
    }

    let mut rng = seeded(seed, 0);
    let mut added: HashSet<(usize, usize)> = HashSet::with_capacity(s);
    let mut order = Vec::with_capacity(s);
    let max_attempts = 1000 * s + 100_000;
    let mut attempts = 0;
    while order.len() < s {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Capacity(format!("placed {} of {s} edges before giving up", order.len())));
        }
        let u = labeled[rng.gen_range(0..n)];
        let cu = g.label(u).expect("labeled");
        let mut k = rng.gen_range(0..n - sizes[cu]);
        let mut v = usize::MAX;
        for (c, members) in by_class.iter().enumerate() {
            if c == cu {
                continue;
            }
            if k < members.len() {
                v = members[k];
                break;
            }
            k -= members.len();
        }
        let key = (u.min(v), u.max(v));
        if g.has_edge(u, v) || !added.insert(key) {
            continue;
        }
        order.push(key);
    }
    g.with_added_edges(&order)
}

/// Number of cross-label edges to add so that homophily drops to `target`.
pub fn edges_for_homophily(g: &Graph, target: f64) -> Result<usize> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Contract(format!("target homophily {target} outside (0, 1]")));
    }
    let (mut same, mut total) = (0usize, 0usize);
    for &(u, v) in g.edges() {
        if let (Some(a), Some(b)) = (g.label(u), g.label(v)) {
            total += 1;
            same += usize::from(a == b);
        }
    }
    let needed = (same as f64 / target).round() as usize;
    Ok(needed.saturating_sub(total))
}

/// A labeled graph with planted class structure: Gaussian class centroids
/// plus isotropic noise for features, and edges that stay within a class
/// with probability `homophily`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedPartition {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub avg_degree: f64,
    pub homophily: f64,
    /// Norm of each class centroid relative to unit-variance noise.
    pub feature_signal: f64,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        Self {
            num_nodes: 200,
            num_classes: 4,
            feature_dim: 16,
            avg_degree: 6.0,
            homophily: 0.8,
            feature_signal: 1.0,
            train_frac: 0.4,
            valid_frac: 0.2,
            seed: 0,
        }
    }
}

impl PlantedPartition {
    pub fn generate(&self) -> Result<Graph> {
        let (m, c) = (self.num_nodes, self.num_classes);
        if m < 2 || c < 2 || c > m {
            return Err(Error::Contract(format!("need 2 <= classes <= nodes, got {c} classes for {m} nodes")));
        }
        if !(0.0..=1.0).contains(&self.homophily) || self.train_frac + self.valid_frac > 1.0 {
            return Err(Error::Contract("homophily and split fractions must lie in [0, 1]".into()));
        }
        let mut rng = seeded(self.seed, 1);

        let mut labels: Vec<usize> = (0..m).map(|i| i % c).collect();
        labels.shuffle(&mut rng);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l].push(i);
        }

        let centroids: Vec<Vec<f64>> = (0..c)
            .map(|_| {
                let v: Vec<f64> = (0..self.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|x| x * self.feature_signal / norm).collect()
            })
            .collect();
        let mut features = Tensor::zeros(m, self.feature_dim);
        for i in 0..m {
            for (f, mu) in features.row_mut(i).iter_mut().zip(&centroids[labels[i]]) {
                let noise: f64 = rng.sample(StandardNormal);
                *f = mu + noise;
            }
        }

        let target = ((m as f64 * self.avg_degree) / 2.0).round() as usize;
        let max_edges = m * (m - 1) / 2;
        if target > max_edges {
            return Err(Error::Capacity(format!("{target} edges requested for {m} nodes")));
        }
        let mut edges = HashSet::with_capacity(target);
        let mut attempts = 0usize;
        while edges.len() < target {
            attempts += 1;
            if attempts > 1000 * target + 10_000 {
                return Err(Error::Capacity(format!("placed {} of {target} planted edges", edges.len())));
            }
            let u = rng.gen_range(0..m);
            let same = rng.gen::<f64>() < self.homophily;
            let v = if same {
                let members = &by_class[labels[u]];
                members[rng.gen_range(0..members.len())]
            } else {
                let other = (labels[u] + rng.gen_range(1..c)) % c;
                let members = &by_class[other];
                members[rng.gen_range(0..members.len())]
            };
            if u != v {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        edges.sort_unstable();

        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let n_train = ((m as f64) * self.train_frac).round() as usize;
        let n_valid = ((m as f64) * self.valid_frac).round() as usize;
        let splits = Splits {
            train: order[..n_train].to_vec(),
            valid: order[n_train..n_train + n_valid].to_vec(),
            test: order[n_train + n_valid..].to_vec(),
        };
        Graph::new(c, edges, features, labels.into_iter().map(Some).collect(), splits)
    }
}
