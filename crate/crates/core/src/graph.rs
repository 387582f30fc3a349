//! Partially labeled graphs and the on-disk dataset format.
//!
//! A dataset directory holds five UTF-8, tab-separated files:
//!
//! * `meta.json`: `{"num_nodes": M, "num_classes": C, "feature_dim": F}`
//! * `edges.tsv`: `src<TAB>dst` per line, 0-based ids
//! * `features.tsv`: line `i` holds the `F` features of node `i`
//! * `labels.tsv`: `node_id<TAB>class_id` for labeled nodes only
//! * `split.tsv`: `node_id<TAB>{train|valid|test}`
//!
//! Edges are undirected: `(u, v)` and `(v, u)` describe the same edge, and the
//! adjacency built from a graph is symmetric.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    num_nodes: usize,
    num_classes: usize,
    feature_dim: usize,
}

/// An immutable, partially labeled graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    features: Tensor,
    labels: Vec<Option<usize>>,
    splits: Splits,
}

impl Graph {
    /// Validates and canonicalizes a graph. Edges are stored once as
    /// `(min, max)` pairs, sorted, without duplicates. Self-loops are
    /// dropped; GCN normalization adds its own.
    pub fn new(
        num_classes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Tensor,
        labels: Vec<Option<usize>>,
        mut splits: Splits,
    ) -> Result<Self> {
        let m = features.rows();
        if labels.len() != m {
            return Err(Error::dim("Graph::new", format!("{} labels for {m} nodes", labels.len())));
        }
        if let Some((i, c)) =
            labels.iter().enumerate().find_map(|(i, l)| l.filter(|&c| c >= num_classes).map(|c| (i, c)))
        {
            return Err(Error::Contract(format!("node {i} has class {c} >= {num_classes}")));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= m || v >= m {
                return Err(Error::Contract(format!("edge ({u}, {v}) outside [0, {m})")));
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut seen = vec![None::<&'static str>; m];
        for (name, ids) in [("train", &mut splits.train), ("valid", &mut splits.valid), ("test", &mut splits.test)] {
            ids.sort_unstable();
            for &i in ids.iter() {
                if i >= m {
                    return Err(Error::Contract(format!("{name} node {i} outside [0, {m})")));
                }
                if let Some(prev) = seen[i] {
                    return Err(Error::Contract(format!("node {i} is in both {prev} and {name}")));
                }
                if labels[i].is_none() {
                    return Err(Error::Contract(format!("{name} node {i} has no label")));
                }
                seen[i] = Some(name);
            }
        }
        Ok(Self { num_classes, edges: set.into_iter().collect(), features, labels, splits })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Undirected edges as `(min, max)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    /// The training nodes, whose labels may be used as model input.
    pub fn train_nodes(&self) -> &[usize] {
        &self.splits.train
    }

    /// Nodes outside the training split.
    pub fn non_train_nodes(&self) -> Vec<usize> {
        let mut is_train = vec![false; self.num_nodes()];
        for &i in &self.splits.train {
            is_train[i] = true;
        }
        (0..self.num_nodes()).filter(|&i| !is_train[i]).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// The `M × C` label matrix: one-hot rows for labeled nodes, zero rows
    /// otherwise.
    pub fn label_matrix(&self) -> Tensor {
        self.label_matrix_for(&(0..self.num_nodes()).collect::<Vec<_>>())
    }

    /// Label matrix revealing only the labels of `visible` nodes.
    pub fn label_matrix_for(&self, visible: &[usize]) -> Tensor {
        let mut y = Tensor::zeros(self.num_nodes(), self.num_classes);
        for &i in visible {
            if let Some(c) = self.labels[i] {
                y.set(i, c, 1.0);
            }
        }
        y
    }

    /// Symmetric binary adjacency `A` (`M × M`).
    pub fn adjacency(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.edges.len() * 2);
        for &(u, v) in &self.edges {
            triplets.push((u, v, 1.0));
            if u != v {
                triplets.push((v, u, 1.0));
            }
        }
        let m = self.num_nodes();
        SparseMatrix::from_triplets(m, m, triplets).expect("edges validated at construction")
    }

    /// Same nodes, features, labels and splits with extra edges.
    pub fn with_added_edges(&self, extra: &[(usize, usize)]) -> Result<Self> {
        Graph::new(
            self.num_classes,
            self.edges.iter().copied().chain(extra.iter().copied()),
            self.features.clone(),
            self.labels.clone(),
            self.splits.clone(),
        )
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m = self.num_nodes();
        if perm.len() != m {
            return Err(Error::dim("permuted", format!("permutation of length {} for {m} nodes", perm.len())));
        }
        let mut features = Tensor::zeros(m, self.feature_dim());
        let mut labels = vec![None; m];
        for i in 0..m {
            features.row_mut(perm[i]).copy_from_slice(self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        let map = |ids: &[usize]| ids.iter().map(|&i| perm[i]).collect::<Vec<_>>();
        let splits =
            Splits { train: map(&self.splits.train), valid: map(&self.splits.valid), test: map(&self.splits.test) };
        Graph::new(self.num_classes, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])), features, labels, splits)
    }
}

/// Label feature matrix `E` (`C × F′`).
#[derive(Clone, Debug, PartialEq)]
pub struct LabelFeatures(pub Tensor);

impl LabelFeatures {
    /// One-hot label encodings: the `C × C` identity.
    pub fn one_hot(num_classes: usize) -> Self {
        Self(Tensor::eye(num_classes))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

/// Fraction of edges whose endpoints share a label. Edges with an unlabeled
/// endpoint are ignored.
pub fn compute_homophily(g: &Graph) -> Result<f64> {
    let mut same = 0usize;
    let mut total = 0usize;
    for &(u, v) in g.edges() {
        if let (Some(a), Some(b)) = (g.label(u), g.label(v)) {
            total += 1;
            if a == b {
                same += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Undefined("homophily of a graph without labeled edges".into()));
    }
    Ok(same as f64 / total as f64)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_id(path: &Path, line: usize, field: &str, raw: &str, bound: usize) -> Result<usize> {
    let id: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::format(path, line, format!("{field} `{raw}` is not a non-negative integer")))?;
    if id >= bound {
        return Err(Error::format(path, line, format!("{field} {id} >= {bound}")));
    }
    Ok(id)
}

fn pair<'a>(path: &Path, line_no: usize, line: &'a str) -> Result<(&'a str, &'a str)> {
    let mut it = line.split('\t');
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::format(path, line_no, "expected exactly two tab-separated fields")),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty())
}

/// Reads a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| Error::format(&meta_path, e.line(), e.to_string()))?;
    let m = meta.num_nodes;

    let path = dir.join("features.tsv");
    let text = read(&path)?;
    let mut data = Vec::with_capacity(m * meta.feature_dim);
    let mut rows = 0;
    for (no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))) {
        if rows == m {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::format(&path, no, format!("more than {m} feature rows")));
        }
        let values: Vec<&str> = if line.is_empty() { Vec::new() } else { line.split('\t').collect() };
        if values.len() != meta.feature_dim {
            return Err(Error::format(&path, no, format!("{} features, expected {}", values.len(), meta.feature_dim)));
        }
        for v in values {
            let x: f64 = v.trim().parse().map_err(|_| Error::format(&path, no, format!("`{v}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::format(&path, no, format!("non-finite feature `{v}`")));
            }
            data.push(x);
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::format(&path, rows + 1, format!("{rows} feature rows, expected {m}")));
    }
    let features = Tensor::new(m, meta.feature_dim, data)?;

    let path = dir.join("edges.tsv");
    let text = read(&path)?;
    let mut edges = Vec::new();
    for (no, line) in content_lines(&text) {
        let (a, b) = pair(&path, no, line)?;
        edges.push((parse_id(&path, no, "src", a, m)?, parse_id(&path, no, "dst", b, m)?));
    }

    let path = dir.join("labels.tsv");
    let text = read(&path)?;
    let mut labels = vec![None; m];
    for (no, line) in content_lines(&text) {
        let (a, b) = pair(&path, no, line)?;
        let node = parse_id(&path, no, "node_id", a, m)?;
        let class = parse_id(&path, no, "class_id", b, meta.num_classes)?;
        if labels[node].replace(class).is_some() {
            return Err(Error::format(&path, no, format!("node {node} labeled twice")));
        }
    }

    let path = dir.join("split.tsv");
    let text = read(&path)?;
    let mut splits = Splits::default();
    let mut seen: Vec<Option<usize>> = vec![None; m];
    for (no, line) in content_lines(&text) {
        let (a, b) = pair(&path, no, line)?;
        let node = parse_id(&path, no, "node_id", a, m)?;
        if let Some(prev) = seen[node] {
            return Err(Error::format(&path, no, format!("node {node} already assigned a split on line {prev}")));
        }
        seen[node] = Some(no);
        if labels[node].is_none() {
            return Err(Error::format(&path, no, format!("split node {node} has no label")));
        }
        match b.trim() {
            "train" => splits.train.push(node),
            "valid" => splits.valid.push(node),
            "test" => splits.test.push(node),
            other => return Err(Error::format(&path, no, format!("unknown split `{other}`"))),
        }
    }

    Graph::new(meta.num_classes, edges, features, labels, splits)
}

/// Writes `g` in the dataset directory format, creating `dir` if needed.
pub fn save_dataset(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))
    };

    let meta = Meta { num_nodes: g.num_nodes(), num_classes: g.num_classes(), feature_dim: g.feature_dim() };
    write("meta.json", serde_json::to_string_pretty(&meta)? + "\n")?;

    let mut body = String::new();
    for &(u, v) in g.edges() {
        body.push_str(&format!("{u}\t{v}\n"));
    }
    write("edges.tsv", body)?;

    let mut body = String::new();
    for r in 0..g.num_nodes() {
        let row: Vec<String> = g.features().row(r).iter().map(|v| v.to_string()).collect();
        body.push_str(&row.join("\t"));
        body.push('\n');
    }
    write("features.tsv", body)?;

    let mut body = String::new();
    for (i, l) in g.labels().iter().enumerate() {
        if let Some(c) = l {
            body.push_str(&format!("{i}\t{c}\n"));
        }
    }
    write("labels.tsv", body)?;

    let mut body = String::new();
    for (name, ids) in [("train", &g.splits().train), ("valid", &g.splits().valid), ("test", &g.splits().test)] {
        for i in ids {
            body.push_str(&format!("{i}\t{name}\n"));
        }
    }
    write("split.tsv", body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(labels: [usize; 3]) -> Graph {
        Graph::new(
            3,
            [(0, 1), (1, 2), (2, 0)],
            Tensor::zeros(3, 1),
            labels.iter().map(|&c| Some(c)).collect(),
            Splits::default(),
        )
        .unwrap()
    }

    #[test]
    fn homophily_by_edge_enumeration() {
        let g = triangle([1, 1, 2]);
        // Brute force over the undirected edge list.
        let same = g.edges().iter().filter(|&&(u, v)| g.label(u) == g.label(v)).count();
        assert_eq!(same, 1);
        assert!((compute_homophily(&g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_homophily(&triangle([0, 0, 0])).unwrap(), 1.0);
    }

    #[test]
    fn homophily_ignores_unlabeled_endpoints() {
        let g = Graph::new(2, [(0, 1), (1, 2)], Tensor::zeros(3, 1), vec![Some(0), Some(0), None], Splits::default())
            .unwrap();
        assert_eq!(compute_homophily(&g).unwrap(), 1.0);
        let g = Graph::new(2, [(0, 1)], Tensor::zeros(2, 1), vec![Some(0), None], Splits::default()).unwrap();
        assert!(matches!(compute_homophily(&g), Err(Error::Undefined(_))));
    }

    #[test]
    fn edges_are_symmetrized_and_deduplicated() {
        let g = Graph::new(1, [(1, 0), (0, 1), (2, 1)], Tensor::zeros(3, 1), vec![None; 3], Splits::default()).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        let a = g.adjacency().to_dense();
        assert_eq!(a, a.transpose());
        assert_eq!(a.sum(), 4.0);
    }

    #[test]
    fn overlapping_splits_are_rejected() {
        let splits = Splits { train: vec![0], valid: vec![], test: vec![0] };
        assert!(Graph::new(1, [], Tensor::zeros(1, 1), vec![Some(0)], splits).is_err());
    }

    #[test]
    fn label_matrix_hides_invisible_rows() {
        let g = triangle([1, 0, 2]);
        let y = g.label_matrix_for(&[0, 2]);
        assert_eq!(y.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(y.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(g.label_matrix().row(1), &[1.0, 0.0, 0.0]);
    }
}
