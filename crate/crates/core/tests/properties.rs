use proptest::prelude::*;

use legnn::graph::{compute_homophily, Graph, Splits};
use legnn::hetero::build_hetero_graph;
use legnn::metrics::{accuracy, class_scores, graph_difference, label_difference, macro_f1};
use legnn::rng::seeded;
use legnn::sparse::SparseMatrix;
use legnn::synthetic::generate_synthetic;
use legnn::tensor::Tensor;
use legnn::train::{gate_pseudo_labels, select_training_nodes, training_confidence};

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (3usize..14, 2usize..5)
        .prop_flat_map(|(m, c)| {
            (
                Just(m),
                Just(c),
                prop::collection::vec((0..m, 0..m), 1..3 * m),
                prop::collection::vec(prop::option::weighted(0.8, 0..c), m),
            )
        })
        .prop_map(|(m, c, edges, labels)| {
            let edges: Vec<_> = edges.into_iter().filter(|(u, v)| u != v).collect();
            Graph::new(c, edges, Tensor::zeros(m, 1), labels, Splits::default()).unwrap()
        })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |d| Tensor::new(rows, cols, d).unwrap())
}

fn dense_hetero(g: &Graph, connected: &[usize]) -> Vec<Vec<f64>> {
    let (m, c) = (g.num_nodes(), g.num_classes());
    let mut a = vec![vec![0.0; m + c]; m + c];
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    for &i in connected {
        let l = g.label(i).unwrap();
        a[i][m + l] = 1.0;
        a[m + l][i] = 1.0;
    }
    a
}

proptest! {
    #[test]
    fn hetero_graph_matches_dense_construction(g in graph_strategy(), mask in prop::collection::vec(any::<bool>(), 14)) {
        let connected: Vec<usize> = (0..g.num_nodes()).filter(|&i| mask[i] && g.label(i).is_some()).collect();
        let h = build_hetero_graph(&g, &connected).unwrap();
        let dense = h.adjacency().to_dense();
        let expected = dense_hetero(&g, &connected);
        prop_assert_eq!(dense.to_rows(), expected);
        // Label vertices never touch each other.
        let m = g.num_nodes();
        for r in m..m + g.num_classes() {
            prop_assert!(h.adjacency().row_indices(r).iter().all(|&c| c < m));
        }
    }

    #[test]
    fn homophily_matches_edge_count(g in graph_strategy()) {
        let labeled: Vec<_> = g.edges().iter().filter_map(|&(u, v)| Some((g.label(u)?, g.label(v)?))).collect();
        match compute_homophily(&g) {
            Ok(h) => {
                let same = labeled.iter().filter(|(a, b)| a == b).count();
                prop_assert!((h - same as f64 / labeled.len() as f64).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&h));
            }
            Err(_) => prop_assert!(labeled.is_empty()),
        }
    }

    #[test]
    fn selection_partitions_labeled_nodes(n in 2usize..200, alpha in 0.01f64..0.99, seed in any::<u64>()) {
        let labeled: Vec<usize> = (0..n).map(|i| 3 * i + 1).collect();
        let k = (alpha * n as f64).floor() as usize;
        match select_training_nodes(&labeled, alpha, &mut seeded(seed, 11)) {
            Ok(s) => {
                prop_assert_eq!(s.targets.len(), k);
                let mut all = [s.targets.clone(), s.connected.clone()].concat();
                all.sort_unstable();
                prop_assert_eq!(all, labeled);
                prop_assert!(s.targets.iter().all(|t| s.connected.binary_search(t).is_err()));
            }
            Err(_) => prop_assert!(k == 0 || k == n),
        }
    }

    #[test]
    fn training_confidence_is_monotone(delta in 0.5f64..100.0, e in 1usize..1000) {
        let (a, b) = (training_confidence(e, delta), training_confidence(e + 1, delta));
        prop_assert!(a < b || (a == b && a == 1.0));
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!((training_confidence(e, e as f64) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gate_shrinks_as_threshold_rises(
        logits in matrix(20, 3),
        tc in 0.0f64..1.0,
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let probs = legnn::autodiff::softmax_rows(&logits);
        let cands: Vec<usize> = (0..20).step_by(2).collect();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let loose = gate_pseudo_labels(&probs, &cands, tc, lo);
        let tight = gate_pseudo_labels(&probs, &cands, tc, hi);
        prop_assert!(tight.members.iter().all(|m| loose.members.contains(m)));
        for m in &loose.members {
            prop_assert!(cands.contains(&m.node));
            prop_assert_eq!(m.label, probs.argmax_rows()[m.node]);
            prop_assert!(m.confidence * tc > lo);
        }
        // A higher training confidence admits at least as many nodes.
        let more = gate_pseudo_labels(&probs, &cands, (tc + 0.1).min(1.0), lo);
        prop_assert!(more.len() >= loose.len());
    }

    #[test]
    fn metrics_agree_with_confusion_matrix(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let mut conf = [[0usize; 4]; 4];
        for &(p, t) in &pairs {
            conf[t][p] += 1;
        }
        let correct: usize = (0..4).map(|c| conf[c][c]).sum();
        prop_assert!((accuracy(&pred, &truth).unwrap() - correct as f64 / pairs.len() as f64).abs() < 1e-15);
        let scores = class_scores(&pred, &truth, 4).unwrap();
        let mut f1_sum = 0.0;
        for c in 0..4 {
            let tp = conf[c][c] as f64;
            let predicted: usize = (0..4).map(|t| conf[t][c]).sum();
            let actual: usize = conf[c].iter().sum();
            let p = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let r = if actual == 0 { 0.0 } else { tp / actual as f64 };
            let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            prop_assert!((scores[c].precision - p).abs() < 1e-12);
            prop_assert!((scores[c].recall - r).abs() < 1e-12);
            prop_assert!((scores[c].f1 - f1).abs() < 1e-12);
            prop_assert_eq!(scores[c].support, actual);
            f1_sum += f1;
        }
        prop_assert!((macro_f1(&pred, &truth, 4).unwrap() - f1_sum / 4.0).abs() < 1e-12);
    }

    #[test]
    fn graph_difference_invariances(
        z in matrix(12, 3),
        shift in prop::collection::vec(-3.0f64..3.0, 3),
        k in 0.1f64..4.0,
        labels in prop::collection::vec(prop::option::of(0usize..3), 12),
        seed in any::<u64>(),
    ) {
        let nodes: Vec<usize> = (0..12).collect();
        prop_assume!(labels.iter().any(Option::is_some));
        let gd = graph_difference(&z, &labels, &nodes, 3).unwrap();
        prop_assert!(gd >= 0.0);

        let mut shifted = z.clone();
        for r in 0..12 {
            for (x, s) in shifted.row_mut(r).iter_mut().zip(&shift) {
                *x += s;
            }
        }
        prop_assert!((graph_difference(&shifted, &labels, &nodes, 3).unwrap() - gd).abs() < 1e-9);
        prop_assert!((graph_difference(&z.scale(k), &labels, &nodes, 3).unwrap() - k * gd).abs() < 1e-9);

        // Relabeling the nodes permutes rows and labels together.
        use rand::seq::SliceRandom;
        let mut perm = nodes.clone();
        perm.shuffle(&mut seeded(seed, 0));
        let zp = z.select_rows(&perm).unwrap();
        let lp: Vec<_> = perm.iter().map(|&i| labels[i]).collect();
        prop_assert!((graph_difference(&zp, &lp, &nodes, 3).unwrap() - gd).abs() < 1e-9);
    }

    #[test]
    fn label_difference_of_identical_rows_is_zero(row in prop::collection::vec(-5.0f64..5.0, 4), n in 1usize..8) {
        let z = Tensor::from_rows(&vec![row; n]).unwrap();
        prop_assert!(label_difference(&z, &(0..n).collect::<Vec<_>>()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn spmm_matches_dense_product(
        entries in prop::collection::vec((0usize..6, 0usize..5, -2.0f64..2.0), 0..20),
        x in matrix(5, 3),
    ) {
        let mut dense = Tensor::zeros(6, 5);
        let mut uniq = std::collections::BTreeMap::new();
        for (r, c, v) in entries {
            uniq.insert((r, c), v);
        }
        for (&(r, c), &v) in &uniq {
            dense.set(r, c, v);
        }
        let s = SparseMatrix::from_dense(&dense);
        prop_assert_eq!(s.to_dense(), dense.clone());
        prop_assert!(s.spmm(&x).unwrap().max_abs_diff(&dense.matmul(&x).unwrap()).unwrap() < 1e-12);
        prop_assert_eq!(s.transpose().to_dense(), dense.transpose());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_edges_nest_and_lower_homophily(seed in 0u64..1000, s1 in 0usize..30, s2 in 0usize..30) {
        let base = legnn::synthetic::PlantedPartition {
            num_nodes: 40, num_classes: 3, feature_dim: 2, homophily: 0.9, seed: 5, ..Default::default()
        }
        .generate()
        .unwrap();
        let (lo, hi) = (s1.min(s2), s1.max(s2));
        let a = generate_synthetic(&base, lo, seed).unwrap();
        let b = generate_synthetic(&base, hi, seed).unwrap();
        prop_assert_eq!(a.edges().len(), base.edges().len() + lo);
        prop_assert_eq!(b.edges().len(), base.edges().len() + hi);
        prop_assert!(a.edges().iter().all(|&(u, v)| b.has_edge(u, v)));
        for &(u, v) in b.edges() {
            if !base.has_edge(u, v) {
                prop_assert_ne!(b.label(u), b.label(v));
            }
        }
        prop_assert!(compute_homophily(&b).unwrap() <= compute_homophily(&a).unwrap());
        prop_assert_eq!(a.features(), base.features());
        prop_assert_eq!(a.labels(), base.labels());
    }
}
