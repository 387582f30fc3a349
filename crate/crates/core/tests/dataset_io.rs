use std::fs;
use std::path::{Path, PathBuf};

use legnn::graph::{compute_homophily, load_dataset, save_dataset};
use legnn::synthetic::PlantedPartition;
use legnn::Error;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy4")
}

fn copy_toy(dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for f in ["meta.json", "edges.tsv", "features.tsv", "labels.tsv", "split.tsv"] {
        fs::copy(toy_dir().join(f), dst.join(f)).unwrap();
    }
}

fn format_error_line(dir: &Path) -> (String, usize) {
    match load_dataset(dir) {
        Err(Error::Format { file, line, .. }) => (file.file_name().unwrap().to_string_lossy().into_owned(), line),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn toy_fixture_loads() {
    let g = load_dataset(toy_dir()).unwrap();
    assert_eq!((g.num_nodes(), g.num_classes(), g.feature_dim()), (4, 2, 2));
    assert_eq!(g.train_nodes(), &[0, 2]);
    assert_eq!(g.splits().valid, vec![1]);
    assert_eq!(g.splits().test, vec![3]);
    assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3)]);
    assert!((compute_homophily(&g).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn save_then_load_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let g = PlantedPartition { num_nodes: 30, num_classes: 3, feature_dim: 4, seed: 2, ..Default::default() }
        .generate()
        .unwrap();
    save_dataset(&g, tmp.path()).unwrap();
    assert_eq!(load_dataset(tmp.path()).unwrap(), g);
}

#[test]
fn reversed_duplicate_and_self_loop_edges_collapse() {
    let tmp = tempfile::tempdir().unwrap();
    copy_toy(tmp.path());
    fs::write(tmp.path().join("edges.tsv"), "1\t0\n0\t1\n2\t1\n2\t2\n2\t3\n").unwrap();
    assert_eq!(load_dataset(tmp.path()).unwrap(), load_dataset(toy_dir()).unwrap());
}

#[test]
fn malformed_files_report_file_and_line() {
    let cases: [(&str, &str, usize); 7] = [
        ("features.tsv", "1.0\t0.0\n0.8\n0.1\t0.9\n0.0\t1.0\n", 2),
        ("features.tsv", "1.0\t0.0\n0.8\t0.1\n0.1\tx\n0.0\t1.0\n", 3),
        ("edges.tsv", "0\t1\n1\t9\n", 2),
        ("labels.tsv", "0\t0\n1\t2\n", 2),
        ("labels.tsv", "0\t0\n0\t1\n", 2),
        ("split.tsv", "0\ttrain\n1\tvalid\n1\ttest\n", 3),
        ("split.tsv", "0\ttrain\n1\tholdout\n", 2),
    ];
    for (file, body, line) in cases {
        let tmp = tempfile::tempdir().unwrap();
        copy_toy(tmp.path());
        fs::write(tmp.path().join(file), body).unwrap();
        assert_eq!(format_error_line(tmp.path()), (file.to_string(), line), "{file}: {body:?}");
    }
}

#[test]
fn split_node_without_label_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    copy_toy(tmp.path());
    fs::write(tmp.path().join("labels.tsv"), "0\t0\n1\t0\n2\t1\n").unwrap();
    assert_eq!(format_error_line(tmp.path()), ("split.tsv".to_string(), 4));
}

#[test]
fn missing_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    copy_toy(tmp.path());
    fs::remove_file(tmp.path().join("edges.tsv")).unwrap();
    assert!(matches!(load_dataset(tmp.path()), Err(Error::Io { .. })));
}

#[test]
fn unlabeled_endpoints_do_not_count_towards_homophily() {
    let tmp = tempfile::tempdir().unwrap();
    copy_toy(tmp.path());
    fs::write(tmp.path().join("labels.tsv"), "0\t0\n1\t0\n2\t1\n").unwrap();
    fs::write(tmp.path().join("split.tsv"), "0\ttrain\n1\tvalid\n2\ttrain\n").unwrap();
    let g = load_dataset(tmp.path()).unwrap();
    assert_eq!(g.label(3), None);
    assert!((compute_homophily(&g).unwrap() - 0.5).abs() < 1e-15);
}
