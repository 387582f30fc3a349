//! Python bindings: dataset I/O, synthetic graphs, metrics and experiment
//! runs. Configs and results cross the boundary as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use legnn::experiment::{run_ablation_on_graph, run_on_graph, run_synthetic_sweep, AblationKind, ExperimentConfig};
use legnn::graph::{compute_homophily, load_dataset, save_dataset};
use legnn::metrics;
use legnn::synthetic::PlantedPartition;
use legnn::train;

fn to_py(e: legnn::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// In-memory graph dataset.
#[pyclass(name = "Graph", module = "legnn_py", frozen)]
struct PyGraph(legnn::graph::Graph);

#[pymethods]
impl PyGraph {
    /// Reads a dataset directory.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_dataset(path).map(PyGraph).map_err(to_py)
    }

    /// A planted-partition graph with class-centroid features.
    #[staticmethod]
    #[pyo3(signature = (nodes=200, classes=4, features=16, degree=6.0, homophily=0.8, signal=1.0, train_frac=0.4, valid_frac=0.2, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn planted(
        nodes: usize,
        classes: usize,
        features: usize,
        degree: f64,
        homophily: f64,
        signal: f64,
        train_frac: f64,
        valid_frac: f64,
        seed: u64,
    ) -> PyResult<Self> {
        PlantedPartition {
            num_nodes: nodes,
            num_classes: classes,
            feature_dim: features,
            avg_degree: degree,
            homophily,
            feature_signal: signal,
            train_frac,
            valid_frac,
            seed,
        }
        .generate()
        .map(PyGraph)
        .map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_dataset(&self.0, path).map_err(to_py)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.0.feature_dim()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<Option<usize>> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.0.features().to_rows()
    }

    /// `(train, valid, test)` node ids.
    #[getter]
    fn splits(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let s = self.0.splits();
        (s.train.clone(), s.valid.clone(), s.test.clone())
    }

    fn homophily(&self) -> PyResult<f64> {
        compute_homophily(&self.0).map_err(to_py)
    }

    /// A copy with `s` added cross-label edges.
    #[pyo3(signature = (s, seed=0))]
    fn with_cross_label_edges(&self, s: usize, seed: u64) -> PyResult<Self> {
        legnn::synthetic::generate_synthetic(&self.0, s, seed).map(PyGraph).map_err(to_py)
    }

    /// Trains every seed of a JSON config on this graph; returns the result as JSON.
    fn run(&self, py: Python<'_>, config_json: &str) -> PyResult<String> {
        let cfg = parse_config(config_json)?;
        let result = py.detach(|| run_on_graph(&self.0, &cfg)).map_err(to_py)?;
        to_json(&result)
    }

    /// Runs an ablation (`tns`, `tc`, `ec` or `both`); returns JSON.
    fn ablate(&self, py: Python<'_>, config_json: &str, kind: &str) -> PyResult<String> {
        let cfg = parse_config(config_json)?;
        let kind: AblationKind = kind.parse().map_err(to_py)?;
        let result = py.detach(|| run_ablation_on_graph(&self.0, &cfg, kind)).map_err(to_py)?;
        to_json(&result)
    }

    /// Adds cross-label edges for each `s` and trains the sweep methods; returns JSON.
    fn sweep(&self, py: Python<'_>, config_json: &str, s_values: Vec<usize>) -> PyResult<String> {
        let cfg = parse_config(config_json)?;
        let result = py.detach(|| run_synthetic_sweep(&self.0, &s_values, &cfg)).map_err(to_py)?;
        to_json(&result)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, classes={}, features={})",
            self.0.num_nodes(),
            self.0.edges().len(),
            self.0.num_classes(),
            self.0.feature_dim()
        )
    }
}

fn parse_config(json: &str) -> PyResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json(json).map_err(to_py)?;
    if cfg.dataset.as_os_str().is_empty() {
        // The graph is supplied directly.
        cfg.dataset = "<in-memory>".into();
    }
    Ok(cfg)
}

/// Loads the dataset named in a JSON config and trains every seed; returns JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let result = py.detach(|| legnn::experiment::run_experiment(&cfg)).map_err(to_py)?;
    to_json(&result)
}

#[pyfunction]
fn training_confidence(epoch: usize, delta: f64) -> f64 {
    train::training_confidence(epoch, delta)
}

#[pyfunction]
fn accuracy(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::accuracy(&pred, &truth).map_err(to_py)
}

#[pyfunction]
fn macro_f1(pred: Vec<usize>, truth: Vec<usize>, num_classes: usize) -> PyResult<f64> {
    metrics::macro_f1(&pred, &truth, num_classes).map_err(to_py)
}

/// Mean class-wise spread of representation rows around their centroids.
#[pyfunction]
fn graph_difference(z: Vec<Vec<f64>>, labels: Vec<Option<usize>>, num_classes: usize) -> PyResult<f64> {
    let z = legnn::tensor::Tensor::from_rows(&z).map_err(to_py)?;
    let nodes: Vec<usize> = (0..z.rows()).collect();
    if labels.len() != z.rows() {
        return Err(PyValueError::new_err("labels and rows of z differ in length"));
    }
    metrics::graph_difference(&z, &labels, &nodes, num_classes).map_err(to_py)
}

#[pymodule]
fn legnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(training_confidence, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(graph_difference, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
