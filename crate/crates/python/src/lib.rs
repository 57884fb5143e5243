//! Python bindings for the `hybrid_ids` crate.
//!
//! Matrices cross the boundary as sequences of float sequences (nested
//! lists or 2-D numpy arrays) and come back as nested lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hybrid_ids::cascade::{train_cascade, CascadeModel};
use hybrid_ids::classifier::{self, Classifier};
use hybrid_ids::dataset::{self, HostTensorSet};
use hybrid_ids::error::ErrorKind;
use hybrid_ids::experiment::{self, ExperimentConfig};
use hybrid_ids::labeled::LabeledMatrix;
use hybrid_ids::metrics::{self, EvaluationReport};
use hybrid_ids::reduction::{self, apply_selection};
use hybrid_ids::{report, synth, Error, FusionMode, LabelMap, Matrix};

fn py_err(e: Error) -> PyErr {
    match (&e, e.kind()) {
        (Error::Io { .. } | Error::RawIo(_), _) => PyIOError::new_err(e.to_string()),
        (_, ErrorKind::Numeric) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(py_err)
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn parse_mode(mode: &str) -> PyResult<FusionMode> {
    mode.parse::<FusionMode>().map_err(py_err)
}

/// Width of a fused vector for flow width `f` and host shapes `m×n`, `p×q`.
#[pyfunction]
#[pyo3(signature = (f, m, n, p, q, mode = "h3"))]
fn hybrid_width(f: usize, m: usize, n: usize, p: usize, q: usize, mode: &str) -> PyResult<usize> {
    Ok(hybrid_ids::hybrid_width(f, m, n, p, q, parse_mode(mode)?))
}

/// Row-major flattening of a matrix.
#[pyfunction]
fn flatten(matrix: Vec<Vec<f64>>) -> Vec<f64> {
    hybrid_ids::flatten(&matrix)
}

#[pyfunction]
fn reshape(values: Vec<f64>, rows: usize, cols: usize) -> PyResult<Vec<Vec<f64>>> {
    hybrid_ids::fusion::reshape(&values, rows, cols).map_err(py_err)
}

#[pyclass(module = "hybrid_ids", name = "SelectionPlan", frozen)]
struct PySelectionPlan(reduction::SelectionPlan);

#[pymethods]
impl PySelectionPlan {
    #[new]
    #[pyo3(signature = (source, target, seed = 0))]
    fn new(source: (usize, usize), target: (usize, usize), seed: u64) -> PyResult<Self> {
        reduction::make_selection_plan(source, target, seed).map(Self).map_err(py_err)
    }

    #[getter]
    fn rows(&self) -> Vec<usize> {
        self.0.row_indices().to_vec()
    }

    #[getter]
    fn cols(&self) -> Vec<usize> {
        self.0.col_indices().to_vec()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    /// Picks the planned rows and columns of `matrix`.
    fn apply(&self, matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let dims = (matrix.len(), matrix.first().map_or(0, Vec::len));
        let flat = hybrid_ids::flatten(&matrix);
        let picked = apply_selection(&self.0, &flat, dims).map_err(py_err)?;
        let (r, c) = self.0.target_dims();
        hybrid_ids::fusion::reshape(&picked, r, c).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SelectionPlan(source={:?}, rows={:?}, cols={:?}, seed={})",
            self.0.source_dims(),
            self.0.row_indices(),
            self.0.col_indices(),
            self.0.seed()
        )
    }
}

#[pyclass(module = "hybrid_ids", name = "Pca", frozen)]
struct PyPca(reduction::PcaModel);

#[pymethods]
impl PyPca {
    #[staticmethod]
    fn fit(data: Vec<Vec<f64>>, k: usize) -> PyResult<Self> {
        reduction::fit_pca(&to_matrix(data)?, k).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        reduction::PcaModel::load(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    fn transform(&self, data: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.0.apply(&to_matrix(data)?).map_err(py_err)?))
    }

    fn reconstruct(&self, scores: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.0.reconstruct(&to_matrix(scores)?).map_err(py_err)?))
    }

    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        to_rows(self.0.components())
    }

    #[getter]
    fn explained_variance(&self) -> Vec<f64> {
        self.0.explained_variance().to_vec()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.0.mean().to_vec()
    }
}

fn params_from(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<classifier::GbdtParams> {
    let mut p = classifier::GbdtParams::default();
    if let Some(kw) = kwargs {
        for (key, value) in kw.iter() {
            let key: String = key.extract()?;
            match key.as_str() {
                "rounds" => p.rounds = value.extract()?,
                "max_depth" => p.max_depth = value.extract()?,
                "learning_rate" => p.learning_rate = value.extract()?,
                "min_child_weight" => p.min_child_weight = value.extract()?,
                "l2_lambda" => p.l2_lambda = value.extract()?,
                "subsample" => p.subsample = value.extract()?,
                "seed" => p.seed = value.extract()?,
                other => return Err(PyValueError::new_err(format!("unknown parameter `{other}`"))),
            }
        }
    }
    p.validate().map_err(py_err)?;
    Ok(p)
}

/// Gradient-boosted tree classifier.
#[pyclass(module = "hybrid_ids", name = "GbdtModel", frozen)]
struct PyGbdtModel(classifier::GbdtModel);

#[pymethods]
impl PyGbdtModel {
    /// Keyword parameters: rounds, max_depth, learning_rate,
    /// min_child_weight, l2_lambda, subsample, seed.
    #[staticmethod]
    #[pyo3(signature = (features, labels, n_classes, **params))]
    fn train(
        py: Python<'_>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let params = params_from(params)?;
        let x = to_matrix(features)?;
        py.detach(|| classifier::train(&x, &labels, n_classes, &params))
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        classifier::GbdtModel::load(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        Ok(self.0.predict(&to_matrix(features)?).map_err(py_err)?.labels)
    }

    fn predict_proba(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.0.predict(&to_matrix(features)?).map_err(py_err)?.scores))
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.0.class_count()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.0.trees().len()
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.0.loss_history().to_vec()
    }

    fn dump(&self) -> String {
        self.0.dump()
    }
}

/// Benign/attack gate followed by an attack-only multiclass model.
#[pyclass(module = "hybrid_ids", name = "Cascade", frozen)]
struct PyCascade(CascadeModel);

#[pymethods]
impl PyCascade {
    /// `labels` index into `class_names`; `benign` names the benign class.
    /// Keyword parameters apply to both stages.
    #[staticmethod]
    #[pyo3(signature = (features, labels, class_names, benign, **params))]
    fn train(
        py: Python<'_>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        benign: &str,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let params = params_from(params)?;
        let map = label_map(class_names, benign)?;
        let data = LabeledMatrix::new(to_matrix(features)?, labels, map).map_err(py_err)?;
        py.detach(|| train_cascade(&data, &params, &params))
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        CascadeModel::load(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        self.0.predict(&to_matrix(features)?).map_err(py_err)
    }

    #[getter]
    fn benign_id(&self) -> usize {
        self.0.benign_id()
    }

    #[getter]
    fn attack_ids(&self) -> Vec<usize> {
        self.0.attack_ids().to_vec()
    }
}

fn label_map(class_names: Vec<String>, benign: &str) -> PyResult<LabelMap> {
    let benign_id = class_names
        .iter()
        .position(|n| n == benign)
        .ok_or_else(|| PyValueError::new_err(format!("benign class `{benign}` not in class_names")))?;
    LabelMap::from_names(class_names, benign_id).map_err(py_err)
}

#[pyclass(module = "hybrid_ids", name = "Report", frozen)]
struct PyReport(EvaluationReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn macro_f1(&self) -> f64 {
        self.0.macro_f1
    }

    #[getter]
    fn weighted_f1(&self) -> f64 {
        self.0.weighted_f1
    }

    #[getter]
    fn accuracy(&self) -> f64 {
        self.0.accuracy
    }

    /// `{class: {"precision", "recall", "f1", "support"}}` in label order.
    fn per_class<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for s in &self.0.per_class {
            let row = PyDict::new(py);
            row.set_item("precision", s.precision)?;
            row.set_item("recall", s.recall)?;
            row.set_item("f1", s.f1)?;
            row.set_item("support", s.support)?;
            out.set_item(&s.name, row)?;
        }
        Ok(out)
    }

    #[getter]
    fn confusion(&self) -> Vec<Vec<u64>> {
        self.0.confusion.counts().to_vec()
    }

    fn text(&self) -> String {
        report::render_text(&self.0)
    }

    fn to_json(&self) -> String {
        report::render_json(&self.0)
    }
}

/// Per-class and aggregate scores of `pred` against `truth`.
#[pyfunction]
fn evaluate(truth: Vec<usize>, pred: Vec<usize>, class_names: Vec<String>, benign: &str) -> PyResult<PyReport> {
    let map = label_map(class_names, benign)?;
    metrics::evaluate(&truth, &pred, &map).map(PyReport).map_err(py_err)
}

#[pyclass(module = "hybrid_ids", name = "HostTensors", frozen)]
struct PyHostTensors(HostTensorSet);

#[pymethods]
impl PyHostTensors {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        dataset::load_host_tensors(path).map(Self).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.sample_ids().to_vec()
    }

    /// `(m, n, p, q)`.
    #[getter]
    fn dims(&self) -> (usize, usize, usize, usize) {
        let d = self.0.dims();
        (d.m, d.n, d.p, d.q)
    }

    fn event(&self, i: usize) -> PyResult<Vec<Vec<f32>>> {
        self.check(i)?;
        let d = self.0.dims();
        hybrid_ids::fusion::reshape(self.0.event(i), d.m, d.n).map_err(py_err)
    }

    fn message(&self, i: usize) -> PyResult<Vec<Vec<f32>>> {
        self.check(i)?;
        let d = self.0.dims();
        hybrid_ids::fusion::reshape(self.0.message(i), d.p, d.q).map_err(py_err)
    }
}

impl PyHostTensors {
    fn check(&self, i: usize) -> PyResult<()> {
        if i < self.0.len() {
            Ok(())
        } else {
            Err(pyo3::exceptions::PyIndexError::new_err(format!("sample {i} out of range")))
        }
    }
}

/// Writes the built-in benchmark corpus into `out_dir`; returns the paths.
#[pyfunction]
#[pyo3(signature = (out_dir, total = 20_000, seed = 0))]
fn generate_benchmark<'py>(py: Python<'py>, out_dir: PathBuf, total: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let spec = synth::SynthSpec::benchmark(total, seed);
    let files = synth::generate_synthetic(&spec)
        .and_then(|d| d.write(&out_dir))
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("flow_csv", files.flow_csv)?;
    out.set_item("host_tensors", files.host_tensors)?;
    out.set_item("label_map", files.label_map)?;
    Ok(out)
}

/// Runs a config file end to end; returns the mean report as a dict.
#[pyfunction]
#[pyo3(signature = (config, seed = None, rounds = None, out_dir = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: PathBuf,
    seed: Option<u64>,
    rounds: Option<usize>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = ExperimentConfig::load(config).map_err(py_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = rounds {
        cfg.rounds = r;
    }
    if let Some(o) = out_dir {
        cfg.out_dir = o;
    }
    let outcome = py.detach(|| experiment::run_experiment(&cfg)).map_err(py_err)?;
    let m = &outcome.mean;
    let out = PyDict::new(py);
    out.set_item("rounds", m.rounds)?;
    out.set_item("macro_f1", m.macro_f1)?;
    out.set_item("weighted_f1", m.weighted_f1)?;
    out.set_item("accuracy", m.accuracy)?;
    let f1 = PyDict::new(py);
    for (name, v) in m.class_names.iter().zip(&m.f1) {
        f1.set_item(name, v)?;
    }
    out.set_item("f1", f1)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "hybrid_ids")]
fn hybrid_ids_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hybrid_width, m)?)?;
    m.add_function(wrap_pyfunction!(flatten, m)?)?;
    m.add_function(wrap_pyfunction!(reshape, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<PySelectionPlan>()?;
    m.add_class::<PyPca>()?;
    m.add_class::<PyGbdtModel>()?;
    m.add_class::<PyCascade>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyHostTensors>()?;
    Ok(())
}
