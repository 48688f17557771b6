//! Python bindings: `import tstweak`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tstweak::eval::Classifier;
use tstweak::io::Delimiter;
use tstweak::tweak::{self as tw, TweakConfig, TweakResult};
use tstweak::{Direction, Hyperparameters, LabeledSeries, Shapelet, TimeSeries};

fn to_py(err: tstweak::Error) -> PyErr {
    match err {
        tstweak::Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn series(values: Vec<f64>) -> PyResult<TimeSeries> {
    TimeSeries::new(values).map_err(to_py)
}

fn dataset(labels: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Vec<LabeledSeries>> {
    if labels.len() != rows.len() {
        return Err(PyValueError::new_err(format!(
            "{} labels for {} series",
            labels.len(),
            rows.len()
        )));
    }
    labels
        .into_iter()
        .zip(rows)
        .map(|(l, v)| Ok(LabeledSeries::new(l, series(v)?)))
        .collect()
}

#[pyfunction]
fn euclidean_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    tstweak::euclidean_distance(&a, &b).map_err(to_py)
}

/// `(distance, start)` of the best-matching window.
#[pyfunction]
fn subsequence_distance(shapelet: Vec<f64>, series: Vec<f64>) -> PyResult<(f64, usize)> {
    let s = Shapelet::new(shapelet).map_err(to_py)?;
    let m = tstweak::subsequence_distance(&s, &series).map_err(to_py)?;
    Ok((m.distance, m.start))
}

#[pyfunction]
#[pyo3(signature = (original, transformed, e = 1e-9))]
fn compactness(original: Vec<f64>, transformed: Vec<f64>, e: f64) -> PyResult<f64> {
    tstweak::eval::compactness(&series(original)?, &series(transformed)?, e).map_err(to_py)
}

/// `(labels, rows)` from a UCR-style file.
#[pyfunction]
#[pyo3(signature = (path, delimiter = None, normalize = false))]
fn parse_ucr(path: &str, delimiter: Option<&str>, normalize: bool) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let delimiter = delimiter
        .map(|d| d.parse::<Delimiter>().map_err(PyValueError::new_err))
        .transpose()?;
    let mut file = tstweak::io::parse_ucr(path, delimiter).map_err(to_py)?;
    if normalize {
        file.z_normalize();
    }
    Ok(file
        .records
        .into_iter()
        .map(|r| (r.label, r.series.into_values()))
        .unzip())
}

#[pyclass(name = "ShapeletForest", module = "tstweak", frozen)]
struct PyForest {
    inner: tstweak::ShapeletForest,
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    #[pyo3(signature = (labels, series, n_trees = 100, shapelets_per_node = 100, min_len = 2, max_len = None, seed = 0, bootstrap = true))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        labels: Vec<String>,
        series: Vec<Vec<f64>>,
        n_trees: usize,
        shapelets_per_node: usize,
        min_len: usize,
        max_len: Option<usize>,
        seed: u64,
        bootstrap: bool,
    ) -> PyResult<Self> {
        let data = dataset(labels, series)?;
        let hp = Hyperparameters {
            n_trees,
            shapelets_per_node,
            min_len,
            max_len,
            seed,
            bootstrap,
        };
        let inner = py.detach(|| tstweak::train(&data, &hp)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: tstweak::persist::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        tstweak::persist::save(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = tstweak::persist::to_bytes(&self.inner).map_err(to_py)?;
        Ok(String::from_utf8(bytes).expect("model JSON is UTF-8"))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: tstweak::persist::from_bytes(text.as_bytes()).map_err(to_py)?,
        })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees().len()
    }

    fn predict(&self, series: Vec<f64>) -> PyResult<String> {
        self.inner.classify(&self::series(series)?).map_err(to_py)
    }

    /// Per-tree votes, counted per label.
    fn votes<'py>(&self, py: Python<'py>, series: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let votes = self.inner.votes(&series).map_err(to_py)?;
        let out = PyDict::new(py);
        for (class, label) in self.inner.labels().iter().enumerate() {
            out.set_item(label, votes.iter().filter(|&&v| v == class).count())?;
        }
        Ok(out)
    }

    /// Decision paths ending in `label`, each a dict with `tree_index`,
    /// `path_index` and `conditions` as `(shapelet, threshold, "<=" | ">")`.
    fn extract_paths<'py>(&self, py: Python<'py>, label: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let paths = self.inner.extract_paths(label).map_err(to_py)?;
        paths
            .into_iter()
            .map(|p| {
                let d = PyDict::new(py);
                d.set_item("tree_index", p.tree_index)?;
                d.set_item("path_index", p.path_index)?;
                let conditions: Vec<(Vec<f64>, f64, &str)> = p
                    .conditions
                    .iter()
                    .map(|c| {
                        let op = match c.direction {
                            Direction::Le => "<=",
                            Direction::Gt => ">",
                        };
                        (c.shapelet.values().to_vec(), c.threshold, op)
                    })
                    .collect();
                d.set_item("conditions", conditions)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("ShapeletForest(n_trees={}, labels={:?})", self.inner.trees().len(), self.inner.labels())
    }
}

fn result_dict<'py>(py: Python<'py>, r: TweakResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("transformed", r.transformed.into_values())?;
    d.set_item("cost", r.cost)?;
    d.set_item("success", r.success)?;
    let edits: Vec<(usize, usize, usize, usize, usize)> = r
        .edits
        .iter()
        .map(|e| (e.tree_index, e.path_index, e.condition_index, e.start, e.len))
        .collect();
    d.set_item("edits", edits)?;
    d.set_item("candidate", r.candidate)?;
    d.set_item("candidates", r.stats.candidates)?;
    d.set_item("predictions", r.stats.predictions)?;
    d.set_item("pruned_fraction", r.stats.pruned_fraction)?;
    d.set_item("abandoned_fraction", r.stats.abandoned_fraction)?;
    d.set_item("diagnostic", r.diagnostic)?;
    Ok(d)
}

/// Tweak `series` toward `target`. `method` is `"rt"`, `"rt-unpruned"`,
/// `"irt"` or `"nn"`; `"nn"` needs `training=(labels, rows)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (forest, series, target, method = "rt", epsilon = 1.0, early_abandoning = true, training = None))]
fn tweak<'py>(
    py: Python<'py>,
    forest: &PyForest,
    series: Vec<f64>,
    target: &str,
    method: &str,
    epsilon: f64,
    early_abandoning: bool,
    training: Option<(Vec<String>, Vec<Vec<f64>>)>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = self::series(series)?;
    let config = TweakConfig {
        epsilon,
        early_abandoning,
        ..Default::default()
    };
    let f = &forest.inner;
    let result = match method {
        "rt" => tw::tweak_reversible_pruned(f, &s, target, &config),
        "rt-unpruned" => tw::tweak_reversible(f, &s, target, &config),
        "irt" => tw::tweak_irreversible(f, &s, target, &config),
        "nn" => {
            let (labels, rows) =
                training.ok_or_else(|| PyValueError::new_err("method 'nn' needs training=(labels, rows)"))?;
            tw::tweak_nn(f, &s, target, &dataset(labels, rows)?)
        }
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    }
    .map_err(to_py)?;
    result_dict(py, result)
}

#[pymodule]
#[pyo3(name = "tstweak")]
fn tstweak_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForest>()?;
    m.add_function(wrap_pyfunction!(euclidean_distance, m)?)?;
    m.add_function(wrap_pyfunction!(subsequence_distance, m)?)?;
    m.add_function(wrap_pyfunction!(compactness, m)?)?;
    m.add_function(wrap_pyfunction!(parse_ucr, m)?)?;
    m.add_function(wrap_pyfunction!(tweak, m)?)?;
    Ok(())
}
