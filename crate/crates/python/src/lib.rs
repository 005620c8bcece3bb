//! Python bindings for `disagree_core`.
//!
//! Structured results cross the boundary as plain dicts and lists (built from
//! the core types' JSON form); datasets and schemes stay opaque handles.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use disagree_core::baselines::{most_frequent_label, most_frequent_soft, random_label, random_soft, RandomFamily};
use disagree_core::corpus::{parse_named_dataset, validate_dataset, Split};
use disagree_core::metrics::{error_rate, manhattan_distance, nad, wasserstein_distance, AnnotatorLabelVector};
use disagree_core::predictions::{gold_label_predictions, gold_soft_predictions, score_predictions};
use disagree_core::ranking::{
    cluster_ties, cross_dataset_leaderboard, wilcoxon_signed_rank_with, Leaderboard, PValueMethod, PValueMode,
    SystemRun, ZeroMethod,
};
use disagree_core::softlabels::{derive_soft_label, Distribution};
use disagree_core::synth::{generate_corpus, perturb_predictions, PopulationSpec};
use disagree_core::{LabelScheme, Metric, PredictionFile, Predictions, ScoreReport, Task};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: Display,
{
    s.parse::<T>().map_err(value_err)
}

/// Serializes through JSON so every core type arrives as builtin Python objects.
fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

#[pyclass(name = "Scheme", module = "disagree", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyScheme(LabelScheme);

#[pymethods]
impl PyScheme {
    /// A bundled scheme ("csc", "mp", "par", "ven"), a scheme JSON file, or inline JSON.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        LabelScheme::resolve(spec).map(PyScheme).map_err(value_err)
    }

    #[staticmethod]
    fn binary() -> Self {
        PyScheme(LabelScheme::Binary)
    }

    #[staticmethod]
    fn ordinal(min_value: i64, max_value: i64) -> PyResult<Self> {
        LabelScheme::ordinal(min_value, max_value).map(PyScheme).map_err(value_err)
    }

    #[staticmethod]
    fn multilabel(label_names: Vec<String>) -> PyResult<Self> {
        LabelScheme::multilabel(label_names).map(PyScheme).map_err(value_err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.0 {
            LabelScheme::Binary => "binary",
            LabelScheme::Ordinal { .. } => "ordinal",
            LabelScheme::Multilabel { .. } => "multilabel",
        }
    }

    #[getter]
    fn bin_count(&self) -> usize {
        self.0.bin_count()
    }

    #[getter]
    fn positions(&self) -> Vec<i64> {
        self.0.positions()
    }

    #[getter]
    fn label_names(&self) -> Vec<String> {
        self.0.label_names().to_vec()
    }

    fn official_metric(&self, task: &str) -> PyResult<String> {
        Ok(Metric::official(parse(task)?, &self.0).name().to_string())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("Scheme({})", self.0)
    }
}

#[pyclass(name = "Dataset", module = "disagree", frozen)]
struct PyDataset(disagree_core::Dataset);

#[pymethods]
impl PyDataset {
    /// Parses a dataset file's contents under `scheme`.
    #[staticmethod]
    #[pyo3(signature = (text, scheme, name = "dataset"))]
    fn parse(text: &str, scheme: &PyScheme, name: &str) -> PyResult<Self> {
        parse_named_dataset(text.as_bytes(), &scheme.0, name)
            .map(PyDataset)
            .map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, scheme, name = None))]
    fn load(path: PathBuf, scheme: &PyScheme, name: Option<&str>) -> PyResult<Self> {
        let bytes = std::fs::read(&path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        parse_named_dataset(&bytes, &scheme.0, name.unwrap_or(&stem))
            .map(PyDataset)
            .map_err(value_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn scheme(&self) -> PyScheme {
        PyScheme(self.0.scheme.clone())
    }

    fn __len__(&self) -> usize {
        self.0.items.len()
    }

    fn item_ids(&self) -> Vec<String> {
        self.0.items.iter().map(|i| i.item_id.clone()).collect()
    }

    /// Items of one split as a new dataset.
    fn split(&self, split: &str) -> PyResult<Self> {
        Ok(PyDataset(self.0.split(parse::<Split>(split)?)))
    }

    /// Findings as strings; empty when the dataset is clean.
    fn validate(&self) -> Vec<String> {
        validate_dataset(&self.0).findings.iter().map(|f| f.to_string()).collect()
    }

    /// Item id -> soft label derived from the annotations.
    fn soft_labels<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for item in &self.0.items {
            let exact = derive_soft_label(item, &self.0.scheme).map_err(value_err)?;
            out.set_item(&item.item_id, to_py(py, &exact.to_soft_label(&self.0.scheme).to_json())?)?;
        }
        Ok(out)
    }

    /// Item id -> list of (annotator, label).
    fn annotations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let map: BTreeMap<&str, Vec<(&str, &disagree_core::LabelValue)>> = self
            .0
            .items
            .iter()
            .map(|i| {
                let labels = i
                    .annotations
                    .iter()
                    .map(|a| (a.annotator_id.as_str(), &a.value))
                    .collect();
                (i.item_id.as_str(), labels)
            })
            .collect();
        to_py(py, &map)
    }

    fn to_json(&self) -> String {
        self.0.to_json_pretty()
    }

    /// The gold annotations as a prediction file (a perfect system).
    fn gold_predictions(&self, task: &str) -> PyResult<String> {
        let p = match parse::<Task>(task)? {
            Task::A => Predictions::A(gold_soft_predictions(&self.0)),
            Task::B => Predictions::B(gold_label_predictions(&self.0)),
        };
        Ok(PredictionFile::new(self.0.name.clone(), self.0.scheme.clone(), p).to_ndjson())
    }

    fn __repr__(&self) -> String {
        format!("Dataset({:?}, {} items, {})", self.0.name, self.0.items.len(), self.0.scheme)
    }
}

fn distribution(probs: Vec<f64>, positions: Option<Vec<i64>>) -> PyResult<Distribution> {
    let positions = positions.unwrap_or_else(|| (0..probs.len() as i64).collect());
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(value_err("positions must be strictly increasing"));
    }
    Distribution::with_positions(positions, probs, true).map_err(value_err)
}

/// L1 distance between two distributions over the same bins.
#[pyfunction]
fn manhattan(p: Vec<f64>, t: Vec<f64>) -> PyResult<f64> {
    manhattan_distance(&distribution(p, None)?, &distribution(t, None)?).map_err(value_err)
}

/// 1-D earth mover's distance; bins sit at `positions` (default 0, 1, 2, ...).
#[pyfunction]
#[pyo3(signature = (p, t, positions = None))]
fn wasserstein(p: Vec<f64>, t: Vec<f64>, positions: Option<Vec<i64>>) -> PyResult<f64> {
    wasserstein_distance(&distribution(p, positions.clone())?, &distribution(t, positions)?).map_err(value_err)
}

fn scalar_vector(values: Vec<i64>) -> AnnotatorLabelVector {
    let ids = (0..values.len()).map(|k| format!("A{k}")).collect();
    AnnotatorLabelVector::scalar("item", ids, values)
}

/// Fraction of annotators whose label is predicted wrongly.
#[pyfunction]
fn error_rate_of(gold: Vec<i64>, predicted: Vec<i64>) -> PyResult<f64> {
    error_rate(&scalar_vector(gold), &scalar_vector(predicted)).map_err(value_err)
}

/// Mean absolute label distance divided by the scale range of `scheme`.
#[pyfunction]
fn normalized_absolute_distance(gold: Vec<i64>, predicted: Vec<i64>, scheme: &PyScheme) -> PyResult<f64> {
    nad(&scalar_vector(gold), &scalar_vector(predicted), &scheme.0).map_err(value_err)
}

fn p_value_mode(mode: &str) -> PyResult<PValueMode> {
    match mode {
        "auto" => Ok(PValueMode::Auto),
        "exact" => Ok(PValueMode::Exact),
        "normal" => Ok(PValueMode::Normal),
        other => Err(value_err(format!("unknown p-value mode {other:?}"))),
    }
}

/// Two-sided paired Wilcoxon signed-rank test.
#[pyfunction]
#[pyo3(signature = (x, y, zero_method = "wilcox", mode = "auto"))]
fn wilcoxon<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, zero_method: &str, mode: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = wilcoxon_signed_rank_with(&x, &y, parse::<ZeroMethod>(zero_method)?, p_value_mode(mode)?)
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("p_value", r.p_value)?;
    out.set_item("statistic", r.statistic)?;
    out.set_item("n_effective", r.n_effective)?;
    out.set_item(
        "method",
        match r.method {
            PValueMethod::Exact => "exact",
            PValueMethod::Normal => "normal",
            PValueMethod::Degenerate => "degenerate",
        },
    )?;
    Ok(out)
}

/// Scores an NDJSON prediction file against `gold`. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (gold, predictions, metric = None))]
fn score<'py>(py: Python<'py>, gold: &PyDataset, predictions: &str, metric: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let file = PredictionFile::parse(predictions.as_bytes(), Some(&gold.0.scheme)).map_err(value_err)?;
    let metric = match metric {
        Some(m) => parse::<Metric>(m)?,
        None => Metric::official(file.header.task, &gold.0.scheme),
    };
    let mut report = score_predictions(&gold.0, &file.predictions, metric).map_err(value_err)?;
    report.dataset = Some(gold.0.name.clone());
    to_py(py, &report)
}

/// Baseline predictions for `target` as an NDJSON prediction file.
/// `kind` is "most-frequent" (fitted on `train`) or "random".
#[pyfunction]
#[pyo3(signature = (kind, target, task, train = None, seed = 0, family = "simplex"))]
fn baseline(kind: &str, target: &PyDataset, task: &str, train: Option<&PyDataset>, seed: u64, family: &str) -> PyResult<String> {
    let scheme = &target.0.scheme;
    let items = &target.0.items;
    let task = parse::<Task>(task)?;
    let predictions = match kind.to_ascii_lowercase().replace('_', "-").as_str() {
        "random" => match task {
            Task::A => Predictions::A(random_soft(scheme, items, seed, parse::<RandomFamily>(family)?)),
            Task::B => Predictions::B(random_label(scheme, items, seed)),
        },
        "most-frequent" => {
            let train = &train.ok_or_else(|| value_err("most-frequent needs a training dataset"))?.0;
            match task {
                Task::A => Predictions::A(most_frequent_soft(train).map_err(value_err)?.assign(scheme, items)),
                Task::B => Predictions::B(most_frequent_label(train).map_err(value_err)?.assign(items)),
            }
        }
        other => return Err(value_err(format!("unknown baseline {other:?}"))),
    };
    Ok(PredictionFile::new(target.0.name.clone(), scheme.clone(), predictions).to_ndjson())
}

/// A synthetic annotated corpus; `noise` in [0, 1] controls annotator disagreement.
#[pyfunction]
#[pyo3(signature = (scheme, n_items, n_annotators, noise = 0.3, seed = 0, latent_weights = None, split = "train"))]
fn synth_corpus(
    scheme: &PyScheme,
    n_items: usize,
    n_annotators: usize,
    noise: f64,
    seed: u64,
    latent_weights: Option<Vec<f64>>,
    split: &str,
) -> PyResult<PyDataset> {
    let mut spec = PopulationSpec::noisy(scheme.0.clone(), n_items, n_annotators, noise, seed).with_split(parse(split)?);
    if let Some(w) = latent_weights {
        spec = spec.with_latent_weights(w);
    }
    generate_corpus(&spec).map(PyDataset).map_err(value_err)
}

/// Gold predictions corrupted at `level` in [0, 1], as an NDJSON prediction file.
#[pyfunction]
#[pyo3(signature = (gold, level, task, seed = 0))]
fn perturb(gold: &PyDataset, level: f64, task: &str, seed: u64) -> PyResult<String> {
    if !(0.0..=1.0).contains(&level) {
        return Err(value_err("level must lie in [0, 1]"));
    }
    let p = perturb_predictions(&gold.0, level, seed);
    let predictions = match parse::<Task>(task)? {
        Task::A => Predictions::A(p.soft),
        Task::B => Predictions::B(p.labels),
    };
    Ok(PredictionFile::new(gold.0.name.clone(), gold.0.scheme.clone(), predictions).to_ndjson())
}

/// Tie-clustered leaderboard for one dataset. `reports` maps team -> score report dict.
#[pyfunction]
#[pyo3(signature = (reports, alpha = 0.05, zero_method = "wilcox", dataset = "dataset"))]
fn leaderboard<'py>(
    py: Python<'py>,
    reports: BTreeMap<String, Bound<'py, PyAny>>,
    alpha: f64,
    zero_method: &str,
    dataset: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let runs = reports
        .iter()
        .map(|(team, r)| Ok(SystemRun::new(team.clone(), dataset, from_py::<ScoreReport>(r)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let lb = cluster_ties(&runs, alpha, parse(zero_method)?).map_err(value_err)?;
    to_py(py, &lb)
}

/// Average position over datasets. `boards` maps dataset -> leaderboard dict.
#[pyfunction]
#[pyo3(signature = (boards, substitution_baseline = "random"))]
fn overall<'py>(
    py: Python<'py>,
    boards: BTreeMap<String, Bound<'py, PyAny>>,
    substitution_baseline: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let boards = boards
        .iter()
        .map(|(name, b)| Ok((name.clone(), from_py::<Leaderboard>(b)?)))
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let result = cross_dataset_leaderboard(&boards, substitution_baseline).map_err(|e| PyKeyError::new_err(e.to_string()))?;
    to_py(py, &result)
}

#[pymodule]
pub fn disagree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(manhattan, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(error_rate_of, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_absolute_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(leaderboard, m)?)?;
    m.add_function(wrap_pyfunction!(overall, m)?)?;
    Ok(())
}
