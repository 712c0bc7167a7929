//! Python bindings: the language model and splitter, G2P and context labels,
//! text normalization, error counting, significance tests and the pipeline.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::convaug::eval::errors;
use ::convaug::eval::ratings::{group_by_system, read_ratings, summarize_ratings as summarize, DmosField};
use ::convaug::eval::significance;
use ::convaug::lm::{LmConfig, NgramModel};
use ::convaug::phone::{self, G2PRules, PhoneSet};
use ::convaug::pipeline::{self, validate_manifest_file, PipelineConfig};
use ::convaug::splitter::{self, DEFAULT_THRESHOLD};
use ::convaug::textnorm::{NormalizationConfig, NormalizedSentence};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sentence(tokens: &[String]) -> NormalizedSentence {
    NormalizedSentence::from_tokens("py", tokens)
}

/// Interpolated Kneser-Ney n-gram model.
#[pyclass(name = "LanguageModel", module = "convaug")]
struct PyLanguageModel {
    inner: NgramModel,
}

#[pymethods]
impl PyLanguageModel {
    #[staticmethod]
    #[pyo3(signature = (sentences, order = 2, frequency_floor = 1))]
    fn train(sentences: Vec<Vec<String>>, order: usize, frequency_floor: u64) -> PyResult<Self> {
        let sents: Vec<NormalizedSentence> = sentences
            .iter()
            .enumerate()
            .map(|(i, t)| NormalizedSentence::from_tokens(&format!("s{i}"), t))
            .collect();
        let cfg = LmConfig {
            order,
            frequency_floor,
            ..LmConfig::default()
        };
        NgramModel::train(&sents, &cfg).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_arpa(text: &str) -> PyResult<Self> {
        NgramModel::from_arpa(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_arpa(&self) -> String {
        self.inner.to_arpa()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn vocab(&self) -> Vec<String> {
        self.inner.vocab().to_vec()
    }

    fn log10_prob(&self, context: Vec<String>, word: &str) -> f64 {
        let ctx: Vec<&str> = context.iter().map(String::as_str).collect();
        self.inner.log10_prob(&ctx, word)
    }

    /// `(left, right, log-likelihood)` for every bigram including the markers.
    fn score_bigrams(&self, tokens: Vec<String>) -> PyResult<Vec<(String, String, f64)>> {
        let scored = self.inner.score_bigrams(&sentence(&tokens)).map_err(value_err)?;
        Ok(scored.into_iter().map(|b| (b.left, b.right, b.log_likelihood)).collect())
    }

    fn normalized_log_likelihood(&self, tokens: Vec<String>) -> PyResult<f64> {
        self.inner.normalized_log_likelihood(&sentence(&tokens)).map_err(value_err)
    }

    /// Segments of `tokens` after cutting below `threshold`.
    #[pyo3(signature = (tokens, threshold = DEFAULT_THRESHOLD))]
    fn split(&self, tokens: Vec<String>, threshold: f64) -> PyResult<Vec<Vec<String>>> {
        splitter::split(&self.inner, &sentence(&tokens), threshold)
            .map(|r| r.segments)
            .map_err(value_err)
    }
}

/// Sentences of `text` as token lists; `rules` is an optional normalization TOML.
#[pyfunction]
#[pyo3(signature = (text, rules = None))]
fn normalize(text: &str, rules: Option<&str>) -> PyResult<Vec<Vec<String>>> {
    let cfg = match rules {
        Some(r) => NormalizationConfig::from_toml_str(r).map_err(value_err)?,
        None => NormalizationConfig::default(),
    };
    Ok(cfg.sentences_of(text))
}

#[pyfunction]
fn g2p(word: &str, rules: &str) -> PyResult<Vec<String>> {
    let rules = G2PRules::from_toml_str(rules).map_err(value_err)?;
    phone::g2p(word, &rules).map_err(value_err)
}

/// Full-context labels (`LL^L-C+R=RR`) for a phone sequence.
#[pyfunction]
fn expand_contexts(phones: Vec<String>, phoneset: &str) -> PyResult<Vec<String>> {
    let set = PhoneSet::from_toml_str(phoneset).map_err(value_err)?;
    let labels = phone::expand_contexts(&phones, &set).map_err(value_err)?;
    Ok(labels.iter().map(|l| l.to_string()).collect())
}

#[pyfunction]
fn count_errors<'py>(py: Python<'py>, reference: Vec<String>, hypothesis: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let c = errors::count_errors("py", &reference, &hypothesis).counts;
    let d = PyDict::new(py);
    d.set_item("skips", c.skips)?;
    d.set_item("repetitions", c.repetitions)?;
    d.set_item("mispronunciations", c.mispronunciations)?;
    d.set_item("insertions", c.insertions)?;
    Ok(d)
}

/// Two-tailed p-value of Welch's (or, with `paired`, the paired) t-test.
#[pyfunction]
#[pyo3(signature = (a, b, paired = false))]
fn significance_test(a: Vec<f64>, b: Vec<f64>, paired: bool) -> PyResult<f64> {
    significance::significance_test(&a, &b, paired).map_err(value_err)
}

/// `(system, mos, intelligibility, comprehension %)`
type SystemRow = (String, Option<f64>, Option<f64>, Option<f64>);

/// Per-system summary rows from ratings CSV text.
#[pyfunction]
fn summarize_ratings(csv_text: &str) -> PyResult<Vec<SystemRow>> {
    let records = read_ratings(csv_text.as_bytes()).map_err(value_err)?;
    group_by_system(records)
        .iter()
        .map(|set| {
            let s = summarize(set, None, DmosField::default()).map_err(value_err)?;
            Ok((s.system, s.mos, s.intelligibility, s.comprehension))
        })
        .collect()
}

/// Runs the pipeline for a config file and returns the run summary as a dict.
#[pyfunction]
#[pyo3(signature = (config, output_root = None, workers = None))]
fn run_pipeline<'py>(py: Python<'py>, config: PathBuf, output_root: Option<PathBuf>, workers: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = PipelineConfig::load(&config).map_err(value_err)?;
    if let Some(root) = output_root {
        cfg.output_root = root;
    }
    let summary = py.detach(|| pipeline::run(&cfg, workers)).map_err(value_err)?;
    let json = serde_json::to_string(&summary).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (json,))
}

/// Findings for a manifest file, one message each; empty when clean.
#[pyfunction]
fn validate_manifest(path: PathBuf) -> PyResult<Vec<String>> {
    let report = validate_manifest_file(&path).map_err(value_err)?;
    Ok(report.findings.iter().map(|f| f.to_string()).collect())
}

#[pymodule]
fn convaug(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLanguageModel>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(g2p, m)?)?;
    m.add_function(wrap_pyfunction!(expand_contexts, m)?)?;
    m.add_function(wrap_pyfunction!(count_errors, m)?)?;
    m.add_function(wrap_pyfunction!(significance_test, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_ratings, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(validate_manifest, m)?)?;
    Ok(())
}
