use thiserror::Error;

use crate::corpus::Finding;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("cannot read scheme config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scheme config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scheme: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// Every located problem found while parsing; never empty.
    #[error("{}", summarize(.0))]
    Invalid(Vec<Finding>),
    #[error("duplicate annotator_id {0:?} in metadata")]
    DuplicateProfile(String),
    #[error("metadata entry {index} is not an object with an annotator_id")]
    MalformedProfile { index: usize },
}

fn summarize(findings: &[Finding]) -> String {
    match findings {
        [] => "invalid dataset".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SoftLabelError {
    #[error("item {item_id}: no annotations to derive a soft label from")]
    NoAnnotations { item_id: String },
    #[error("item {item_id}: annotation {value} does not fit scheme {scheme}")]
    OutsideScheme {
        item_id: String,
        value: String,
        scheme: String,
    },
    #[error("distribution has {got} bins, scheme needs {expected}")]
    Arity { expected: usize, got: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    Mass { sum: f64 },
    #[error("negative or non-finite probability {0}")]
    BadProbability(f64),
    #[error("label set mismatch: expected {expected:?}, got {got:?}")]
    LabelSet {
        expected: Vec<String>,
        got: Vec<String>,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("distributions have different supports ({left} vs {right} bins)")]
    Arity { left: usize, right: usize },
    #[error("wasserstein distance needs an ordinal scale")]
    NotOrdinal,
    #[error("item {item_id}: prediction and target annotator sequences differ")]
    AnnotatorMisalignment { item_id: String },
    #[error("item {item_id}: label {value} is not binary")]
    NonBinary { item_id: String, value: i64 },
    #[error("item {item_id}: label {value} outside the ordinal scale")]
    OutOfRange { item_id: String, value: i64 },
    #[error("item {item_id}: label sets differ between prediction and target")]
    LabelSetMismatch { item_id: String },
    #[error("item {item_id}: expected {expected} labels, got another kind")]
    WrongKind { item_id: String, expected: &'static str },
    #[error("prediction coverage mismatch: missing {missing:?}, extra {extra:?}")]
    Coverage {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("nothing to score")]
    Empty,
    #[error("metric {metric} does not apply to {context}")]
    Inapplicable { metric: String, context: String },
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training split has no annotated items")]
    EmptyTrain,
    #[error(transparent)]
    SoftLabel(#[from] SoftLabelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("no systems to rank")]
    Empty,
    #[error("per-item scores are not aligned: {0}")]
    Misaligned(String),
    #[error("dataset {dataset}: team {team} is missing and no substitution baseline {baseline:?} is ranked")]
    MissingSubstitute {
        dataset: String,
        team: String,
        baseline: String,
    },
    #[error("team {0} appears twice in one leaderboard")]
    DuplicateTeam(String),
}

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("prediction file is empty (missing header line)")]
    MissingHeader,
    #[error("item {item_id}: {message}")]
    Invalid { item_id: String, message: String },
    #[error("duplicate prediction for item {0}")]
    Duplicate(String),
    #[error("header declares {found}, expected {expected}")]
    HeaderMismatch { expected: String, found: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("degenerate population: {0}")]
    Degenerate(String),
    #[error("invalid population parameter: {0}")]
    Parameter(String),
}
