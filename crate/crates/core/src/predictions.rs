//! Prediction files and scoring them against a gold dataset.
//!
//! A prediction file is newline-delimited JSON. The first line is a header,
//!
//! ```text
//! {"task":"A","dataset":"csc","scheme":{"kind":"ordinal","min_value":1,"max_value":6}}
//! ```
//!
//! optionally carrying a `provenance` object for generated baselines. Every
//! following line is `{"item_id": ..., "prediction": ...}` where the
//! prediction is a soft label (Task A, same encoding as stored soft labels)
//! or an object mapping annotator ids to labels (Task B).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::baselines::Provenance;
use crate::corpus::{Dataset, LabelValue};
use crate::error::{MetricError, PredictionError};
use crate::metrics::{self, AnnotatorLabelVector, Metric, ScoreReport, Task};
use crate::scheme::LabelScheme;
use crate::softlabels::{Distribution, MultilabelDistribution, SoftLabel};

pub type SoftPredictions = BTreeMap<String, SoftLabel>;
/// Per item, `(annotator_id, label)` slots.
pub type LabelPredictions = BTreeMap<String, Vec<(String, LabelValue)>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    A(SoftPredictions),
    B(LabelPredictions),
}

impl Predictions {
    pub fn task(&self) -> Task {
        match self {
            Predictions::A(_) => Task::A,
            Predictions::B(_) => Task::B,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Predictions::A(p) => p.len(),
            Predictions::B(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn item_ids(&self) -> BTreeSet<String> {
        match self {
            Predictions::A(p) => p.keys().cloned().collect(),
            Predictions::B(p) => p.keys().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionHeader {
    pub task: Task,
    pub dataset: String,
    pub scheme: LabelScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub header: PredictionHeader,
    pub predictions: Predictions,
}

#[derive(Serialize, Deserialize)]
struct Record {
    item_id: String,
    prediction: Value,
}

fn labels_to_json(slots: &[(String, LabelValue)]) -> Value {
    let mut map = Map::new();
    for (a, v) in slots {
        map.insert(a.clone(), serde_json::to_value(v).expect("label serializes"));
    }
    Value::Object(map)
}

impl PredictionFile {
    pub fn new(dataset: impl Into<String>, scheme: LabelScheme, predictions: Predictions) -> Self {
        PredictionFile {
            header: PredictionHeader {
                task: predictions.task(),
                dataset: dataset.into(),
                scheme,
                provenance: None,
            },
            predictions,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.header.provenance = Some(provenance);
        self
    }

    /// Header line plus one line per item, items in id order.
    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        let mut push = |item_id: &str, prediction: Value| {
            let rec = Record {
                item_id: item_id.to_string(),
                prediction,
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        };
        match &self.predictions {
            Predictions::A(p) => p.iter().for_each(|(id, s)| push(id, s.to_json())),
            Predictions::B(p) => p.iter().for_each(|(id, slots)| push(id, labels_to_json(slots))),
        }
        out
    }

    /// Parses and validates a prediction file. When `expected` is given, the
    /// header's scheme must match it.
    pub fn parse(bytes: &[u8], expected: Option<&LabelScheme>) -> Result<Self, PredictionError> {
        let text = String::from_utf8_lossy(bytes);
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header_text) = lines.next().ok_or(PredictionError::MissingHeader)?;
        let header: PredictionHeader = serde_json::from_str(header_text).map_err(|source| PredictionError::Json {
            line: hline + 1,
            source,
        })?;
        if let Some(expected) = expected {
            if *expected != header.scheme {
                return Err(PredictionError::HeaderMismatch {
                    expected: expected.to_string(),
                    found: header.scheme.to_string(),
                });
            }
        }
        let scheme = &header.scheme;
        let mut soft = SoftPredictions::new();
        let mut labels = LabelPredictions::new();
        for (n, line) in lines {
            let rec: Record = serde_json::from_str(line).map_err(|source| PredictionError::Json { line: n + 1, source })?;
            let invalid = |message: String| PredictionError::Invalid {
                item_id: rec.item_id.clone(),
                message,
            };
            let fresh = match header.task {
                Task::A => {
                    let s = SoftLabel::from_json(scheme, &rec.prediction).map_err(invalid)?;
                    soft.insert(rec.item_id.clone(), s).is_none()
                }
                Task::B => {
                    let Value::Object(map) = &rec.prediction else {
                        return Err(invalid("expected an object of annotator_id -> label".into()));
                    };
                    let mut slots = Vec::with_capacity(map.len());
                    for (a, v) in map {
                        let value = LabelValue::from_json(scheme, v).map_err(|e| invalid(format!("annotator {a}: {e}")))?;
                        if !value.conforms(scheme) {
                            return Err(invalid(format!("annotator {a}: label {value} outside {scheme}")));
                        }
                        slots.push((a.clone(), value));
                    }
                    labels.insert(rec.item_id.clone(), slots).is_none()
                }
            };
            if !fresh {
                return Err(PredictionError::Duplicate(rec.item_id));
            }
        }
        let predictions = match header.task {
            Task::A => Predictions::A(soft),
            Task::B => Predictions::B(labels),
        };
        Ok(PredictionFile { header, predictions })
    }
}

/// Scores predictions against the gold items of `gold` with `metric`.
///
/// Task A gold is the soft label derived from annotations (stored soft label
/// for items without annotations). Task B predictions must cover exactly
/// each item's `annotator_ids`; annotators without a gold annotation are not
/// scored.
pub fn score_predictions(
    gold: &Dataset,
    predictions: &Predictions,
    metric: Metric,
) -> Result<ScoreReport, MetricError> {
    let scheme = &gold.scheme;
    if metric.task() != predictions.task() || !metric.applies_to(scheme) {
        return Err(MetricError::Inapplicable {
            metric: metric.name().to_string(),
            context: format!("task {} on {scheme}", predictions.task()),
        });
    }
    let gold_ids: BTreeSet<String> = gold.items.iter().map(|i| i.item_id.clone()).collect();
    let pred_ids = predictions.item_ids();
    if gold_ids != pred_ids {
        return Err(MetricError::Coverage {
            missing: gold_ids.difference(&pred_ids).cloned().collect(),
            extra: pred_ids.difference(&gold_ids).cloned().collect(),
        });
    }
    let mut report = match predictions {
        Predictions::A(preds) => {
            let mut targets = BTreeMap::new();
            for item in &gold.items {
                let t = item.gold_soft_label(scheme).ok_or_else(|| MetricError::Inapplicable {
                    metric: metric.name().to_string(),
                    context: format!("item {} without annotations or soft label", item.item_id),
                })?;
                targets.insert(item.item_id.clone(), t);
            }
            match metric {
                Metric::Mamd => {
                    let (p, t) = (multis(preds)?, multis(&targets)?);
                    metrics::mamd(&p, &t)?
                }
                _ => {
                    let (p, t) = (singles(preds)?, singles(&targets)?);
                    if metric == Metric::AvgWasserstein {
                        metrics::avg_wasserstein(&p, &t)?
                    } else {
                        metrics::avg_manhattan(&p, &t)?
                    }
                }
            }
        }
        Predictions::B(preds) => {
            let mut targets = BTreeMap::new();
            let mut aligned = BTreeMap::new();
            for item in &gold.items {
                let slots = &preds[&item.item_id];
                let predicted: BTreeMap<&str, &LabelValue> = slots.iter().map(|(a, v)| (a.as_str(), v)).collect();
                let expected: BTreeSet<&str> = item.annotator_ids.iter().map(String::as_str).collect();
                if predicted.len() != slots.len() || predicted.keys().copied().collect::<BTreeSet<_>>() != expected {
                    return Err(MetricError::AnnotatorMisalignment {
                        item_id: item.item_id.clone(),
                    });
                }
                let in_gold_order: Vec<(String, LabelValue)> = item
                    .annotations
                    .iter()
                    .map(|a| (a.annotator_id.clone(), predicted[a.annotator_id.as_str()].clone()))
                    .collect();
                targets.insert(item.item_id.clone(), AnnotatorLabelVector::from_item(item, scheme)?);
                aligned.insert(
                    item.item_id.clone(),
                    AnnotatorLabelVector::from_labels(&item.item_id, scheme, &in_gold_order)?,
                );
            }
            match metric {
                Metric::Aer => metrics::aer(&aligned, &targets)?,
                Metric::Anad => metrics::anad(&aligned, &targets, scheme)?,
                _ => metrics::mer(&aligned, &targets)?,
            }
        }
    };
    report.dataset = Some(gold.name.clone()).filter(|n| !n.is_empty());
    report.metric_override = metric != Metric::official(predictions.task(), scheme);
    Ok(report)
}

fn singles(m: &SoftPredictions) -> Result<BTreeMap<String, Distribution>, MetricError> {
    m.iter()
        .map(|(id, s)| {
            s.as_single()
                .cloned()
                .map(|d| (id.clone(), d))
                .ok_or_else(|| MetricError::WrongKind {
                    item_id: id.clone(),
                    expected: "single distribution",
                })
        })
        .collect()
}

fn multis(m: &SoftPredictions) -> Result<BTreeMap<String, MultilabelDistribution>, MetricError> {
    m.iter()
        .map(|(id, s)| {
            s.as_multi()
                .cloned()
                .map(|d| (id.clone(), d))
                .ok_or_else(|| MetricError::WrongKind {
                    item_id: id.clone(),
                    expected: "per-label distributions",
                })
        })
        .collect()
}

/// Gold soft labels of a dataset as a Task A prediction set.
pub fn gold_soft_predictions(gold: &Dataset) -> SoftPredictions {
    gold.items
        .iter()
        .filter_map(|i| i.gold_soft_label(&gold.scheme).map(|s| (i.item_id.clone(), s)))
        .collect()
}

/// Gold annotations of a dataset as a Task B prediction set.
pub fn gold_label_predictions(gold: &Dataset) -> LabelPredictions {
    gold.items
        .iter()
        .map(|i| {
            (
                i.item_id.clone(),
                i.annotations
                    .iter()
                    .map(|a| (a.annotator_id.clone(), a.value.clone()))
                    .collect(),
            )
        })
        .collect()
}
