//! Soft-label (Task A) and perspectivist (Task B) metrics.
//!
//! All metrics are losses: 0 is a perfect match. Corpus-level functions keep
//! the per-item values because paired significance tests need them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Item, LabelValue};
use crate::error::MetricError;
use crate::scheme::LabelScheme;
use crate::softlabels::{Distribution, MultilabelDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Soft-label prediction.
    A,
    /// Per-annotator (perspectivist) prediction.
    B,
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(Task::A),
            "B" | "b" => Ok(Task::B),
            other => Err(format!("unknown task {other:?}, expected A or B")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::A => "A",
            Task::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    AvgManhattan,
    AvgWasserstein,
    Mamd,
    Aer,
    Anad,
    Mer,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::AvgManhattan,
        Metric::AvgWasserstein,
        Metric::Mamd,
        Metric::Aer,
        Metric::Anad,
        Metric::Mer,
    ];

    /// The officially assigned metric for a task on a scheme.
    pub fn official(task: Task, scheme: &LabelScheme) -> Metric {
        match (task, scheme) {
            (Task::A, LabelScheme::Binary) => Metric::AvgManhattan,
            (Task::A, LabelScheme::Ordinal { .. }) => Metric::AvgWasserstein,
            (Task::A, LabelScheme::Multilabel { .. }) => Metric::Mamd,
            (Task::B, LabelScheme::Binary) => Metric::Aer,
            (Task::B, LabelScheme::Ordinal { .. }) => Metric::Anad,
            (Task::B, LabelScheme::Multilabel { .. }) => Metric::Mer,
        }
    }

    pub fn task(self) -> Task {
        match self {
            Metric::AvgManhattan | Metric::AvgWasserstein | Metric::Mamd => Task::A,
            Metric::Aer | Metric::Anad | Metric::Mer => Task::B,
        }
    }

    /// Whether the metric can be computed on a scheme at all.
    pub fn applies_to(self, scheme: &LabelScheme) -> bool {
        match self {
            Metric::AvgManhattan => !scheme.is_multilabel(),
            Metric::AvgWasserstein | Metric::Anad => scheme.is_ordinal(),
            Metric::Mamd | Metric::Mer => scheme.is_multilabel(),
            Metric::Aer => matches!(scheme, LabelScheme::Binary),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::AvgManhattan => "AMD",
            Metric::AvgWasserstein => "AWD",
            Metric::Mamd => "MAMD",
            Metric::Aer => "AER",
            Metric::Anad => "ANAD",
            Metric::Mer => "MER",
        }
    }

    /// Column heading used on leaderboards.
    pub fn short_name(self) -> &'static str {
        match self {
            Metric::AvgManhattan => "MD",
            Metric::AvgWasserstein => "WS",
            Metric::Mamd => "MMD",
            Metric::Aer => "ER",
            Metric::Anad => "MAD",
            Metric::Mer => "MER",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Metric::AvgManhattan => "Average Manhattan Distance",
            Metric::AvgWasserstein => "Average Wasserstein Distance",
            Metric::Mamd => "Multilabel Average Manhattan Distance",
            Metric::Aer => "Average Error Rate",
            Metric::Anad => "Average Normalized Absolute Distance",
            Metric::Mer => "Multilabel Error Rate",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let wanted = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        Metric::ALL
            .into_iter()
            .find(|m| {
                [m.name(), m.short_name(), m.long_name()]
                    .iter()
                    .any(|n| n.to_ascii_lowercase().replace(' ', "") == wanted)
            })
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Per-item scores of one metric and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub metric: String,
    /// Every name the metric goes by (long name, abbreviation, column heading).
    #[serde(default)]
    pub metric_names: Vec<String>,
    pub aggregate: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub per_item: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    /// Values are multiplied by 100.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub percent: bool,
    /// The metric was chosen explicitly instead of by the official assignment.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub metric_override: bool,
}

impl ScoreReport {
    pub fn new(metric: Metric, per_item: BTreeMap<String, f64>) -> Self {
        let values: Vec<f64> = per_item.values().copied().collect();
        let aggregate = if values.is_empty() {
            0.0
        } else {
            pairwise_sum(&values) / values.len() as f64
        };
        ScoreReport {
            metric: metric.name().to_string(),
            metric_names: vec![
                metric.long_name().to_string(),
                metric.name().to_string(),
                metric.short_name().to_string(),
            ],
            aggregate,
            n: values.len(),
            per_item,
            system: None,
            dataset: None,
            task: Some(metric.task()),
            percent: false,
            metric_override: false,
        }
    }

    /// Rendering with every value multiplied by 100.
    pub fn to_percent(&self) -> ScoreReport {
        if self.percent {
            return self.clone();
        }
        let mut out = self.clone();
        out.aggregate *= 100.0;
        for v in out.per_item.values_mut() {
            *v *= 100.0;
        }
        out.percent = true;
        out
    }

    pub fn per_item_values(&self) -> Vec<f64> {
        self.per_item.values().copied().collect()
    }
}

/// Summation by recursive halving in index order; bit-stable for a given input.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn same_support(p: &Distribution, t: &Distribution) -> Result<(), MetricError> {
    if p.positions() == t.positions() {
        Ok(())
    } else {
        Err(MetricError::Arity {
            left: p.len(),
            right: t.len(),
        })
    }
}

/// L1 distance between two distributions over the same bins.
pub fn manhattan_distance(p: &Distribution, t: &Distribution) -> Result<f64, MetricError> {
    same_support(p, t)?;
    Ok(p.probs()
        .iter()
        .zip(t.probs())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// `D[u][v] = |pos_u - pos_v|` over the bins of an ordinal scheme.
pub fn build_ground_matrix(scheme: &LabelScheme) -> Result<Vec<Vec<f64>>, MetricError> {
    if !scheme.is_ordinal() {
        return Err(MetricError::NotOrdinal);
    }
    let pos = scheme.positions();
    Ok(pos
        .iter()
        .map(|u| pos.iter().map(|v| (u - v).abs() as f64).collect())
        .collect())
}

/// 1-Wasserstein distance under the `|pos_u - pos_v|` ground cost, via the
/// cumulative form `sum_k |F_p(k) - F_t(k)| * (pos_{k+1} - pos_k)`.
pub fn wasserstein_distance(p: &Distribution, t: &Distribution) -> Result<f64, MetricError> {
    if !p.is_ordinal() || !t.is_ordinal() {
        return Err(MetricError::NotOrdinal);
    }
    same_support(p, t)?;
    let pos = p.positions();
    let (mut cdf_p, mut cdf_t, mut total) = (0.0, 0.0, 0.0);
    for k in 0..pos.len().saturating_sub(1) {
        cdf_p += p.probs()[k];
        cdf_t += t.probs()[k];
        total += (cdf_p - cdf_t).abs() * (pos[k + 1] - pos[k]) as f64;
    }
    Ok(total)
}

fn check_coverage<A, B>(
    preds: &BTreeMap<String, A>,
    targets: &BTreeMap<String, B>,
) -> Result<(), MetricError> {
    let missing: Vec<String> = targets
        .keys()
        .filter(|k| !preds.contains_key(*k))
        .cloned()
        .collect();
    let extra: Vec<String> = preds
        .keys()
        .filter(|k| !targets.contains_key(*k))
        .cloned()
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        Err(MetricError::Coverage { missing, extra })
    }
}

fn per_item<P, T>(
    metric: Metric,
    preds: &BTreeMap<String, P>,
    targets: &BTreeMap<String, T>,
    mut score: impl FnMut(&str, &P, &T) -> Result<f64, MetricError>,
) -> Result<ScoreReport, MetricError> {
    check_coverage(preds, targets)?;
    if targets.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut out = BTreeMap::new();
    for (id, t) in targets {
        out.insert(id.clone(), score(id, &preds[id], t)?);
    }
    Ok(ScoreReport::new(metric, out))
}

pub fn avg_manhattan(
    preds: &BTreeMap<String, Distribution>,
    targets: &BTreeMap<String, Distribution>,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::AvgManhattan, preds, targets, |_, p, t| manhattan_distance(p, t))
}

pub fn avg_wasserstein(
    preds: &BTreeMap<String, Distribution>,
    targets: &BTreeMap<String, Distribution>,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::AvgWasserstein, preds, targets, |_, p, t| wasserstein_distance(p, t))
}

/// Mean over labels of the per-label Manhattan distance.
pub fn multilabel_manhattan(
    p: &MultilabelDistribution,
    t: &MultilabelDistribution,
) -> Result<f64, MetricError> {
    if p.labels() != t.labels() {
        return Err(MetricError::LabelSetMismatch {
            item_id: String::new(),
        });
    }
    let mut total = 0.0;
    for (a, b) in p.per_label().iter().zip(t.per_label()) {
        total += manhattan_distance(a, b)?;
    }
    Ok(total / p.labels().len() as f64)
}

pub fn mamd(
    preds: &BTreeMap<String, MultilabelDistribution>,
    targets: &BTreeMap<String, MultilabelDistribution>,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::Mamd, preds, targets, |id, p, t| {
        multilabel_manhattan(p, t).map_err(|e| match e {
            MetricError::LabelSetMismatch { .. } => MetricError::LabelSetMismatch {
                item_id: id.to_string(),
            },
            other => other,
        })
    })
}

/// Labels of one item, aligned to its annotators.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelVector {
    Scalar(Vec<i64>),
    /// One 0/1 vector of length `a` per label, labels in scheme order.
    PerLabel {
        labels: Vec<String>,
        bits: Vec<Vec<u8>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorLabelVector {
    pub item_id: String,
    pub annotator_ids: Vec<String>,
    pub values: LabelVector,
}

impl AnnotatorLabelVector {
    pub fn scalar(item_id: impl Into<String>, annotator_ids: Vec<String>, values: Vec<i64>) -> Self {
        assert_eq!(annotator_ids.len(), values.len());
        AnnotatorLabelVector {
            item_id: item_id.into(),
            annotator_ids,
            values: LabelVector::Scalar(values),
        }
    }

    /// Builds the vector from `(annotator_id, label)` pairs, in the given order.
    pub fn from_labels(
        item_id: &str,
        scheme: &LabelScheme,
        labels: &[(String, LabelValue)],
    ) -> Result<Self, MetricError> {
        let annotator_ids = labels.iter().map(|(a, _)| a.clone()).collect();
        let values = match scheme {
            LabelScheme::Multilabel { label_names } => {
                let mut bits = vec![vec![0u8; labels.len()]; label_names.len()];
                for (k, (_, value)) in labels.iter().enumerate() {
                    let LabelValue::Set(names) = value else {
                        return Err(MetricError::WrongKind {
                            item_id: item_id.to_string(),
                            expected: "label-set",
                        });
                    };
                    for n in names {
                        let j = scheme.label_index(n).ok_or_else(|| MetricError::LabelSetMismatch {
                            item_id: item_id.to_string(),
                        })?;
                        bits[j][k] = 1;
                    }
                }
                LabelVector::PerLabel {
                    labels: label_names.clone(),
                    bits,
                }
            }
            _ => LabelVector::Scalar(
                labels
                    .iter()
                    .map(|(_, v)| {
                        v.as_scalar().ok_or_else(|| MetricError::WrongKind {
                            item_id: item_id.to_string(),
                            expected: "integer",
                        })
                    })
                    .collect::<Result<_, _>>()?,
            ),
        };
        Ok(AnnotatorLabelVector {
            item_id: item_id.to_string(),
            annotator_ids,
            values,
        })
    }

    /// The gold vector of an item: its annotations in annotator order.
    pub fn from_item(item: &Item, scheme: &LabelScheme) -> Result<Self, MetricError> {
        let labels: Vec<(String, LabelValue)> = item
            .annotations
            .iter()
            .map(|a| (a.annotator_id.clone(), a.value.clone()))
            .collect();
        Self::from_labels(&item.item_id, scheme, &labels)
    }

    pub fn len(&self) -> usize {
        self.annotator_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotator_ids.is_empty()
    }
}

fn aligned(t: &AnnotatorLabelVector, p: &AnnotatorLabelVector) -> Result<(), MetricError> {
    if t.annotator_ids != p.annotator_ids || t.annotator_ids.is_empty() {
        return Err(MetricError::AnnotatorMisalignment {
            item_id: t.item_id.clone(),
        });
    }
    Ok(())
}

fn binary_mismatch_fraction(item_id: &str, t: &[i64], p: &[i64]) -> Result<f64, MetricError> {
    let mut mismatches = 0u64;
    for (&a, &b) in t.iter().zip(p) {
        for v in [a, b] {
            if v != 0 && v != 1 {
                return Err(MetricError::NonBinary {
                    item_id: item_id.to_string(),
                    value: v,
                });
            }
        }
        mismatches += (a - b).unsigned_abs();
    }
    Ok(mismatches as f64 / t.len() as f64)
}

/// Fraction of annotators whose binary label is mispredicted.
pub fn error_rate(t: &AnnotatorLabelVector, p: &AnnotatorLabelVector) -> Result<f64, MetricError> {
    aligned(t, p)?;
    match (&t.values, &p.values) {
        (LabelVector::Scalar(tv), LabelVector::Scalar(pv)) => binary_mismatch_fraction(&t.item_id, tv, pv),
        _ => Err(MetricError::WrongKind {
            item_id: t.item_id.clone(),
            expected: "binary",
        }),
    }
}

/// Mean absolute annotator-level deviation divided by the Likert range.
pub fn nad(
    t: &AnnotatorLabelVector,
    p: &AnnotatorLabelVector,
    scheme: &LabelScheme,
) -> Result<f64, MetricError> {
    aligned(t, p)?;
    let s = scheme.scale_range().ok_or(MetricError::NotOrdinal)? as f64;
    let (LabelVector::Scalar(tv), LabelVector::Scalar(pv)) = (&t.values, &p.values) else {
        return Err(MetricError::WrongKind {
            item_id: t.item_id.clone(),
            expected: "ordinal",
        });
    };
    let mut total = 0u64;
    for (&a, &b) in tv.iter().zip(pv) {
        for v in [a, b] {
            if !scheme.admits(v) {
                return Err(MetricError::OutOfRange {
                    item_id: t.item_id.clone(),
                    value: v,
                });
            }
        }
        total += (a - b).unsigned_abs();
    }
    Ok(total as f64 / tv.len() as f64 / s)
}

/// Mean over labels of the per-label binary error rate.
pub fn multilabel_error_rate(
    t: &AnnotatorLabelVector,
    p: &AnnotatorLabelVector,
) -> Result<f64, MetricError> {
    aligned(t, p)?;
    let (
        LabelVector::PerLabel {
            labels: tl,
            bits: tb,
        },
        LabelVector::PerLabel {
            labels: pl,
            bits: pb,
        },
    ) = (&t.values, &p.values)
    else {
        return Err(MetricError::WrongKind {
            item_id: t.item_id.clone(),
            expected: "label-set",
        });
    };
    if tl != pl {
        return Err(MetricError::LabelSetMismatch {
            item_id: t.item_id.clone(),
        });
    }
    let mut total = 0.0;
    for (tj, pj) in tb.iter().zip(pb) {
        let tj: Vec<i64> = tj.iter().map(|&b| b as i64).collect();
        let pj: Vec<i64> = pj.iter().map(|&b| b as i64).collect();
        total += binary_mismatch_fraction(&t.item_id, &tj, &pj)?;
    }
    Ok(total / tl.len() as f64)
}

pub fn aer(
    preds: &BTreeMap<String, AnnotatorLabelVector>,
    targets: &BTreeMap<String, AnnotatorLabelVector>,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::Aer, preds, targets, |_, p, t| error_rate(t, p))
}

pub fn anad(
    preds: &BTreeMap<String, AnnotatorLabelVector>,
    targets: &BTreeMap<String, AnnotatorLabelVector>,
    scheme: &LabelScheme,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::Anad, preds, targets, |_, p, t| nad(t, p, scheme))
}

pub fn mer(
    preds: &BTreeMap<String, AnnotatorLabelVector>,
    targets: &BTreeMap<String, AnnotatorLabelVector>,
) -> Result<ScoreReport, MetricError> {
    per_item(Metric::Mer, preds, targets, |_, p, t| multilabel_error_rate(t, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(p: &[f64]) -> Distribution {
        Distribution::new(&LabelScheme::Binary, p.to_vec()).unwrap()
    }

    fn csc(p: &[f64]) -> Distribution {
        Distribution::new(&LabelScheme::bundled("csc").unwrap(), p.to_vec()).unwrap()
    }

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("A{i}")).collect()
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan_distance(&bin(&[0.3, 0.7]), &bin(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(manhattan_distance(&bin(&[0.0, 1.0]), &bin(&[1.0, 0.0])).unwrap(), 2.0);
        assert_eq!(manhattan_distance(&bin(&[0.25, 0.75]), &bin(&[0.5, 0.5])).unwrap(), 0.5);
        assert!(matches!(
            manhattan_distance(&bin(&[0.0, 1.0]), &csc(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])),
            Err(MetricError::Arity { .. })
        ));
    }

    #[test]
    fn ground_matrix() {
        let d = build_ground_matrix(&LabelScheme::bundled("csc").unwrap()).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d[0][5], 5.0);
        for u in 0..6 {
            assert_eq!(d[u][u], 0.0);
            for v in 0..6 {
                assert_eq!(d[u][v], d[v][u]);
            }
        }
        assert_eq!(build_ground_matrix(&LabelScheme::Binary), Err(MetricError::NotOrdinal));
    }

    #[test]
    fn wasserstein_examples() {
        let one = csc(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let six = csc(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(wasserstein_distance(&one, &six).unwrap(), 5.0);
        assert_eq!(wasserstein_distance(&six, &six).unwrap(), 0.0);
        assert_eq!(
            wasserstein_distance(&bin(&[0.0, 1.0]), &bin(&[1.0, 0.0])),
            Err(MetricError::NotOrdinal)
        );
    }

    #[test]
    fn wasserstein_unequal_spacing() {
        let p = Distribution::with_positions(vec![0, 1, 5], vec![1.0, 0.0, 0.0], true).unwrap();
        let t = Distribution::with_positions(vec![0, 1, 5], vec![0.0, 0.0, 1.0], true).unwrap();
        assert_eq!(wasserstein_distance(&p, &t).unwrap(), 5.0);
    }

    #[test]
    fn corpus_means_and_coverage() {
        let t: BTreeMap<String, Distribution> =
            [("a".to_string(), bin(&[0.0, 1.0])), ("b".to_string(), bin(&[1.0, 0.0]))].into();
        let p: BTreeMap<String, Distribution> =
            [("a".to_string(), bin(&[1.0, 0.0])), ("b".to_string(), bin(&[1.0, 0.0]))].into();
        let r = avg_manhattan(&p, &t).unwrap();
        assert_eq!(r.aggregate, 1.0);
        assert_eq!(r.n, 2);
        assert_eq!(r.per_item["a"], 2.0);

        let partial: BTreeMap<String, Distribution> = [("a".to_string(), bin(&[1.0, 0.0]))].into();
        assert_eq!(
            avg_manhattan(&partial, &t),
            Err(MetricError::Coverage {
                missing: vec!["b".into()],
                extra: vec![]
            })
        );
        assert_eq!(avg_manhattan(&BTreeMap::new(), &BTreeMap::new()), Err(MetricError::Empty));
    }

    #[test]
    fn error_rate_examples() {
        let t = AnnotatorLabelVector::scalar("i", ids(3), vec![1, 1, 1]);
        let p = AnnotatorLabelVector::scalar("i", ids(3), vec![1, 0, 1]);
        assert_eq!(error_rate(&t, &p).unwrap(), 1.0 / 3.0);
        assert_eq!(error_rate(&t, &t).unwrap(), 0.0);
        let flipped = AnnotatorLabelVector::scalar("i", ids(3), vec![0, 0, 0]);
        assert_eq!(error_rate(&t, &flipped).unwrap(), 1.0);

        let other = AnnotatorLabelVector::scalar("i", vec!["A1".into(), "A3".into(), "A2".into()], vec![1, 1, 1]);
        assert!(matches!(error_rate(&t, &other), Err(MetricError::AnnotatorMisalignment { .. })));
        let ternary = AnnotatorLabelVector::scalar("i", ids(3), vec![2, 1, 1]);
        assert!(matches!(error_rate(&t, &ternary), Err(MetricError::NonBinary { value: 2, .. })));
    }

    #[test]
    fn nad_examples() {
        let scheme = LabelScheme::bundled("csc").unwrap();
        let t = AnnotatorLabelVector::scalar("i", ids(4), vec![1, 3, 1, 2]);
        let p = AnnotatorLabelVector::scalar("i", ids(4), vec![2, 3, 1, 2]);
        assert!((nad(&t, &p, &scheme).unwrap() - 0.05).abs() < 1e-15);
        let t = AnnotatorLabelVector::scalar("i", ids(2), vec![1, 1]);
        let p = AnnotatorLabelVector::scalar("i", ids(2), vec![6, 6]);
        assert_eq!(nad(&t, &p, &scheme).unwrap(), 1.0);
        let bad = AnnotatorLabelVector::scalar("i", ids(2), vec![7, 6]);
        assert!(matches!(nad(&t, &bad, &scheme), Err(MetricError::OutOfRange { value: 7, .. })));
        assert_eq!(nad(&t, &p, &LabelScheme::Binary), Err(MetricError::NotOrdinal));
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("ws".parse::<Metric>().unwrap(), Metric::AvgWasserstein);
        assert_eq!("MAD".parse::<Metric>().unwrap(), Metric::Anad);
        assert_eq!("average manhattan distance".parse::<Metric>().unwrap(), Metric::AvgManhattan);
        assert_eq!("MMD".parse::<Metric>().unwrap(), Metric::Mamd);
        assert!("xent".parse::<Metric>().is_err());
    }

    #[test]
    fn official_routing() {
        let ven = LabelScheme::bundled("ven").unwrap();
        let csc = LabelScheme::bundled("csc").unwrap();
        assert_eq!(Metric::official(Task::A, &LabelScheme::Binary), Metric::AvgManhattan);
        assert_eq!(Metric::official(Task::A, &csc), Metric::AvgWasserstein);
        assert_eq!(Metric::official(Task::A, &ven), Metric::Mamd);
        assert_eq!(Metric::official(Task::B, &LabelScheme::Binary), Metric::Aer);
        assert_eq!(Metric::official(Task::B, &csc), Metric::Anad);
        assert_eq!(Metric::official(Task::B, &ven), Metric::Mer);
        for m in Metric::ALL {
            for s in [&LabelScheme::Binary, &csc, &ven] {
                if Metric::official(m.task(), s) == m {
                    assert!(m.applies_to(s));
                }
            }
        }
    }

    #[test]
    fn percent_rendering() {
        let r = ScoreReport::new(Metric::Anad, [("a".to_string(), 0.05), ("b".to_string(), 0.15)].into());
        assert!((r.aggregate - 0.10).abs() < 1e-15);
        let pct = r.to_percent();
        assert!(pct.percent);
        assert!((pct.aggregate - 10.0).abs() < 1e-12);
        assert_eq!(pct.to_percent(), pct);
    }

    #[test]
    fn report_json_shape() {
        let r = ScoreReport::new(Metric::Aer, [("a".to_string(), 0.5)].into());
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["N"], 1);
        assert_eq!(v["metric"], "AER");
        assert_eq!(v["per_item"]["a"], 0.5);
        let back: ScoreReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }
}
