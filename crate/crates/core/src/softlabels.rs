//! Soft-label distributions and their derivation from disaggregated annotations.

use num_rational::Ratio;
use serde_json::{Map, Value};

use crate::corpus::{Item, LabelValue};
use crate::error::SoftLabelError;
use crate::scheme::LabelScheme;

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability vector over ordered bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    positions: Vec<i64>,
    probs: Vec<f64>,
    ordinal: bool,
}

impl Distribution {
    /// Builds a distribution over the bins of `scheme` (per-label `{0,1}` bins
    /// for multilabel schemes).
    pub fn new(scheme: &LabelScheme, probs: Vec<f64>) -> Result<Self, SoftLabelError> {
        Self::with_positions(scheme.positions(), probs, scheme.is_ordinal())
    }

    /// Builds a distribution over arbitrary strictly increasing bin positions.
    pub fn with_positions(
        positions: Vec<i64>,
        probs: Vec<f64>,
        ordinal: bool,
    ) -> Result<Self, SoftLabelError> {
        if positions.len() != probs.len() {
            return Err(SoftLabelError::Arity {
                expected: positions.len(),
                got: probs.len(),
            });
        }
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        if let Some(&bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(SoftLabelError::BadProbability(bad));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(SoftLabelError::Mass { sum });
        }
        Ok(Distribution {
            positions,
            probs,
            ordinal,
        })
    }

    pub fn point_mass(scheme: &LabelScheme, value: i64) -> Option<Self> {
        let positions = scheme.positions();
        let idx = positions.iter().position(|&p| p == value)?;
        let mut probs = vec![0.0; positions.len()];
        probs[idx] = 1.0;
        Some(Distribution {
            positions,
            probs,
            ordinal: scheme.is_ordinal(),
        })
    }

    pub fn uniform(scheme: &LabelScheme) -> Self {
        let positions = scheme.positions();
        let n = positions.len();
        Distribution {
            positions,
            probs: vec![1.0 / n as f64; n],
            ordinal: scheme.is_ordinal(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn is_ordinal(&self) -> bool {
        self.ordinal
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `{"<position>": prob, ...}` in bin order.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (pos, p) in self.positions.iter().zip(&self.probs) {
            map.insert(pos.to_string(), Value::from(*p));
        }
        Value::Object(map)
    }

    /// Parses either `{"<position>": prob}` (absent bins are zero) or a bare
    /// array with one probability per bin.
    pub fn from_json(scheme: &LabelScheme, value: &Value) -> Result<Self, String> {
        let positions = scheme.positions();
        let probs = match value {
            Value::Array(xs) => xs
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| format!("non-numeric probability {x}")))
                .collect::<Result<Vec<_>, _>>()?,
            Value::Object(map) => {
                let mut probs = vec![0.0; positions.len()];
                for (key, p) in map {
                    let pos = parse_position(key)
                        .ok_or_else(|| format!("bin key {key:?} is not an integer"))?;
                    let idx = positions
                        .iter()
                        .position(|&q| q == pos)
                        .ok_or_else(|| format!("bin {pos} is outside {scheme}"))?;
                    probs[idx] = p
                        .as_f64()
                        .ok_or_else(|| format!("non-numeric probability for bin {key}"))?;
                }
                probs
            }
            other => return Err(format!("expected a distribution, found {other}")),
        };
        Distribution::new(scheme, probs).map_err(|e| e.to_string())
    }
}

/// Bin keys like `"3"`, `"-1"` or `"1.0"`.
pub(crate) fn parse_position(key: &str) -> Option<i64> {
    let key = key.trim();
    if let Ok(v) = key.parse::<i64>() {
        return Some(v);
    }
    let f: f64 = key.parse().ok()?;
    (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
}

/// One binary `{0,1}` distribution per label of a multilabel scheme, in scheme order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilabelDistribution {
    labels: Vec<String>,
    per_label: Vec<Distribution>,
}

impl MultilabelDistribution {
    pub fn new(scheme: &LabelScheme, per_label: Vec<Distribution>) -> Result<Self, SoftLabelError> {
        let labels = scheme.label_names().to_vec();
        if labels.len() != per_label.len() || per_label.iter().any(|d| d.len() != 2) {
            return Err(SoftLabelError::Arity {
                expected: labels.len(),
                got: per_label.len(),
            });
        }
        Ok(MultilabelDistribution { labels, per_label })
    }

    /// From per-label probabilities of the label being selected.
    pub fn from_selection_probs(scheme: &LabelScheme, selected: &[f64]) -> Result<Self, SoftLabelError> {
        let per_label = selected
            .iter()
            .map(|&q| Distribution::new(scheme, vec![1.0 - q, q]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scheme, per_label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn per_label(&self) -> &[Distribution] {
        &self.per_label
    }

    pub fn get(&self, label: &str) -> Option<&Distribution> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.per_label[i])
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (label, d) in self.labels.iter().zip(&self.per_label) {
            map.insert(label.clone(), d.to_json());
        }
        Value::Object(map)
    }

    pub fn from_json(scheme: &LabelScheme, value: &Value) -> Result<Self, String> {
        let Value::Object(map) = value else {
            return Err(format!("expected a per-label object, found {value}"));
        };
        let names = scheme.label_names();
        if map.len() != names.len() || names.iter().any(|n| !map.contains_key(n)) {
            let got: Vec<&String> = map.keys().collect();
            return Err(format!("label set {got:?} does not match {names:?}"));
        }
        let per_label = names
            .iter()
            .map(|n| Distribution::from_json(scheme, &map[n]).map_err(|e| format!("label {n}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scheme, per_label).map_err(|e| e.to_string())
    }
}

/// A Task A label: a single distribution, or one binary distribution per label.
#[derive(Debug, Clone, PartialEq)]
pub enum SoftLabel {
    Single(Distribution),
    Multi(MultilabelDistribution),
}

impl SoftLabel {
    pub fn to_json(&self) -> Value {
        match self {
            SoftLabel::Single(d) => d.to_json(),
            SoftLabel::Multi(m) => m.to_json(),
        }
    }

    pub fn from_json(scheme: &LabelScheme, value: &Value) -> Result<Self, String> {
        if scheme.is_multilabel() {
            MultilabelDistribution::from_json(scheme, value).map(SoftLabel::Multi)
        } else {
            Distribution::from_json(scheme, value).map(SoftLabel::Single)
        }
    }

    pub fn as_single(&self) -> Option<&Distribution> {
        match self {
            SoftLabel::Single(d) => Some(d),
            SoftLabel::Multi(_) => None,
        }
    }

    pub fn as_multi(&self) -> Option<&MultilabelDistribution> {
        match self {
            SoftLabel::Multi(m) => Some(m),
            SoftLabel::Single(_) => None,
        }
    }

    /// Largest absolute per-bin difference to another label of the same shape.
    pub fn max_abs_diff(&self, other: &SoftLabel) -> Option<f64> {
        let pairs: Vec<(&Distribution, &Distribution)> = match (self, other) {
            (SoftLabel::Single(a), SoftLabel::Single(b)) => vec![(a, b)],
            (SoftLabel::Multi(a), SoftLabel::Multi(b)) if a.labels == b.labels => {
                a.per_label.iter().zip(&b.per_label).collect()
            }
            _ => return None,
        };
        let mut worst = 0.0f64;
        for (a, b) in pairs {
            if a.positions != b.positions {
                return None;
            }
            for (x, y) in a.probs.iter().zip(&b.probs) {
                worst = worst.max((x - y).abs());
            }
        }
        Some(worst)
    }
}

pub type Prob = Ratio<u64>;

/// Soft label held as exact fractions of the item's annotator count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExactSoftLabel {
    Single(Vec<Prob>),
    /// Per label: `[P(not selected), P(selected)]`.
    Multi(Vec<[Prob; 2]>),
}

impl ExactSoftLabel {
    pub fn to_soft_label(&self, scheme: &LabelScheme) -> SoftLabel {
        let to_f = |r: &Prob| *r.numer() as f64 / *r.denom() as f64;
        match self {
            ExactSoftLabel::Single(probs) => SoftLabel::Single(Distribution {
                positions: scheme.positions(),
                probs: probs.iter().map(to_f).collect(),
                ordinal: scheme.is_ordinal(),
            }),
            ExactSoftLabel::Multi(per_label) => SoftLabel::Multi(MultilabelDistribution {
                labels: scheme.label_names().to_vec(),
                per_label: per_label
                    .iter()
                    .map(|bins| Distribution {
                        positions: vec![0, 1],
                        probs: bins.iter().map(to_f).collect(),
                        ordinal: false,
                    })
                    .collect(),
            }),
        }
    }
}

/// Derives the gold soft label of an item: for each bin, the fraction of the
/// item's annotators who chose it; for multilabel schemes, per label, the
/// fractions of annotators who did not / did select it.
pub fn derive_soft_label(item: &Item, scheme: &LabelScheme) -> Result<ExactSoftLabel, SoftLabelError> {
    let n = item.annotations.len() as u64;
    if n == 0 {
        return Err(SoftLabelError::NoAnnotations {
            item_id: item.item_id.clone(),
        });
    }
    let outside = |value: &LabelValue| SoftLabelError::OutsideScheme {
        item_id: item.item_id.clone(),
        value: value.to_string(),
        scheme: scheme.to_string(),
    };
    match scheme {
        LabelScheme::Binary | LabelScheme::Ordinal { .. } => {
            let positions = scheme.positions();
            let mut counts = vec![0u64; positions.len()];
            for a in &item.annotations {
                let idx = match a.value {
                    LabelValue::Scalar(v) => positions.iter().position(|&p| p == v),
                    LabelValue::Set(_) => None,
                }
                .ok_or_else(|| outside(&a.value))?;
                counts[idx] += 1;
            }
            Ok(ExactSoftLabel::Single(
                counts.into_iter().map(|c| Prob::new(c, n)).collect(),
            ))
        }
        LabelScheme::Multilabel { label_names } => {
            let mut selected = vec![0u64; label_names.len()];
            for a in &item.annotations {
                let LabelValue::Set(names) = &a.value else {
                    return Err(outside(&a.value));
                };
                if names.is_empty() {
                    return Err(outside(&a.value));
                }
                for name in names {
                    let idx = scheme.label_index(name).ok_or_else(|| outside(&a.value))?;
                    selected[idx] += 1;
                }
            }
            Ok(ExactSoftLabel::Multi(
                selected
                    .into_iter()
                    .map(|c| [Prob::new(n - c, n), Prob::new(c, n)])
                    .collect(),
            ))
        }
    }
}
