//! Harmonized JSON corpora: items with disaggregated annotations, plus the
//! separately distributed annotator metadata.
//!
//! Accepted dataset layouts:
//!
//! * `{"name": ..., "items": [ {item}, ... ]}` (canonical output form)
//! * a bare array of items
//! * an object keyed by item id, `{"<item_id>": {item}, ...}`
//!
//! Item fields may use either snake_case names (`number_of_annotations`) or
//! the spaced names of the released files (`number of annotations`,
//! `annotation task`, `annotators`, `lang`, `other info`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::de::{Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CorpusError;
use crate::scheme::LabelScheme;
use crate::softlabels::{derive_soft_label, SoftLabel};

/// Per-bin tolerance when comparing a stored soft label with the derived one.
pub const SOFT_LABEL_MATCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "dev" | "val" | "validation" => Some(Split::Dev),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Split::parse(s).ok_or_else(|| format!("unknown split {s:?}"))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// One annotator's label: an integer (binary / ordinal) or a set of label
/// names (multilabel), kept in scheme order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Scalar(i64),
    Set(Vec<String>),
}

impl LabelValue {
    /// Lenient conversion from JSON: integers, integral floats and numeric
    /// strings for scalar schemes; arrays of names or comma-separated strings
    /// for multilabel schemes. Scheme membership is checked separately.
    pub fn from_json(scheme: &LabelScheme, value: &Value) -> Result<Self, String> {
        if scheme.is_multilabel() {
            let raw: Vec<String> = match value {
                Value::Array(xs) => xs
                    .iter()
                    .map(|x| {
                        x.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| format!("label {x} is not a string"))
                    })
                    .collect::<Result<_, _>>()?,
                Value::String(s) => s
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
                other => return Err(format!("expected a list of labels, found {other}")),
            };
            let names = scheme.label_names();
            let mut resolved = Vec::with_capacity(raw.len());
            for r in raw {
                let canonical = names
                    .iter()
                    .find(|n| **n == r)
                    .or_else(|| names.iter().find(|n| n.eq_ignore_ascii_case(&r)))
                    .cloned()
                    .unwrap_or(r);
                resolved.push(canonical);
            }
            Ok(LabelValue::set_in_scheme_order(scheme, resolved))
        } else {
            let parsed = match value {
                Value::Number(n) => n
                    .as_i64()
                    .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64)),
                Value::String(s) => crate::softlabels::parse_position(s),
                _ => None,
            };
            parsed
                .map(LabelValue::Scalar)
                .ok_or_else(|| format!("expected an integer label, found {value}"))
        }
    }

    /// Dedups and orders names by their position in the scheme; unknown names
    /// go last so that validation can report them.
    pub fn set_in_scheme_order(scheme: &LabelScheme, mut names: Vec<String>) -> Self {
        let key = |n: &String| scheme.label_index(n).unwrap_or(usize::MAX);
        names.sort_by(|a, b| key(a).cmp(&key(b)).then_with(|| a.cmp(b)));
        names.dedup();
        LabelValue::Set(names)
    }

    pub fn as_scalar(&self) -> Option<i64> {
        match self {
            LabelValue::Scalar(v) => Some(*v),
            LabelValue::Set(_) => None,
        }
    }

    /// Whether the value conforms to the scheme.
    pub fn conforms(&self, scheme: &LabelScheme) -> bool {
        match self {
            LabelValue::Scalar(v) => scheme.admits(*v),
            LabelValue::Set(names) => {
                scheme.is_multilabel()
                    && !names.is_empty()
                    && names.iter().all(|n| scheme.label_index(n).is_some())
            }
        }
    }
}

impl fmt::Display for LabelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelValue::Scalar(v) => write!(f, "{v}"),
            LabelValue::Set(names) => write!(f, "{{{}}}", names.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub annotator_id: String,
    pub value: LabelValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub item_id: String,
    /// Dataset-specific payload (a string, or an object such as context + response).
    pub text: Value,
    pub task: String,
    pub annotations: Vec<Annotation>,
    pub annotator_ids: Vec<String>,
    pub number_of_annotations: usize,
    pub number_of_annotators: usize,
    pub language: Option<String>,
    /// Carried through untouched; never consumed by scoring.
    pub hard_label: Option<Value>,
    pub soft_label: Option<SoftLabel>,
    pub split: Split,
    pub other_info: Map<String, Value>,
}

impl Item {
    /// A minimal consistent item; annotator ids follow the annotation order.
    pub fn new(item_id: impl Into<String>, annotations: Vec<Annotation>, split: Split) -> Self {
        let annotator_ids: Vec<String> = annotations.iter().map(|a| a.annotator_id.clone()).collect();
        Item {
            item_id: item_id.into(),
            text: Value::Null,
            task: String::new(),
            number_of_annotations: annotations.len(),
            number_of_annotators: annotator_ids.len(),
            annotations,
            annotator_ids,
            language: None,
            hard_label: None,
            soft_label: None,
            split,
            other_info: Map::new(),
        }
    }

    pub fn annotation(&self, annotator_id: &str) -> Option<&LabelValue> {
        self.annotations
            .iter()
            .find(|a| a.annotator_id == annotator_id)
            .map(|a| &a.value)
    }

    /// The gold soft label: derived from annotations when there are any,
    /// otherwise the stored one.
    pub fn gold_soft_label(&self, scheme: &LabelScheme) -> Option<SoftLabel> {
        if self.annotations.is_empty() {
            return self.soft_label.clone();
        }
        derive_soft_label(self, scheme)
            .ok()
            .map(|exact| exact.to_soft_label(scheme))
    }
}

impl Serialize for Item {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Annotations<'a>(&'a [Annotation]);
        impl Serialize for Annotations<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for a in self.0 {
                    map.serialize_entry(&a.annotator_id, &a.value)?;
                }
                map.end()
            }
        }

        let mut s = serializer.serialize_struct("Item", 12)?;
        s.serialize_field("item_id", &self.item_id)?;
        s.serialize_field("text", &self.text)?;
        s.serialize_field("task", &self.task)?;
        s.serialize_field("number_of_annotations", &self.number_of_annotations)?;
        s.serialize_field("number_of_annotators", &self.number_of_annotators)?;
        s.serialize_field("annotations", &Annotations(&self.annotations))?;
        s.serialize_field("annotator_ids", &self.annotator_ids)?;
        s.serialize_field("language", &self.language)?;
        s.serialize_field("hard_label", &self.hard_label)?;
        s.serialize_field("soft_label", &self.soft_label.as_ref().map(SoftLabel::to_json))?;
        s.serialize_field("split", &self.split)?;
        s.serialize_field("other_info", &self.other_info)?;
        s.end()
    }
}

/// Demographic and other attributes of one annotator. Attributes that are
/// absent or `null` in the source are simply not present in the map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorProfile {
    pub annotator_id: String,
    pub attributes: BTreeMap<String, Value>,
}

impl AnnotatorProfile {
    pub fn get(&self, attribute: &str) -> Option<&Value> {
        self.attributes.get(attribute)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub scheme: LabelScheme,
    pub items: Vec<Item>,
    pub profiles: Vec<AnnotatorProfile>,
    /// Annotator ids referenced by items but absent from `profiles`.
    pub missing_profiles: BTreeSet<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, scheme: LabelScheme, items: Vec<Item>) -> Self {
        let mut ds = Dataset {
            name: name.into(),
            scheme,
            items,
            profiles: Vec::new(),
            missing_profiles: BTreeSet::new(),
        };
        ds.refresh_missing_profiles();
        ds
    }

    pub fn item(&self, item_id: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.item_id == item_id)
    }

    pub fn items_in(&self, split: Split) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |i| i.split == split)
    }

    /// A dataset restricted to one split.
    pub fn split(&self, split: Split) -> Dataset {
        let mut ds = Dataset {
            name: self.name.clone(),
            scheme: self.scheme.clone(),
            items: self.items_in(split).cloned().collect(),
            profiles: self.profiles.clone(),
            missing_profiles: BTreeSet::new(),
        };
        ds.refresh_missing_profiles();
        ds
    }

    pub fn splits(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for item in &self.items {
            *counts.entry(item.split).or_insert(0) += 1;
        }
        counts
    }

    pub fn attach_profiles(&mut self, profiles: Vec<AnnotatorProfile>) {
        self.profiles = profiles;
        self.refresh_missing_profiles();
    }

    fn refresh_missing_profiles(&mut self) {
        let known: HashSet<&str> = self.profiles.iter().map(|p| p.annotator_id.as_str()).collect();
        self.missing_profiles = self
            .items
            .iter()
            .flat_map(|i| i.annotator_ids.iter())
            .filter(|id| !known.contains(id.as_str()))
            .cloned()
            .collect();
    }

    /// Canonical JSON form: `{"name", "scheme", "items"}` with fixed key order.
    pub fn to_json_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("name".into(), Value::from(self.name.clone()));
        map.insert(
            "scheme".into(),
            serde_json::to_value(&self.scheme).expect("scheme serializes"),
        );
        map.insert(
            "items".into(),
            serde_json::to_value(&self.items).expect("items serialize"),
        );
        Value::Object(map)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("dataset serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    MalformedJson,
    MissingField,
    InvalidField,
    SchemeViolation,
    DuplicateItem,
    DuplicateAnnotator,
    UnknownAnnotator,
    CountMismatch,
    InvalidSoftLabel,
    SoftLabelMismatch,
}

impl FindingKind {
    /// Everything but a stored/derived soft-label disagreement.
    pub fn is_structural(self) -> bool {
        !matches!(self, FindingKind::SoftLabelMismatch)
    }
}

/// One located problem in a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub item_id: Option<String>,
    pub field: String,
    pub message: String,
}

impl Finding {
    fn new(kind: FindingKind, item_id: Option<&str>, field: &str, message: impl Into<String>) -> Self {
        Finding {
            kind,
            item_id: item_id.map(str::to_string),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.item_id {
            Some(id) => write!(f, "item {id}, field {}: {}", self.field, self.message),
            None => write!(f, "field {}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn structural(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.kind.is_structural())
    }

    pub fn has_structural(&self) -> bool {
        self.structural().next().is_some()
    }

    pub fn to_text(&self) -> String {
        if self.findings.is_empty() {
            return "no findings\n".to_string();
        }
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&format!("{:?}: {f}\n", f.kind));
        }
        out
    }
}

/// Checks every invariant of a dataset and cross-checks stored soft labels
/// against the ones derived from annotations.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut findings = Vec::new();
    if let Err(e) = dataset.scheme.check() {
        findings.push(Finding::new(FindingKind::InvalidField, None, "scheme", e.to_string()));
    }
    let mut seen = HashSet::new();
    for item in &dataset.items {
        if !seen.insert(item.item_id.as_str()) {
            findings.push(Finding::new(
                FindingKind::DuplicateItem,
                Some(&item.item_id),
                "item_id",
                "item_id is not unique",
            ));
        }
        findings.extend(check_item(item, &dataset.scheme));
        findings.extend(check_soft_label_agreement(item, &dataset.scheme));
    }
    let mut profile_ids = HashSet::new();
    for p in &dataset.profiles {
        if !profile_ids.insert(p.annotator_id.as_str()) {
            findings.push(Finding::new(
                FindingKind::DuplicateAnnotator,
                None,
                "annotator_id",
                format!("metadata lists annotator {} twice", p.annotator_id),
            ));
        }
    }
    ValidationReport { findings }
}

/// Structural invariants of one item.
fn check_item(item: &Item, scheme: &LabelScheme) -> Vec<Finding> {
    let id = Some(item.item_id.as_str());
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for a in &item.annotator_ids {
        if !ids.insert(a.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateAnnotator,
                id,
                "annotator_ids",
                format!("annotator {a} listed twice"),
            ));
        }
    }
    let mut annotated = HashSet::new();
    for a in &item.annotations {
        if !ids.contains(a.annotator_id.as_str()) {
            out.push(Finding::new(
                FindingKind::UnknownAnnotator,
                id,
                "annotations",
                format!("annotator {} is not in annotator_ids", a.annotator_id),
            ));
        }
        if !annotated.insert(a.annotator_id.as_str()) {
            out.push(Finding::new(
                FindingKind::DuplicateAnnotator,
                id,
                "annotations",
                format!("annotator {} annotated twice", a.annotator_id),
            ));
        }
        if !a.value.conforms(scheme) {
            out.push(Finding::new(
                FindingKind::SchemeViolation,
                id,
                "annotations",
                format!("annotator {}: value {} outside {scheme}", a.annotator_id, a.value),
            ));
        }
    }
    if item.number_of_annotations != item.annotations.len() {
        out.push(Finding::new(
            FindingKind::CountMismatch,
            id,
            "number_of_annotations",
            format!(
                "claims {} annotations, found {}",
                item.number_of_annotations,
                item.annotations.len()
            ),
        ));
    }
    if let Some(stored) = &item.soft_label {
        if let Err(e) = SoftLabel::from_json(scheme, &stored.to_json()) {
            out.push(Finding::new(FindingKind::InvalidSoftLabel, id, "soft_label", e));
        }
    }
    out
}

fn check_soft_label_agreement(item: &Item, scheme: &LabelScheme) -> Option<Finding> {
    let stored = item.soft_label.as_ref()?;
    let derived = derive_soft_label(item, scheme).ok()?.to_soft_label(scheme);
    let agrees = stored
        .max_abs_diff(&derived)
        .is_some_and(|d| d <= SOFT_LABEL_MATCH_TOLERANCE);
    (!agrees).then(|| {
        Finding::new(
            FindingKind::SoftLabelMismatch,
            Some(&item.item_id),
            "soft_label",
            format!("stored {} but annotations give {}", stored.to_json(), derived.to_json()),
        )
    })
}

/// Parses one dataset file. All located problems are collected; if there is
/// any, the whole parse fails with [`CorpusError::Invalid`].
pub fn parse_dataset(bytes: &[u8], scheme: &LabelScheme) -> Result<Dataset, CorpusError> {
    parse_named_dataset(bytes, scheme, "")
}

pub fn parse_named_dataset(bytes: &[u8], scheme: &LabelScheme, name: &str) -> Result<Dataset, CorpusError> {
    let top: Entries = serde_json::from_slice(bytes)?;
    let mut name = name.to_string();
    let raw_items: Vec<(Option<String>, Value)> = match top {
        Entries::Seq(values) => values.into_iter().map(|v| (None, v)).collect(),
        Entries::Map(entries) => {
            let has_items_array = entries
                .iter()
                .any(|(k, v)| k == "items" && v.is_array());
            if has_items_array {
                let mut items = Vec::new();
                for (k, v) in entries {
                    match (k.as_str(), v) {
                        ("items", Value::Array(xs)) => items = xs.into_iter().map(|v| (None, v)).collect(),
                        ("name", Value::String(s)) if name.is_empty() => name = s,
                        _ => {}
                    }
                }
                items
            } else {
                entries.into_iter().map(|(k, v)| (Some(k), v)).collect()
            }
        }
    };

    let mut problems = Vec::new();
    let mut items = Vec::with_capacity(raw_items.len());
    let mut seen = HashSet::new();
    for (index, (key, raw)) in raw_items.into_iter().enumerate() {
        match parse_item(key, raw, scheme, index) {
            Ok(item) => {
                if !seen.insert(item.item_id.clone()) {
                    problems.push(Finding::new(
                        FindingKind::DuplicateItem,
                        Some(&item.item_id),
                        "item_id",
                        "item_id is not unique",
                    ));
                }
                let item_problems = check_item(&item, scheme);
                if item_problems.is_empty() {
                    items.push(item);
                } else {
                    problems.extend(item_problems);
                }
            }
            Err(mut p) => problems.append(&mut p),
        }
    }
    if !problems.is_empty() {
        return Err(CorpusError::Invalid(problems));
    }
    Ok(Dataset::new(name, scheme.clone(), items))
}

const ALIASES: &[(&str, &[&str])] = &[
    ("item_id", &["item_id", "id"]),
    ("text", &["text"]),
    ("task", &["task", "annotation task", "annotation_task"]),
    ("number_of_annotations", &["number_of_annotations", "number of annotations"]),
    ("number_of_annotators", &["number_of_annotators", "number of annotators"]),
    ("annotations", &["annotations", "disaggregated_annotations", "disaggregated annotations"]),
    ("annotator_ids", &["annotator_ids", "annotators", "annotator ids"]),
    ("language", &["language", "lang"]),
    ("hard_label", &["hard_label", "hard label"]),
    ("soft_label", &["soft_label", "soft label", "soft_labels", "soft labels"]),
    ("split", &["split"]),
    ("other_info", &["other_info", "other info"]),
];

fn take_field(obj: &mut Map<String, Value>, canonical: &str) -> Option<Value> {
    let names = ALIASES
        .iter()
        .find(|(c, _)| *c == canonical)
        .map(|(_, names)| *names)
        .unwrap_or(&[]);
    let mut found = None;
    for n in names {
        if let Some(v) = obj.remove(*n) {
            if found.is_none() && !v.is_null() {
                found = Some(v);
            }
        }
    }
    found
}

fn parse_item(
    key: Option<String>,
    raw: Value,
    scheme: &LabelScheme,
    index: usize,
) -> Result<Item, Vec<Finding>> {
    let Value::Object(mut obj) = raw else {
        let label = key.unwrap_or_else(|| format!("#{index}"));
        return Err(vec![Finding::new(
            FindingKind::InvalidField,
            Some(&label),
            "item",
            "item is not a JSON object",
        )]);
    };
    let item_id = match (take_field(&mut obj, "item_id"), key) {
        (Some(Value::String(s)), _) => s,
        (Some(Value::Number(n)), _) => n.to_string(),
        (_, Some(k)) => k,
        _ => {
            return Err(vec![Finding::new(
                FindingKind::MissingField,
                Some(&format!("#{index}")),
                "item_id",
                "missing required field",
            )])
        }
    };
    let id = Some(item_id.as_str());
    let mut problems = Vec::new();
    let missing = |field: &str| Finding::new(FindingKind::MissingField, id, field, "missing required field");
    let invalid = |field: &str, msg: String| Finding::new(FindingKind::InvalidField, id, field, msg);

    let annotator_ids: Vec<String> = match take_field(&mut obj, "annotator_ids") {
        Some(Value::Array(xs)) => xs
            .iter()
            .filter_map(|x| match x {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => {
                    problems.push(invalid("annotator_ids", format!("bad annotator id {x}")));
                    None
                }
            })
            .collect(),
        Some(Value::String(s)) => s
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        Some(other) => {
            problems.push(invalid("annotator_ids", format!("expected a list, found {other}")));
            Vec::new()
        }
        None => {
            problems.push(missing("annotator_ids"));
            Vec::new()
        }
    };

    let mut annotations = Vec::new();
    match take_field(&mut obj, "annotations") {
        Some(Value::Object(map)) => {
            let mut unordered = Vec::new();
            for (annotator_id, v) in map {
                match LabelValue::from_json(scheme, &v) {
                    Ok(value) => unordered.push(Annotation { annotator_id, value }),
                    Err(e) => problems.push(Finding::new(
                        FindingKind::SchemeViolation,
                        id,
                        "annotations",
                        format!("annotator {annotator_id}: {e}"),
                    )),
                }
            }
            let rank = |a: &Annotation| {
                annotator_ids
                    .iter()
                    .position(|x| *x == a.annotator_id)
                    .unwrap_or(usize::MAX)
            };
            unordered.sort_by_key(|a| rank(a));
            annotations = unordered;
        }
        Some(other) => problems.push(invalid(
            "annotations",
            format!("expected an object of annotator_id -> label, found {other}"),
        )),
        None => problems.push(missing("annotations")),
    }

    let split = match take_field(&mut obj, "split") {
        Some(Value::String(s)) => Split::parse(&s).unwrap_or_else(|| {
            problems.push(invalid("split", format!("unknown split {s:?}")));
            Split::Train
        }),
        Some(other) => {
            problems.push(invalid("split", format!("expected a string, found {other}")));
            Split::Train
        }
        None => {
            problems.push(missing("split"));
            Split::Train
        }
    };

    let mut count = |field: &str, default: usize, problems: &mut Vec<Finding>| -> usize {
        match take_field(&mut obj, field) {
            None => default,
            Some(v) => match v.as_u64().or_else(|| v.as_str().and_then(|s| s.trim().parse().ok())) {
                Some(n) => n as usize,
                None => {
                    problems.push(invalid(field, format!("expected a count, found {v}")));
                    default
                }
            },
        }
    };
    let number_of_annotations = count("number_of_annotations", annotations.len(), &mut problems);
    let number_of_annotators = count("number_of_annotators", annotator_ids.len(), &mut problems);

    let soft_label = match take_field(&mut obj, "soft_label") {
        None => None,
        Some(v) => match SoftLabel::from_json(scheme, &v) {
            Ok(s) => Some(s),
            Err(e) => {
                problems.push(Finding::new(FindingKind::InvalidSoftLabel, id, "soft_label", e));
                None
            }
        },
    };

    let text = take_field(&mut obj, "text").unwrap_or(Value::Null);
    let task = match take_field(&mut obj, "task") {
        Some(Value::String(s)) => s,
        Some(other) => other.to_string(),
        None => String::new(),
    };
    let language = match take_field(&mut obj, "language") {
        Some(Value::String(s)) => Some(s),
        Some(other) => Some(other.to_string()),
        None => None,
    };
    let hard_label = take_field(&mut obj, "hard_label");
    let mut other_info = match take_field(&mut obj, "other_info") {
        Some(Value::Object(m)) => m,
        Some(other) => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
        None => Map::new(),
    };
    for (k, v) in obj {
        if other_info.contains_key(&k) {
            problems.push(invalid(
                &k,
                "unknown field collides with a key of other_info".to_string(),
            ));
        } else {
            other_info.insert(k, v);
        }
    }

    if !problems.is_empty() {
        return Err(problems);
    }
    Ok(Item {
        item_id,
        text,
        task,
        annotations,
        annotator_ids,
        number_of_annotations,
        number_of_annotators,
        language,
        hard_label,
        soft_label,
        split,
        other_info,
    })
}

/// Parses the annotator metadata file: either a list of objects carrying
/// `annotator_id`, or an object keyed by annotator id.
pub fn parse_metadata(bytes: &[u8]) -> Result<Vec<AnnotatorProfile>, CorpusError> {
    let top: Entries = serde_json::from_slice(bytes)?;
    let raw: Vec<(String, Map<String, Value>)> = match top {
        Entries::Map(entries) => entries
            .into_iter()
            .enumerate()
            .map(|(index, (id, v))| match v {
                Value::Object(m) => Ok((id, m)),
                Value::Null => Ok((id, Map::new())),
                _ => Err(CorpusError::MalformedProfile { index }),
            })
            .collect::<Result<_, _>>()?,
        Entries::Seq(values) => values
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                let Value::Object(mut m) = v else {
                    return Err(CorpusError::MalformedProfile { index });
                };
                let id = match m.remove("annotator_id").or_else(|| m.remove("id")) {
                    Some(Value::String(s)) => s,
                    Some(Value::Number(n)) => n.to_string(),
                    _ => return Err(CorpusError::MalformedProfile { index }),
                };
                Ok((id, m))
            })
            .collect::<Result<_, _>>()?,
    };
    let mut seen = HashSet::new();
    let mut profiles = Vec::with_capacity(raw.len());
    for (annotator_id, attrs) in raw {
        if !seen.insert(annotator_id.clone()) {
            return Err(CorpusError::DuplicateProfile(annotator_id));
        }
        let attributes = attrs.into_iter().filter(|(_, v)| !v.is_null()).collect();
        profiles.push(AnnotatorProfile {
            annotator_id,
            attributes,
        });
    }
    Ok(profiles)
}

/// Top-level JSON container that keeps object entries in document order,
/// duplicates included.
enum Entries {
    Seq(Vec<Value>),
    Map(Vec<(String, Value)>),
}

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON array or object")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some(v) = seq.next_element()? {
                    out.push(v);
                }
                Ok(Entries::Seq(out))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry()? {
                    out.push((k, v));
                }
                Ok(Entries::Map(out))
            }
        }
        deserializer.deserialize_any(EntriesVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csc() -> LabelScheme {
        LabelScheme::bundled("csc").unwrap()
    }

    #[test]
    fn empty_items_array_is_valid() {
        let ds = parse_dataset(br#"{"items": []}"#, &csc()).unwrap();
        assert!(ds.items.is_empty());
        let ds = parse_dataset(b"[]", &csc()).unwrap();
        assert!(ds.items.is_empty());
        assert!(validate_dataset(&ds).is_empty());
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_dataset(b"[{", &csc()), Err(CorpusError::Json(_))));
    }

    #[test]
    fn value_outside_scheme_names_item() {
        let raw = br#"[{"item_id": "x9", "annotations": {"A1": 7}, "annotator_ids": ["A1"], "split": "test"}]"#;
        let Err(CorpusError::Invalid(found)) = parse_dataset(raw, &csc()) else {
            panic!("expected invalid")
        };
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, FindingKind::SchemeViolation);
        assert_eq!(found[0].item_id.as_deref(), Some("x9"));
        assert_eq!(found[0].field, "annotations");
    }

    #[test]
    fn missing_field_and_duplicate_item() {
        let raw = br#"[
            {"item_id": "a", "annotations": {"A1": 1}, "split": "train"},
            {"item_id": "b", "annotations": {"A1": 1}, "annotator_ids": ["A1"], "split": "train"},
            {"item_id": "b", "annotations": {"A1": 2}, "annotator_ids": ["A1"], "split": "train"}
        ]"#;
        let Err(CorpusError::Invalid(found)) = parse_dataset(raw, &csc()) else {
            panic!()
        };
        let kinds: Vec<_> = found.iter().map(|f| (f.kind, f.item_id.clone().unwrap())).collect();
        assert!(kinds.contains(&(FindingKind::MissingField, "a".into())));
        assert!(kinds.contains(&(FindingKind::DuplicateItem, "b".into())));
    }

    #[test]
    fn count_mismatch_rejected_by_parser() {
        let raw = br#"[{"item_id": "a", "annotations": {"A1": 1}, "annotator_ids": ["A1"],
                        "number_of_annotations": 2, "split": "train"}]"#;
        let Err(CorpusError::Invalid(found)) = parse_dataset(raw, &csc()) else {
            panic!()
        };
        assert_eq!(found[0].kind, FindingKind::CountMismatch);
    }

    #[test]
    fn released_keyed_layout() {
        let raw = br#"{
            "17": {"text": {"post": "@USER Oh dear"}, "annotation task": "irony",
                   "number of annotations": 3, "annotations": {"A26": "1", "A64": "1", "A70": "1"},
                   "annotators": "A26,A64,A70", "lang": "en", "hard_label": "1",
                   "soft_label": {"0.0": 0.0, "1.0": 1.0}, "split": "dev",
                   "other_info": {"source": "reddit"}, "extra_field": 5}
        }"#;
        let ds = parse_dataset(raw, &LabelScheme::Binary).unwrap();
        let item = &ds.items[0];
        assert_eq!(item.item_id, "17");
        assert_eq!(item.task, "irony");
        assert_eq!(item.annotator_ids, ["A26", "A64", "A70"]);
        assert_eq!(item.language.as_deref(), Some("en"));
        assert_eq!(item.split, Split::Dev);
        assert_eq!(item.other_info["extra_field"], 5);
        assert_eq!(item.other_info["source"], "reddit");
        assert_eq!(item.hard_label, Some(Value::from("1")));
        assert!(validate_dataset(&ds).is_empty());
    }

    #[test]
    fn duplicate_keys_in_keyed_layout() {
        let raw = br#"{"a": {"annotations": {"X": 1}, "annotators": "X", "split": "train"},
                       "a": {"annotations": {"X": 0}, "annotators": "X", "split": "train"}}"#;
        let Err(CorpusError::Invalid(found)) = parse_dataset(raw, &LabelScheme::Binary) else {
            panic!()
        };
        assert_eq!(found[0].kind, FindingKind::DuplicateItem);
    }

    #[test]
    fn multilabel_values() {
        let ven = LabelScheme::bundled("ven").unwrap();
        let raw = br#"[{"item_id": "v", "annotations": {"A1": ["N", "e"], "A2": "C,N", "A3": []},
                        "annotator_ids": ["A1", "A2", "A3"], "split": "train"}]"#;
        let Err(CorpusError::Invalid(found)) = parse_dataset(raw, &ven) else {
            panic!()
        };
        assert_eq!(found.len(), 1, "{found:?}");
        assert!(found[0].message.contains("A3"));

        let raw = br#"[{"item_id": "v", "annotations": {"A1": ["N", "e"], "A2": "C,N"},
                        "annotator_ids": ["A1", "A2"], "split": "train"}]"#;
        let ds = parse_dataset(raw, &ven).unwrap();
        assert_eq!(
            ds.items[0].annotations[0].value,
            LabelValue::Set(vec!["E".into(), "N".into()])
        );
    }

    #[test]
    fn metadata_layouts() {
        let profiles = parse_metadata(br#"{"A1": {"gender": "F", "age": 34, "nationality": null}}"#).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].attributes.len(), 2);
        assert!(profiles[0].get("nationality").is_none());

        let profiles = parse_metadata(br#"[{"annotator_id": "A1", "gender": "M"}, {"id": "A2"}]"#).unwrap();
        assert_eq!(profiles[1].annotator_id, "A2");
        assert!(parse_metadata(b"[]").unwrap().is_empty());
        assert!(matches!(
            parse_metadata(br#"[{"annotator_id": "A1"}, {"annotator_id": "A1"}]"#),
            Err(CorpusError::DuplicateProfile(id)) if id == "A1"
        ));
        assert!(matches!(
            parse_metadata(br#"{"A1": {}, "A1": {"age": 3}}"#),
            Err(CorpusError::DuplicateProfile(_))
        ));
        assert!(matches!(parse_metadata(b"{"), Err(CorpusError::Json(_))));
    }

    #[test]
    fn missing_profiles_recorded() {
        let raw = br#"[{"item_id": "a", "annotations": {"A1": 1, "A2": 2}, "annotator_ids": ["A1", "A2"], "split": "train"}]"#;
        let mut ds = parse_dataset(raw, &csc()).unwrap();
        ds.attach_profiles(parse_metadata(br#"{"A1": {"age": 30}}"#).unwrap());
        assert_eq!(ds.missing_profiles.iter().collect::<Vec<_>>(), ["A2"]);
    }
}
