//! Label schemes: how an item's labels are laid out.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SchemeError;

/// Declares the label space of a dataset.
///
/// Bins are ordered: `Binary` has bins `{0, 1}`, `Ordinal` has one bin per
/// integer in `[min_value, max_value]`, and each label of a `Multilabel`
/// scheme carries its own binary `{0, 1}` distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelScheme {
    Binary,
    Ordinal { min_value: i64, max_value: i64 },
    Multilabel { label_names: Vec<String> },
}

/// The four schemes shipped with the tool, keyed by dataset short name.
pub const BUNDLED: [&str; 4] = ["csc", "mp", "par", "ven"];

impl LabelScheme {
    pub fn ordinal(min_value: i64, max_value: i64) -> Result<Self, SchemeError> {
        let scheme = LabelScheme::Ordinal {
            min_value,
            max_value,
        };
        scheme.check()?;
        Ok(scheme)
    }

    pub fn multilabel<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self, SchemeError> {
        let scheme = LabelScheme::Multilabel {
            label_names: names.into_iter().map(Into::into).collect(),
        };
        scheme.check()?;
        Ok(scheme)
    }

    /// Looks up a bundled dataset scheme (`csc`, `mp`, `par`, `ven`).
    pub fn bundled(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "csc" => Some(LabelScheme::Ordinal {
                min_value: 1,
                max_value: 6,
            }),
            "mp" => Some(LabelScheme::Binary),
            "par" => Some(LabelScheme::Ordinal {
                min_value: -5,
                max_value: 5,
            }),
            "ven" => Some(LabelScheme::Multilabel {
                label_names: vec!["C".into(), "E".into(), "N".into()],
            }),
            _ => None,
        }
    }

    /// Resolves a `--scheme` argument: a bundled name or a path to a JSON
    /// config such as `{"kind": "ordinal", "min_value": 1, "max_value": 5}`.
    pub fn resolve(arg: &str) -> Result<Self, SchemeError> {
        if let Some(s) = Self::bundled(arg) {
            return Ok(s);
        }
        let path = Path::new(arg);
        let bytes = std::fs::read(path).map_err(|source| SchemeError::Io {
            path: arg.to_string(),
            source,
        })?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SchemeError> {
        let scheme: LabelScheme = serde_json::from_slice(bytes)?;
        scheme.check()?;
        Ok(scheme)
    }

    pub fn check(&self) -> Result<(), SchemeError> {
        match self {
            LabelScheme::Binary => Ok(()),
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => {
                if min_value < max_value {
                    Ok(())
                } else {
                    Err(SchemeError::Invalid(format!(
                        "ordinal scale needs min < max, got [{min_value}, {max_value}]"
                    )))
                }
            }
            LabelScheme::Multilabel { label_names } => {
                if label_names.is_empty() {
                    return Err(SchemeError::Invalid("multilabel scheme has no labels".into()));
                }
                for (i, name) in label_names.iter().enumerate() {
                    if label_names[..i].contains(name) {
                        return Err(SchemeError::Invalid(format!("duplicate label name {name:?}")));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self, LabelScheme::Ordinal { .. })
    }

    pub fn is_multilabel(&self) -> bool {
        matches!(self, LabelScheme::Multilabel { .. })
    }

    /// Number of bins of a single (non-multilabel) distribution.
    pub fn bin_count(&self) -> usize {
        match self {
            LabelScheme::Binary | LabelScheme::Multilabel { .. } => 2,
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => (max_value - min_value + 1) as usize,
        }
    }

    /// Bin positions; for multilabel schemes these are the per-label `{0, 1}` bins.
    pub fn positions(&self) -> Vec<i64> {
        match self {
            LabelScheme::Binary | LabelScheme::Multilabel { .. } => vec![0, 1],
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => (*min_value..=*max_value).collect(),
        }
    }

    /// The Likert range `max - min` used to normalize absolute distances.
    pub fn scale_range(&self) -> Option<i64> {
        match self {
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => Some(max_value - min_value),
            _ => None,
        }
    }

    pub fn label_names(&self) -> &[String] {
        match self {
            LabelScheme::Multilabel { label_names } => label_names,
            _ => &[],
        }
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.label_names().iter().position(|l| l == name)
    }

    /// Whether a scalar label value is inside the scheme.
    pub fn admits(&self, value: i64) -> bool {
        match self {
            LabelScheme::Binary => value == 0 || value == 1,
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => (*min_value..=*max_value).contains(&value),
            LabelScheme::Multilabel { .. } => false,
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelScheme::Binary => write!(f, "binary"),
            LabelScheme::Ordinal {
                min_value,
                max_value,
            } => write!(f, "ordinal[{min_value},{max_value}]"),
            LabelScheme::Multilabel { label_names } => {
                write!(f, "multilabel{{{}}}", label_names.join(","))
            }
        }
    }
}
