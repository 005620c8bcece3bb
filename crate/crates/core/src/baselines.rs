//! The two reference baselines: random and most frequent, for both tasks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Item, LabelValue};
use crate::error::BaselineError;
use crate::predictions::{LabelPredictions, SoftPredictions};
use crate::scheme::LabelScheme;
use crate::softlabels::{derive_soft_label, Distribution, ExactSoftLabel, MultilabelDistribution, SoftLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Random,
    MostFrequent,
}

impl FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "random" => Ok(BaselineKind::Random),
            "most-frequent" | "mostfrequent" | "majority" => Ok(BaselineKind::MostFrequent),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Random => "random",
            BaselineKind::MostFrequent => "most-frequent",
        })
    }
}

/// How a "random distribution" is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomFamily {
    /// Uniform over the probability simplex (flat Dirichlet).
    #[default]
    Simplex,
    /// Independent uniforms per bin, then normalized.
    NormalizedUniform,
}

impl FromStr for RandomFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simplex" | "dirichlet" => Ok(RandomFamily::Simplex),
            "normalized-uniform" | "uniform" => Ok(RandomFamily::NormalizedUniform),
            other => Err(format!("unknown random family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub rng_seed: u64,
    #[serde(default)]
    pub family: RandomFamily,
}

/// Recorded alongside generated predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: BaselineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<RandomFamily>,
    #[serde(default)]
    pub tie_breaks: Vec<String>,
}

/// Sub-seed for one item, independent of generation order.
pub fn item_seed(seed: u64, item_id: &str) -> u64 {
    // FNV-1a over the id, mixed with the run seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in item_id.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn item_rng(seed: u64, item_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(item_seed(seed, item_id))
}

/// The modal gold soft label of the training items.
#[derive(Debug, Clone, PartialEq)]
pub struct MostFrequentSoft {
    pub label: ExactSoftLabel,
    /// Number of training items carrying exactly this soft label.
    pub count: usize,
    pub tie_break: Option<String>,
}

impl MostFrequentSoft {
    pub fn soft_label(&self, scheme: &LabelScheme) -> SoftLabel {
        self.label.to_soft_label(scheme)
    }

    pub fn assign<'a>(
        &self,
        scheme: &LabelScheme,
        targets: impl IntoIterator<Item = &'a Item>,
    ) -> SoftPredictions {
        let label = self.soft_label(scheme);
        targets
            .into_iter()
            .map(|item| (item.item_id.clone(), label.clone()))
            .collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            kind: BaselineKind::MostFrequent,
            seed: None,
            family: None,
            tie_breaks: self.tie_break.iter().cloned().collect(),
        }
    }
}

/// Finds the most frequent gold soft label over all annotated items of
/// `train`. Soft labels are compared exactly; ties go to the
/// lexicographically smallest probability vector.
pub fn most_frequent_soft(train: &Dataset) -> Result<MostFrequentSoft, BaselineError> {
    let mut counts: BTreeMap<ExactSoftLabel, usize> = BTreeMap::new();
    for item in train.items.iter().filter(|i| !i.annotations.is_empty()) {
        *counts.entry(derive_soft_label(item, &train.scheme)?).or_insert(0) += 1;
    }
    let (label, count, tied) = pick_mode(counts).ok_or(BaselineError::EmptyTrain)?;
    let tie_break = (tied > 1).then(|| {
        format!("{tied} soft labels share the top count {count}; kept the lexicographically smallest")
    });
    Ok(MostFrequentSoft {
        label,
        count,
        tie_break,
    })
}

/// Highest count; among equal counts the first key in order wins. Also
/// returns how many keys share the top count.
fn pick_mode<K: Ord>(counts: BTreeMap<K, usize>) -> Option<(K, usize, usize)> {
    let top = *counts.values().max()?;
    let tied = counts.values().filter(|&&c| c == top).count();
    let key = counts.into_iter().find(|(_, c)| *c == top)?.0;
    Some((key, top, tied))
}

/// The most frequent single annotation value in the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct MostFrequentLabel {
    pub label: LabelValue,
    pub count: usize,
    pub tie_break: Option<String>,
}

impl MostFrequentLabel {
    /// Predicts the modal label for every annotator of every target item.
    pub fn assign<'a>(&self, targets: impl IntoIterator<Item = &'a Item>) -> LabelPredictions {
        targets
            .into_iter()
            .map(|item| {
                let slots = item
                    .annotator_ids
                    .iter()
                    .map(|a| (a.clone(), self.label.clone()))
                    .collect();
                (item.item_id.clone(), slots)
            })
            .collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            kind: BaselineKind::MostFrequent,
            seed: None,
            family: None,
            tie_breaks: self.tie_break.iter().cloned().collect(),
        }
    }
}

/// Counts every annotation in `train`; ties go to the smallest value (for
/// label sets: smallest sequence of scheme label indices).
pub fn most_frequent_label(train: &Dataset) -> Result<MostFrequentLabel, BaselineError> {
    let scheme = &train.scheme;
    // Key orders values the way ties are broken.
    let mut counts: BTreeMap<(i64, Vec<usize>), (usize, LabelValue)> = BTreeMap::new();
    for a in train.items.iter().flat_map(|i| &i.annotations) {
        let key = match &a.value {
            LabelValue::Scalar(v) => (*v, Vec::new()),
            LabelValue::Set(names) => (
                0,
                names
                    .iter()
                    .map(|n| scheme.label_index(n).unwrap_or(usize::MAX))
                    .collect(),
            ),
        };
        counts.entry(key).or_insert((0, a.value.clone())).0 += 1;
    }
    let by_key: BTreeMap<_, usize> = counts.iter().map(|(k, (c, _))| (k.clone(), *c)).collect();
    let (key, count, tied) = pick_mode(by_key).ok_or(BaselineError::EmptyTrain)?;
    let label = counts.remove(&key).expect("key from counts").1;
    let tie_break = (tied > 1).then(|| {
        format!("{tied} labels share the top count {count}; kept the smallest ({label})")
    });
    Ok(MostFrequentLabel {
        label,
        count,
        tie_break,
    })
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize, family: RandomFamily) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = match family {
            RandomFamily::Simplex => (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect(),
            RandomFamily::NormalizedUniform => (0..n).map(|_| rng.random::<f64>()).collect(),
        };
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.into_iter().map(|x| x / total).collect();
        }
    }
}

/// One random soft label for `item_id`, drawn from its own sub-seed.
pub fn random_soft_label(
    scheme: &LabelScheme,
    item_id: &str,
    seed: u64,
    family: RandomFamily,
) -> SoftLabel {
    let mut rng = item_rng(seed, item_id);
    let build = |probs| Distribution::new(scheme, probs).expect("normalized draw is a distribution");
    match scheme {
        LabelScheme::Multilabel { label_names } => {
            let per_label = label_names
                .iter()
                .map(|_| build(random_probs(&mut rng, 2, family)))
                .collect();
            SoftLabel::Multi(MultilabelDistribution::new(scheme, per_label).expect("one per label"))
        }
        _ => SoftLabel::Single(build(random_probs(&mut rng, scheme.bin_count(), family))),
    }
}

/// Random Task A predictions: an independent draw per item.
pub fn random_soft<'a>(
    scheme: &LabelScheme,
    items: impl IntoIterator<Item = &'a Item>,
    seed: u64,
    family: RandomFamily,
) -> SoftPredictions {
    items
        .into_iter()
        .map(|item| {
            (
                item.item_id.clone(),
                random_soft_label(scheme, &item.item_id, seed, family),
            )
        })
        .collect()
}

/// A uniformly random label; for multilabel schemes, a uniformly random
/// non-empty label subset.
pub fn random_label_value(scheme: &LabelScheme, rng: &mut ChaCha8Rng) -> LabelValue {
    match scheme {
        LabelScheme::Multilabel { label_names } => {
            let subsets = (1u64 << label_names.len()) - 1;
            let mask = rng.random_range(1..=subsets);
            LabelValue::Set(
                label_names
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask & (1 << j) != 0)
                    .map(|(_, n)| n.clone())
                    .collect(),
            )
        }
        _ => {
            let positions = scheme.positions();
            LabelValue::Scalar(positions[rng.random_range(0..positions.len())])
        }
    }
}

/// Random Task B predictions: i.i.d. uniform labels per (item, annotator).
pub fn random_label<'a>(
    scheme: &LabelScheme,
    items: impl IntoIterator<Item = &'a Item>,
    seed: u64,
) -> LabelPredictions {
    items
        .into_iter()
        .map(|item| {
            let mut rng = item_rng(seed, &item.item_id);
            let slots = item
                .annotator_ids
                .iter()
                .map(|a| (a.clone(), random_label_value(scheme, &mut rng)))
                .collect();
            (item.item_id.clone(), slots)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotation, Split};

    fn scalar_item(id: &str, values: &[i64]) -> Item {
        Item::new(
            id,
            values
                .iter()
                .enumerate()
                .map(|(k, v)| Annotation {
                    annotator_id: format!("A{k}"),
                    value: LabelValue::Scalar(*v),
                })
                .collect(),
            Split::Train,
        )
    }

    fn mp_train(values: &[&[i64]]) -> Dataset {
        let items = values
            .iter()
            .enumerate()
            .map(|(i, v)| scalar_item(&format!("t{i}"), v))
            .collect();
        Dataset::new("mp", LabelScheme::Binary, items)
    }

    #[test]
    fn most_frequent_soft_takes_the_mode() {
        let train = mp_train(&[&[1, 1], &[1, 1, 1], &[0, 1], &[1], &[0, 0]]);
        let mf = most_frequent_soft(&train).unwrap();
        assert_eq!(mf.count, 3);
        assert!(mf.tie_break.is_none());
        let preds = mf.assign(&train.scheme, &train.items);
        assert!(preds
            .values()
            .all(|p| p.as_single().unwrap().probs() == [0.0, 1.0]));
    }

    #[test]
    fn most_frequent_soft_tie_is_lexicographic() {
        let train = mp_train(&[&[1], &[0], &[0, 1]]);
        let mf = most_frequent_soft(&train).unwrap();
        // [0:0,1:1] < [0:1/2,1:1/2] < [0:1,1:0]
        assert_eq!(mf.soft_label(&train.scheme).as_single().unwrap().probs(), [0.0, 1.0]);
        assert!(mf.tie_break.as_deref().unwrap().contains("3 soft labels"));
        assert!(mf.provenance().tie_breaks.len() == 1);
    }

    #[test]
    fn empty_train_errors() {
        let train = mp_train(&[]);
        assert!(matches!(most_frequent_soft(&train), Err(BaselineError::EmptyTrain)));
        assert!(matches!(most_frequent_label(&train), Err(BaselineError::EmptyTrain)));
    }

    #[test]
    fn most_frequent_label_mode_and_ties() {
        let csc = LabelScheme::bundled("csc").unwrap();
        let train = Dataset::new("csc", csc, vec![scalar_item("a", &[2, 2, 3]), scalar_item("b", &[2, 5])]);
        let mf = most_frequent_label(&train).unwrap();
        assert_eq!(mf.label, LabelValue::Scalar(2));
        assert!(mf.tie_break.is_none());

        let train = mp_train(&[&[1, 0], &[0, 1]]);
        let mf = most_frequent_label(&train).unwrap();
        assert_eq!(mf.label, LabelValue::Scalar(0));
        assert!(mf.tie_break.is_some());
        let preds = mf.assign(&train.items);
        assert_eq!(preds["t0"].len(), 2);
    }

    #[test]
    fn multilabel_most_frequent_set() {
        let ven = LabelScheme::bundled("ven").unwrap();
        let set = |xs: &[&str]| LabelValue::Set(xs.iter().map(|s| s.to_string()).collect());
        let item = Item::new(
            "v",
            vec![
                Annotation { annotator_id: "A1".into(), value: set(&["E", "N"]) },
                Annotation { annotator_id: "A2".into(), value: set(&["N"]) },
                Annotation { annotator_id: "A3".into(), value: set(&["E", "N"]) },
            ],
            Split::Train,
        );
        let ds = Dataset::new("ven", ven.clone(), vec![item]);
        assert_eq!(most_frequent_label(&ds).unwrap().label, set(&["E", "N"]));
        let soft = most_frequent_soft(&ds).unwrap().soft_label(&ven);
        assert_eq!(soft.as_multi().unwrap().get("E").unwrap().probs(), [1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn random_is_seeded_and_order_independent() {
        let csc = LabelScheme::bundled("csc").unwrap();
        let items: Vec<Item> = (0..20).map(|i| scalar_item(&format!("x{i}"), &[1, 2])).collect();
        let a = random_soft(&csc, &items, 7, RandomFamily::Simplex);
        let b = random_soft(&csc, items.iter().rev(), 7, RandomFamily::Simplex);
        assert_eq!(a, b);
        let c = random_soft(&csc, &items, 8, RandomFamily::Simplex);
        assert_ne!(a, c);
        let la = random_label(&csc, &items, 7);
        assert_eq!(la, random_label(&csc, &items, 7));
        for slots in la.values() {
            for (_, v) in slots {
                assert!(v.conforms(&csc));
            }
        }
    }

    #[test]
    fn random_multilabel_sets_are_non_empty() {
        let ven = LabelScheme::bundled("ven").unwrap();
        let mut rng = item_rng(1, "x");
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let v = random_label_value(&ven, &mut rng);
            assert!(v.conforms(&ven));
            seen.insert(v);
        }
        assert_eq!(seen.len(), 7);
    }
}
