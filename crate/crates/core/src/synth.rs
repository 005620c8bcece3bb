//! Deterministic synthetic corpora and controlled-noise predictions.
//!
//! Every item draws a latent label; each annotator then reports a noisy
//! version of it according to their own [`AnnotatorModel`]. All randomness is
//! sub-seeded per item id, so output does not depend on generation order.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{Map, Value};

use crate::baselines::{item_rng, random_label_value, random_soft_label, RandomFamily};
use crate::corpus::{Annotation, AnnotatorProfile, Dataset, Item, LabelValue, Split};
use crate::error::SynthError;
use crate::predictions::{LabelPredictions, SoftPredictions};
use crate::scheme::LabelScheme;
use crate::softlabels::{Distribution, MultilabelDistribution, SoftLabel};

/// How one simulated annotator departs from an item's latent label.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorModel {
    /// Ordinal: constant location shift in scale steps.
    pub shift: f64,
    /// Ordinal: standard deviation of Gaussian jitter, in scale steps.
    pub spread: f64,
    /// Binary: probability of reporting the other label.
    pub flip_prob: f64,
    /// Multilabel: per label, probability of adding it on top of the latent label.
    pub inclusion: Vec<f64>,
}

impl AnnotatorModel {
    pub fn exact(scheme: &LabelScheme) -> Self {
        AnnotatorModel {
            shift: 0.0,
            spread: 0.0,
            flip_prob: 0.0,
            inclusion: vec![0.0; scheme.label_names().len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub name: String,
    pub scheme: LabelScheme,
    pub n_items: usize,
    pub n_annotators: usize,
    /// Annotators drawn per item; `None` means every annotator labels every item.
    pub annotators_per_item: Option<usize>,
    pub annotators: Vec<AnnotatorModel>,
    /// Prevalence of latent labels (bins, or labels for multilabel schemes);
    /// uniform when `None`.
    pub latent_weights: Option<Vec<f64>>,
    pub split: Split,
    pub rng_seed: u64,
}

impl PopulationSpec {
    /// Noise-free annotators: every item is unanimous.
    pub fn new(scheme: LabelScheme, n_items: usize, n_annotators: usize, rng_seed: u64) -> Self {
        let model = AnnotatorModel::exact(&scheme);
        PopulationSpec {
            name: "synthetic".into(),
            annotators: vec![model; n_annotators],
            scheme,
            n_items,
            n_annotators,
            annotators_per_item: None,
            latent_weights: None,
            split: Split::Train,
            rng_seed,
        }
    }

    pub fn with_flip_prob(mut self, p: f64) -> Self {
        self.annotators.iter_mut().for_each(|a| a.flip_prob = p);
        self
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.annotators.iter_mut().for_each(|a| a.spread = spread);
        self
    }

    pub fn with_inclusion(mut self, q: f64) -> Self {
        self.annotators.iter_mut().for_each(|a| a.inclusion.iter_mut().for_each(|x| *x = q));
        self
    }

    pub fn with_latent_weights(mut self, weights: Vec<f64>) -> Self {
        self.latent_weights = Some(weights);
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// A population with some spread of annotator behaviour, scaled by `noise`
    /// in `[0, 1]`: shifts alternate around zero, flips and inclusions grow with it.
    pub fn noisy(scheme: LabelScheme, n_items: usize, n_annotators: usize, noise: f64, rng_seed: u64) -> Self {
        let mut spec = PopulationSpec::new(scheme, n_items, n_annotators, rng_seed);
        for (k, a) in spec.annotators.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            a.shift = sign * noise * (k % 3) as f64 * 0.5;
            a.spread = noise * 1.5;
            a.flip_prob = noise * 0.4;
            a.inclusion.iter_mut().for_each(|x| *x = noise * 0.3);
        }
        spec
    }

    pub fn check(&self) -> Result<(), SynthError> {
        if self.n_items == 0 || self.n_annotators == 0 {
            return Err(SynthError::Degenerate(format!(
                "{} items, {} annotators",
                self.n_items, self.n_annotators
            )));
        }
        if self.annotators.len() != self.n_annotators {
            return Err(SynthError::Parameter(format!(
                "{} annotator models for {} annotators",
                self.annotators.len(),
                self.n_annotators
            )));
        }
        if let Some(k) = self.annotators_per_item {
            if k == 0 || k > self.n_annotators {
                return Err(SynthError::Degenerate(format!("{k} annotators per item")));
            }
        }
        self.scheme.check().map_err(|e| SynthError::Parameter(e.to_string()))?;
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        for a in &self.annotators {
            if !unit(a.flip_prob) || !a.inclusion.iter().all(|&q| unit(q)) {
                return Err(SynthError::Parameter("probabilities must lie in [0, 1]".into()));
            }
            if !a.shift.is_finite() || !a.spread.is_finite() || a.spread < 0.0 {
                return Err(SynthError::Parameter("shift/spread must be finite, spread >= 0".into()));
            }
            if self.scheme.is_multilabel() && a.inclusion.len() != self.scheme.label_names().len() {
                return Err(SynthError::Parameter("one inclusion probability per label".into()));
            }
        }
        if let Some(w) = &self.latent_weights {
            let expected = if self.scheme.is_multilabel() {
                self.scheme.label_names().len()
            } else {
                self.scheme.bin_count()
            };
            if w.len() != expected || w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(SynthError::Parameter(format!(
                    "latent weights need {expected} non-negative entries with positive sum"
                )));
            }
        }
        Ok(())
    }

    fn annotator_id(k: usize) -> String {
        format!("A{}", k + 1)
    }

    fn item_id(&self, i: usize) -> String {
        format!("{}-{:05}", self.split, i)
    }
}

fn weighted_index(rng: &mut impl Rng, weights: Option<&[f64]>, n: usize) -> usize {
    match weights {
        None => rng.random_range(0..n),
        Some(w) => {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, x) in w.iter().enumerate() {
                if u < *x {
                    return i;
                }
                u -= x;
            }
            w.iter().rposition(|x| *x > 0.0).unwrap_or(n - 1)
        }
    }
}

/// Generates a corpus in the harmonized layout, deterministic under the seed.
pub fn generate_corpus(spec: &PopulationSpec) -> Result<Dataset, SynthError> {
    spec.check()?;
    let scheme = &spec.scheme;
    let positions = scheme.positions();
    let mut items = Vec::with_capacity(spec.n_items);
    for i in 0..spec.n_items {
        let item_id = spec.item_id(i);
        let mut rng = item_rng(spec.rng_seed, &item_id);
        let annotators: Vec<usize> = match spec.annotators_per_item {
            Some(k) if k < spec.n_annotators => {
                let mut picked = sample(&mut rng, spec.n_annotators, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..spec.n_annotators).collect(),
        };
        let weights = spec.latent_weights.as_deref();
        let (latent, annotations) = match scheme {
            LabelScheme::Multilabel { label_names } => {
                let j = weighted_index(&mut rng, weights, label_names.len());
                let annotations = annotators
                    .iter()
                    .map(|&k| {
                        let model = &spec.annotators[k];
                        let mut chosen: Vec<String> = Vec::new();
                        for (idx, name) in label_names.iter().enumerate() {
                            let u: f64 = rng.random();
                            if idx == j || u < model.inclusion[idx] {
                                chosen.push(name.clone());
                            }
                        }
                        Annotation {
                            annotator_id: PopulationSpec::annotator_id(k),
                            value: LabelValue::Set(chosen),
                        }
                    })
                    .collect();
                (Value::from(label_names[j].clone()), annotations)
            }
            _ => {
                let latent_idx = weighted_index(&mut rng, weights, positions.len());
                let latent = positions[latent_idx];
                let (lo, hi) = (positions[0], positions[positions.len() - 1]);
                let annotations = annotators
                    .iter()
                    .map(|&k| {
                        let model = &spec.annotators[k];
                        let u: f64 = rng.random();
                        let z: f64 = rng.sample(StandardNormal);
                        let value = match scheme {
                            LabelScheme::Binary => {
                                if u < model.flip_prob {
                                    1 - latent
                                } else {
                                    latent
                                }
                            }
                            _ => ((latent as f64 + model.shift + model.spread * z).round() as i64).clamp(lo, hi),
                        };
                        Annotation {
                            annotator_id: PopulationSpec::annotator_id(k),
                            value: LabelValue::Scalar(value),
                        }
                    })
                    .collect();
                (Value::from(latent), annotations)
            }
        };
        let mut item = Item::new(item_id, annotations, spec.split);
        item.text = Value::from(format!("synthetic item {i}"));
        item.task = "synthetic".into();
        let mut info = Map::new();
        info.insert("latent".into(), latent);
        item.other_info = info;
        items.push(item);
    }
    let mut ds = Dataset::new(spec.name.clone(), scheme.clone(), items);
    let profiles = spec
        .annotators
        .iter()
        .enumerate()
        .map(|(k, m)| AnnotatorProfile {
            annotator_id: PopulationSpec::annotator_id(k),
            attributes: [
                ("shift".to_string(), Value::from(m.shift)),
                ("spread".to_string(), Value::from(m.spread)),
                ("flip_prob".to_string(), Value::from(m.flip_prob)),
            ]
            .into(),
        })
        .collect();
    ds.attach_profiles(profiles);
    Ok(ds)
}

/// Task A and Task B predictions at a controlled distance from gold.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedPredictions {
    pub soft: SoftPredictions,
    pub labels: LabelPredictions,
}

const TASK_B_STREAM: u64 = 0x5eed_b0b0_0000_0001;

/// Moves gold toward noise by `noise_level` in `[0, 1]` (clamped).
///
/// Task A: `(1 - noise) * gold + noise * q` with `q` a fixed per-item random
/// distribution, so every distance grows linearly in the noise level.
/// Task B: each (item, annotator) slot is replaced by a fixed wrong label
/// when its fixed uniform draw falls below the noise level, so the set of
/// wrong slots only grows with it. Level 0 reproduces gold exactly.
pub fn perturb_predictions(gold: &Dataset, noise_level: f64, seed: u64) -> PerturbedPredictions {
    let lambda = noise_level.clamp(0.0, 1.0);
    let scheme = &gold.scheme;
    let mut soft = SoftPredictions::new();
    let mut labels = LabelPredictions::new();
    for item in &gold.items {
        if let Some(g) = item.gold_soft_label(scheme) {
            let q = random_soft_label(scheme, &item.item_id, seed, RandomFamily::Simplex);
            soft.insert(item.item_id.clone(), mix(scheme, &g, &q, lambda));
        }
        let mut rng = item_rng(seed ^ TASK_B_STREAM, &item.item_id);
        let slots = item
            .annotator_ids
            .iter()
            .map(|a| {
                let u: f64 = rng.random();
                let value = match item.annotation(a) {
                    Some(truth) => {
                        let wrong = wrong_label(scheme, truth, &mut rng);
                        if u < lambda {
                            wrong
                        } else {
                            truth.clone()
                        }
                    }
                    None => random_label_value(scheme, &mut rng),
                };
                (a.clone(), value)
            })
            .collect();
        labels.insert(item.item_id.clone(), slots);
    }
    PerturbedPredictions { soft, labels }
}

fn mix_dist(scheme: &LabelScheme, g: &Distribution, q: &Distribution, lambda: f64) -> Distribution {
    let probs = g
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    Distribution::new(scheme, probs).expect("convex combination of distributions")
}

fn mix(scheme: &LabelScheme, g: &SoftLabel, q: &SoftLabel, lambda: f64) -> SoftLabel {
    match (g, q) {
        (SoftLabel::Single(g), SoftLabel::Single(q)) => SoftLabel::Single(mix_dist(scheme, g, q, lambda)),
        (SoftLabel::Multi(g), SoftLabel::Multi(q)) => {
            let per_label = g
                .per_label()
                .iter()
                .zip(q.per_label())
                .map(|(a, b)| mix_dist(scheme, a, b, lambda))
                .collect();
            SoftLabel::Multi(MultilabelDistribution::new(scheme, per_label).expect("same labels"))
        }
        _ => unreachable!("gold and noise share the scheme"),
    }
}

/// A label different from `truth`, uniformly among the alternatives.
fn wrong_label(scheme: &LabelScheme, truth: &LabelValue, rng: &mut impl Rng) -> LabelValue {
    match (scheme, truth) {
        (LabelScheme::Binary, LabelValue::Scalar(v)) => LabelValue::Scalar(1 - v),
        (LabelScheme::Ordinal { .. }, LabelValue::Scalar(v)) => {
            let others: Vec<i64> = scheme.positions().into_iter().filter(|p| p != v).collect();
            LabelValue::Scalar(others[rng.random_range(0..others.len())])
        }
        (LabelScheme::Multilabel { label_names }, LabelValue::Set(current)) => {
            let n = label_names.len();
            let mask_of = |names: &[String]| {
                names
                    .iter()
                    .filter_map(|x| scheme.label_index(x))
                    .fold(0u64, |m, j| m | (1 << j))
            };
            let current = mask_of(current);
            let options: Vec<u64> = (1..(1u64 << n)).filter(|m| *m != current).collect();
            let mask = options[rng.random_range(0..options.len())];
            LabelValue::Set(
                label_names
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask & (1 << j) != 0)
                    .map(|(_, name)| name.clone())
                    .collect(),
            )
        }
        _ => truth.clone(),
    }
}
