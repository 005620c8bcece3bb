//! Evaluation harness for systems that model annotator disagreement.
//!
//! A corpus keeps every annotator's label ([`corpus`]). From those labels the
//! crate derives exact soft labels ([`softlabels`]), scores soft-label
//! predictions and per-annotator predictions ([`metrics`]), produces the two
//! reference baselines ([`baselines`]) and ranks systems with paired
//! Wilcoxon tests into tie clusters ([`ranking`]). [`synth`] generates
//! corpora and predictions with known properties for testing.
//!
//! ```
//! use disagree_core::{corpus::{Annotation, Item, LabelValue, Split}, scheme::LabelScheme};
//! use disagree_core::softlabels::{derive_soft_label, ExactSoftLabel};
//!
//! let scheme = LabelScheme::Binary;
//! let item = Item::new(
//!     "42",
//!     (0..4)
//!         .map(|k| Annotation { annotator_id: format!("a{k}"), value: LabelValue::Scalar((k % 4 != 0) as i64) })
//!         .collect(),
//!     Split::Dev,
//! );
//! let ExactSoftLabel::Single(p) = derive_soft_label(&item, &scheme).unwrap() else { unreachable!() };
//! assert_eq!(p, vec![num_rational::Ratio::new(1, 4), num_rational::Ratio::new(3, 4)]);
//! ```

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod predictions;
pub mod ranking;
pub mod scheme;
pub mod softlabels;
pub mod synth;

pub use corpus::{Dataset, Item, LabelValue, Split};
pub use metrics::{Metric, ScoreReport, Task};
pub use predictions::{PredictionFile, Predictions};
pub use scheme::LabelScheme;
pub use softlabels::{Distribution, SoftLabel};
