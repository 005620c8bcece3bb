mod common;

use common::Xorshift;
use disagree_core::baselines::{most_frequent_label, most_frequent_soft, random_label, random_soft, RandomFamily};
use disagree_core::corpus::{Annotation, Dataset, Item, LabelValue, Split};
use disagree_core::metrics::{manhattan_distance, Metric, ScoreReport};
use disagree_core::predictions::{score_predictions, Predictions};
use disagree_core::ranking::{cluster_ties, SystemRun, ZeroMethod};
use disagree_core::scheme::LabelScheme;
use disagree_core::softlabels::Distribution;
use disagree_core::synth::{generate_corpus, perturb_predictions, PopulationSpec};
use disagree_core::Task;

const BUNDLED: [&str; 4] = ["csc", "mp", "par", "ven"];

fn bundled(name: &str) -> LabelScheme {
    LabelScheme::bundled(name).unwrap()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn score(gold: &Dataset, p: Predictions) -> ScoreReport {
    let m = Metric::official(p.task(), &gold.scheme);
    score_predictions(gold, &p, m).unwrap()
}

#[test]
fn flip_half_gives_half_agreement() {
    let spec = PopulationSpec::new(LabelScheme::Binary, 10_000, 5, 31).with_flip_prob(0.5);
    let ds = generate_corpus(&spec).unwrap();
    let per_item: Vec<f64> = ds
        .items
        .iter()
        .map(|item| {
            let v: Vec<i64> = item.annotations.iter().map(|a| a.value.as_scalar().unwrap()).collect();
            let mut agree = 0;
            let mut pairs = 0;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    pairs += 1;
                    agree += (v[i] == v[j]) as usize;
                }
            }
            agree as f64 / pairs as f64
        })
        .collect();
    let (m, _) = mean_sd(&per_item);
    assert!((m - 0.5).abs() <= 0.02, "agreement {m}");
}

#[test]
fn same_seed_same_bytes() {
    for name in BUNDLED {
        let spec = PopulationSpec::noisy(bundled(name), 50, 5, 0.4, 17);
        let a = generate_corpus(&spec).unwrap().to_json_pretty();
        let b = generate_corpus(&spec).unwrap().to_json_pretty();
        assert_eq!(a, b);
        let other = PopulationSpec { rng_seed: 18, ..spec };
        assert_ne!(a, generate_corpus(&other).unwrap().to_json_pretty());
    }
}

#[test]
fn zero_noise_scores_zero() {
    for name in BUNDLED {
        let ds = generate_corpus(&PopulationSpec::noisy(bundled(name), 40, 5, 0.5, 3)).unwrap();
        let p = perturb_predictions(&ds, 0.0, 4);
        assert_eq!(score(&ds, Predictions::A(p.soft)).aggregate, 0.0, "{name}");
        assert_eq!(score(&ds, Predictions::B(p.labels)).aggregate, 0.0, "{name}");
    }
}

#[test]
fn aggregates_grow_with_noise() {
    for name in BUNDLED {
        let ds = generate_corpus(&PopulationSpec::noisy(bundled(name), 100, 5, 0.5, 12)).unwrap();
        for task in [Task::A, Task::B] {
            let mut last = -1.0;
            for level in [0.0, 0.1, 0.2, 0.3, 0.4] {
                let p = perturb_predictions(&ds, level, 99);
                let r = match task {
                    Task::A => score(&ds, Predictions::A(p.soft)),
                    Task::B => score(&ds, Predictions::B(p.labels)),
                };
                assert!(r.aggregate >= last, "{name} {task} at {level}");
                last = r.aggregate;
            }
        }
    }
}

#[test]
fn low_and_high_noise_systems_are_separated() {
    for name in BUNDLED {
        let ds = generate_corpus(&PopulationSpec::noisy(bundled(name), 200, 5, 0.5, 21)).unwrap();
        for task in [Task::A, Task::B] {
            let reports: Vec<ScoreReport> = [(0.1, 1u64), (0.4, 2u64)]
                .iter()
                .map(|(level, seed)| {
                    let p = perturb_predictions(&ds, *level, *seed);
                    match task {
                        Task::A => score(&ds, Predictions::A(p.soft)),
                        Task::B => score(&ds, Predictions::B(p.labels)),
                    }
                })
                .collect();
            let p = common::wilcoxon_exact_probabilities(&reports[0].per_item_values(), &reports[1].per_item_values());
            assert!(p <= 0.05, "{name} {task}: exact p {p}");
            let runs = vec![
                SystemRun::new("low", &ds.name, reports[0].clone()),
                SystemRun::new("high", &ds.name, reports[1].clone()),
            ];
            let lb = cluster_ties(&runs, 0.05, ZeroMethod::Wilcox).unwrap();
            assert_eq!(lb.entry("low").unwrap().rank, 1);
            assert_eq!(lb.entry("high").unwrap().rank, 2, "{name} {task}");
        }
    }
}

#[test]
fn most_frequent_soft_on_skewed_binary_train() {
    let train = generate_corpus(&PopulationSpec::new(LabelScheme::Binary, 500, 3, 5).with_latent_weights(vec![0.3, 0.7]))
        .unwrap();
    let ones = train.items.iter().filter(|i| i.annotations[0].value == LabelValue::Scalar(1)).count();
    assert!(ones > 300, "fixture should be skewed, got {ones}");
    let mf = most_frequent_soft(&train).unwrap();
    let target = generate_corpus(&PopulationSpec::new(LabelScheme::Binary, 30, 3, 6).with_split(Split::Test)).unwrap();
    let preds = mf.assign(&train.scheme, &target.items);
    assert_eq!(preds.len(), 30);
    assert!(preds.values().all(|p| p.as_single().unwrap().probs() == [0.0, 1.0]));
}

fn items_with_labels(labels: &[i64], per_item: usize) -> Vec<Item> {
    labels
        .chunks(per_item)
        .enumerate()
        .map(|(k, chunk)| {
            Item::new(
                format!("i{k:06}"),
                chunk
                    .iter()
                    .enumerate()
                    .map(|(a, v)| Annotation {
                        annotator_id: format!("A{a}"),
                        value: LabelValue::Scalar(*v),
                    })
                    .collect(),
                Split::Train,
            )
        })
        .collect()
}

#[test]
fn most_frequent_label_examples() {
    let mp: Vec<i64> = (0..100).map(|k| (k % 10 >= 7) as i64).collect();
    let train = Dataset::new("mp", LabelScheme::Binary, items_with_labels(&mp, 4));
    let mf = most_frequent_label(&train).unwrap();
    assert_eq!(mf.label, LabelValue::Scalar(0));
    let preds = mf.assign(&train.items);
    assert!(preds.values().flatten().all(|(_, v)| *v == LabelValue::Scalar(0)));

    let csc: Vec<i64> = vec![2, 2, 2, 1, 3, 6, 2, 5, 4, 2, 1, 1];
    let train = Dataset::new("csc", bundled("csc"), items_with_labels(&csc, 3));
    assert_eq!(most_frequent_label(&train).unwrap().label, LabelValue::Scalar(2));

    let tie = Dataset::new("csc", bundled("csc"), items_with_labels(&[5, 3, 5, 3], 2));
    let mf = most_frequent_label(&tie).unwrap();
    assert_eq!(mf.label, LabelValue::Scalar(3));
    assert_eq!(mf.provenance().tie_breaks.len(), 1);
}

#[test]
fn random_soft_is_deterministic_and_normalized() {
    let target = generate_corpus(&PopulationSpec::new(bundled("par"), 200, 3, 1)).unwrap();
    for family in [RandomFamily::Simplex, RandomFamily::NormalizedUniform] {
        let a = random_soft(&target.scheme, &target.items, 7, family);
        let b = random_soft(&target.scheme, &target.items, 7, family);
        assert_eq!(a, b);
        for p in a.values() {
            let s: f64 = p.as_single().unwrap().probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

/// Simplex-uniform predictions against a point-mass binary gold, compared
/// with a Monte-Carlo oracle that draws the simplex by sorted-uniform spacings.
#[test]
fn random_simplex_distance_matches_monte_carlo() {
    for bins in [2usize, 6] {
        let scheme = LabelScheme::ordinal(1, bins as i64).unwrap();
        let gold = Distribution::point_mass(&scheme, bins as i64).unwrap();
        let mut rng = Xorshift(0x1234_5678);
        let oracle: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let mut cuts: Vec<f64> = (0..bins - 1).map(|_| rng.uniform()).collect();
                cuts.push(0.0);
                cuts.push(1.0);
                cuts.sort_by(f64::total_cmp);
                let p: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
                p.iter().zip(gold.probs()).map(|(a, b)| (a - b).abs()).sum()
            })
            .collect();
        let items: Vec<Item> = (0..200_000).map(|k| Item::new(format!("r{k}"), Vec::new(), Split::Test)).collect();
        let preds = random_soft(&scheme, &items, 11, RandomFamily::Simplex);
        let drawn: Vec<f64> = preds
            .values()
            .map(|p| manhattan_distance(p.as_single().unwrap(), &gold).unwrap())
            .collect();
        let (mo, so) = mean_sd(&oracle);
        let (mi, si) = mean_sd(&drawn);
        let half_width = 2.576 * (so * so / oracle.len() as f64 + si * si / drawn.len() as f64).sqrt();
        assert!((mo - mi).abs() <= half_width, "{bins} bins: oracle {mo}, impl {mi}, ±{half_width}");
        if bins == 2 {
            assert!((mo - 1.0).abs() < 0.005);
        }
    }
}

fn slots(n_items: usize, per_item: usize, gold: i64) -> Vec<Item> {
    items_with_labels(&vec![gold; n_items * per_item], per_item)
}

#[test]
fn random_binary_error_rate_is_half() {
    let items = slots(20_000, 5, 1);
    let ds = Dataset::new("b", LabelScheme::Binary, items);
    let preds = random_label(&ds.scheme, &ds.items, 3);
    let r = score_predictions(&ds, &Predictions::B(preds), Metric::Aer).unwrap();
    assert!((r.aggregate - 0.5).abs() <= 0.01, "{}", r.aggregate);
}

#[test]
fn random_ordinal_labels_are_uniform() {
    let scheme = bundled("csc");
    let items = slots(20_000, 5, 1);
    let preds = random_label(&scheme, &items, 5);
    let mut counts = [0f64; 6];
    for (_, v) in preds.values().flatten() {
        counts[(v.as_scalar().unwrap() - 1) as usize] += 1.0;
    }
    let n: f64 = counts.iter().sum();
    assert_eq!(n, 100_000.0);
    let expected = n / 6.0;
    for c in counts {
        assert!((c / n - 1.0 / 6.0).abs() <= 0.01);
    }
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 5 degrees of freedom, upper 0.1% point
    assert!(chi2 < 20.515, "chi-square {chi2}");
}

#[test]
fn random_ordinal_distance_matches_enumeration() {
    let scheme = bundled("csc");
    for t in 1..=6i64 {
        let items = slots(4_000, 5, t);
        let preds = random_label(&scheme, &items, 40 + t as u64);
        let d: Vec<f64> = preds.values().flatten().map(|(_, v)| (v.as_scalar().unwrap() - t).abs() as f64).collect();
        let closed: f64 = (1..=6i64).map(|v| (v - t).abs() as f64).sum::<f64>() / 6.0;
        let (m, s) = mean_sd(&d);
        assert!((m - closed).abs() <= 4.0 * s / (d.len() as f64).sqrt(), "t={t}: {m} vs {closed}");
    }
}

#[test]
fn random_labels_repeat_under_seed() {
    let ven = bundled("ven");
    let ds = generate_corpus(&PopulationSpec::new(ven.clone(), 50, 4, 2)).unwrap();
    assert_eq!(random_label(&ven, &ds.items, 7), random_label(&ven, &ds.items, 7));
    for (_, v) in random_label(&ven, &ds.items, 7).values().flatten() {
        assert!(v.conforms(&ven));
    }
}
