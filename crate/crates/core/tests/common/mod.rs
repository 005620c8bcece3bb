//! Reference implementations used as test oracles. None of them share code
//! with the library's metric or ranking paths.
#![allow(dead_code)]

use std::collections::BTreeMap;

use disagree_core::corpus::{Annotation, Item, LabelValue, Split};
use disagree_core::ranking::{Leaderboard, LeaderboardEntry, ZeroMethod};

/// Minimum-cost transport of `supply` onto `demand` with ground cost
/// `|pos[i] - pos[j]|`, by successive shortest paths (Bellman-Ford on the
/// residual graph).
pub fn transport_lp(pos: &[i64], supply: &[f64], demand: &[f64]) -> f64 {
    let n = pos.len();
    assert_eq!(supply.len(), n);
    assert_eq!(demand.len(), n);
    // Nodes: 0 = source, 1..=n = supply bins, n+1..=2n = demand bins, 2n+1 = sink.
    let nodes = 2 * n + 2;
    let (src, sink) = (0, 2 * n + 1);
    let mut cap = vec![vec![0.0f64; nodes]; nodes];
    let mut cost = vec![vec![0.0f64; nodes]; nodes];
    for i in 0..n {
        cap[src][1 + i] = supply[i];
        cap[n + 1 + i][sink] = demand[i];
        for j in 0..n {
            let c = (pos[i] - pos[j]).abs() as f64;
            cap[1 + i][n + 1 + j] = f64::INFINITY;
            cost[1 + i][n + 1 + j] = c;
            cost[n + 1 + j][1 + i] = -c;
        }
    }
    let eps = 1e-15;
    let mut total = 0.0;
    for _ in 0..10_000 {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for v in 0..nodes {
                    if cap[u][v] > eps && dist[u] + cost[u][v] < dist[v] - 1e-12 {
                        dist[v] = dist[u] + cost[u][v];
                        prev[v] = u;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != src {
            let u = prev[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != src {
            let u = prev[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
        total += push * dist[sink];
    }
    total
}

/// Two-sided exact Wilcoxon p-value by enumerating every sign assignment of
/// the non-zero differences (zeros dropped, mid-ranks for ties).
pub fn wilcoxon_enumerated(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    assert!(n <= 24, "enumeration oracle is for small N");
    let rank = |v: f64| {
        let less = d.iter().filter(|w| w.abs() < v).count() as f64;
        let equal = d.iter().filter(|w| w.abs() == v).count() as f64;
        less + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = d.iter().map(|v| rank(v.abs())).collect();
    let total: f64 = ranks.iter().sum();
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let centre = total / 2.0;
    let threshold = (observed - centre).abs();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let t: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
        if (t - centre).abs() >= threshold - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

pub fn item(id: &str, labels: &[(&str, LabelValue)]) -> Item {
    Item::new(
        id,
        labels
            .iter()
            .map(|(a, v)| Annotation {
                annotator_id: a.to_string(),
                value: v.clone(),
            })
            .collect(),
        Split::Test,
    )
}

pub fn scalar_item(id: &str, labels: &[(&str, i64)]) -> Item {
    let labels: Vec<(&str, LabelValue)> = labels.iter().map(|(a, v)| (*a, LabelValue::Scalar(*v))).collect();
    item(id, &labels)
}

pub fn set(names: &[&str]) -> LabelValue {
    LabelValue::Set(names.iter().map(|s| s.to_string()).collect())
}

/// The four worked examples of the released datasets.
pub fn csc_example() -> Item {
    scalar_item("csc-1", &[("A812", 1), ("A813", 3), ("A814", 1), ("A815", 2)])
}

pub fn mp_example() -> Item {
    scalar_item("mp-1", &[("A26", 1), ("A64", 1), ("A70", 1)])
}

pub fn par_example() -> Item {
    scalar_item("par-1", &[("A1", -1), ("A2", -3), ("A3", 5), ("A4", 4)])
}

pub fn ven_example() -> Item {
    item(
        "ven-1",
        &[("A1", set(&["E"])), ("A2", set(&["N"])), ("A3", set(&["N"])), ("A4", set(&["E"]))],
    )
}

/// Deterministic xorshift generator for fixtures that must not depend on
/// the library's RNG plumbing.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// A random distribution over `n` bins, with some exact zeros.
    pub fn distribution(&mut self, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n)
            .map(|_| if self.below(4) == 0 { 0.0 } else { self.uniform() })
            .collect();
        if w.iter().sum::<f64>() == 0.0 {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let drift: f64 = 1.0 - w.iter().sum::<f64>();
        let last = w.iter().rposition(|x| *x > 0.0).unwrap();
        w[last] += drift;
        w
    }
}

/// Exact two-sided Wilcoxon p-value for any N, propagating the null
/// distribution of the positive-rank sum as probabilities (mid-ranks kept
/// as half-units).
pub fn wilcoxon_exact_probabilities(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let half_units: Vec<usize> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|w| w.abs() < v.abs()).count();
            let equal = d.iter().filter(|w| w.abs() == v.abs()).count();
            2 * less + equal + 1
        })
        .collect();
    let total: usize = half_units.iter().sum();
    let mut dist = vec![0.0f64; total + 1];
    dist[0] = 1.0;
    for &r in &half_units {
        let mut next = vec![0.0f64; total + 1];
        for (s, p) in dist.iter().enumerate() {
            if *p > 0.0 {
                next[s] += p / 2.0;
                next[s + r] += p / 2.0;
            }
        }
        dist = next;
    }
    let observed: usize = d.iter().zip(&half_units).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let dev = |s: usize| (2 * s as i64 - total as i64).abs();
    dist.iter()
        .enumerate()
        .filter(|(s, _)| dev(*s) >= dev(observed))
        .map(|(_, p)| p)
        .sum::<f64>()
        .min(1.0)
}

pub fn board(dataset: &str, ranks: &[(&str, usize)]) -> Leaderboard {
    Leaderboard {
        dataset: dataset.into(),
        task: None,
        metric: "X".into(),
        alpha: 0.05,
        zero_method: ZeroMethod::Wilcox,
        entries: ranks
            .iter()
            .map(|(team, rank)| LeaderboardEntry {
                team: team.to_string(),
                aggregate: *rank as f64,
                cluster_id: *rank,
                rank: *rank,
                p_vs_head: None,
                substituted: false,
            })
            .collect(),
    }
}

pub const BSL: &str = "Random baseline (BSL)";

/// Published per-dataset ranks (CSC, MP, Par, VEN) of the soft-label
/// leaderboard; `None` marks a dataset the team did not submit to.
#[rustfmt::skip]
pub const TASK_A_RANKS: [(&str, [Option<usize>; 4]); 15] = [
    ("Opt-ICL", [Some(1), Some(1), Some(1), Some(3)]),
    ("DeMeVa", [Some(1), Some(6), Some(1), Some(3)]),
    ("twinhter", [Some(5), Some(5), Some(1), Some(1)]),
    ("McMaster", [Some(3), Some(3), Some(4), Some(7)]),
    ("BoN Appetite Team", [Some(6), Some(6), Some(4), Some(3)]),
    ("aadisanghani", [Some(3), Some(3), Some(7), None]),
    ("PromotionGo", [None, Some(1), None, None]),
    ("Most frequent baseline", [Some(7), Some(8), Some(7), Some(7)]),
    ("Uncertain Mis(Takes)", [None, None, None, Some(1)]),
    ("NLP-ResTeam", [Some(9), Some(9), Some(7), Some(9)]),
    ("LPI-RIT", [Some(9), Some(9), Some(7), None]),
    ("cklwanfifa", [None, None, None, Some(6)]),
    ("harikrishnan_gs", [Some(8), None, None, None]),
    ("tdang", [None, None, Some(4), None]),
    (BSL, [Some(11), Some(11), Some(7), Some(9)]),
];

/// Same for the perspectivist leaderboard.
#[rustfmt::skip]
pub const TASK_B_RANKS: [(&str, [Option<usize>; 4]); 11] = [
    ("Opt-ICL", [Some(1), Some(1), Some(2), Some(2)]),
    ("DeMeVa", [Some(2), Some(2), Some(2), Some(2)]),
    ("twinhter", [Some(5), Some(6), Some(1), Some(1)]),
    ("McMaster", [Some(3), Some(2), Some(4), Some(6)]),
    ("Most frequent baseline", [Some(5), Some(2), Some(6), Some(6)]),
    ("aadisanghani", [Some(3), Some(2), Some(6), None]),
    ("BoN Appetite Team", [Some(5), Some(9), Some(4), Some(2)]),
    ("NLP-ResTeam", [Some(8), Some(6), Some(6), Some(6)]),
    ("cklwanfifa", [None, None, None, Some(2)]),
    ("LPI-RIT", [Some(9), Some(6), Some(6), None]),
    (BSL, [Some(10), Some(10), Some(6), Some(9)]),
];

pub fn published_boards(rows: &[(&str, [Option<usize>; 4])]) -> BTreeMap<String, Leaderboard> {
    ["CSC", "MP", "Par", "VEN"]
        .iter()
        .enumerate()
        .map(|(k, ds)| {
            let present: Vec<(&str, usize)> = rows.iter().filter_map(|(t, r)| r[k].map(|x| (*t, x))).collect();
            (ds.to_string(), board(ds, &present))
        })
        .collect()
}

