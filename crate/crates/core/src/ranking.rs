//! Leaderboards with statistical ties.
//!
//! Within a dataset, systems are sorted by their aggregate loss and swept
//! greedily: the best system heads the first cluster, and each following
//! system joins the current cluster unless a paired Wilcoxon signed-rank test
//! against the cluster head rejects at `alpha`, in which case it opens a new
//! cluster. Across datasets, teams are ordered by their mean per-dataset rank.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::RankingError;
use crate::metrics::{ScoreReport, Task};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Largest number of non-zero differences handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zero differences with the others, then drop them.
    Pratt,
}

impl FromStr for ZeroMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wilcox" => Ok(ZeroMethod::Wilcox),
            "pratt" => Ok(ZeroMethod::Pratt),
            other => Err(format!("unknown zero method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    Exact,
    Normal,
    /// Every difference was zero; p is 1 by convention.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of the ranks of the positive differences `x - y`.
    pub statistic: f64,
    pub n_effective: usize,
    pub method: PValueMethod,
}

impl WilcoxonResult {
    pub fn is_degenerate(&self) -> bool {
        self.method == PValueMethod::Degenerate
    }
}

/// Mid-ranks of `values` (1-based), doubled so they stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share (start+1+end)/2; doubled: start+1+end
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired differences `x - y`.
///
/// Zero differences are handled per `zero_method`; tied magnitudes get
/// mid-ranks. With at most [`EXACT_MAX_N`] non-zero differences the p-value
/// comes from the exact permutation distribution of the signed ranks,
/// otherwise from the normal approximation with tie-corrected variance and
/// continuity correction.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    zero_method: ZeroMethod,
) -> Result<WilcoxonResult, RankingError> {
    wilcoxon_signed_rank_with(x, y, zero_method, PValueMode::Auto)
}

/// Which null distribution [`wilcoxon_signed_rank_with`] uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PValueMode {
    /// Exact up to [`EXACT_MAX_N`] non-zero differences, normal beyond.
    #[default]
    Auto,
    /// Exact whenever the counts fit in 64 bits (N <= 63).
    Exact,
    Normal,
}

/// [`wilcoxon_signed_rank`] with the p-value branch chosen by the caller.
pub fn wilcoxon_signed_rank_with(
    x: &[f64],
    y: &[f64],
    zero_method: ZeroMethod,
    mode: PValueMode,
) -> Result<WilcoxonResult, RankingError> {
    if x.len() != y.len() {
        return Err(RankingError::Misaligned(format!(
            "{} vs {} paired values",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(RankingError::Empty);
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let (ranked, ranks): (Vec<f64>, Vec<u64>) = match zero_method {
        ZeroMethod::Wilcox => {
            let nz: Vec<f64> = diffs.into_iter().filter(|d| *d != 0.0).collect();
            let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
            let r = doubled_midranks(&abs);
            (nz, r)
        }
        ZeroMethod::Pratt => {
            let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
            let r = doubled_midranks(&abs);
            diffs
                .into_iter()
                .zip(r)
                .filter(|(d, _)| *d != 0.0)
                .unzip()
        }
    };
    let n = ranked.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            statistic: 0.0,
            n_effective: 0,
            method: PValueMethod::Degenerate,
        });
    }
    let t2: u64 = ranked
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total2: u64 = ranks.iter().sum();
    let statistic = t2 as f64 / 2.0;

    let exact = match mode {
        PValueMode::Auto => n <= EXACT_MAX_N,
        PValueMode::Exact => n <= 63,
        PValueMode::Normal => false,
    };
    let (p_value, method) = if exact {
        (exact_two_sided(&ranks, t2), PValueMethod::Exact)
    } else {
        let mean = total2 as f64 / 4.0;
        let var: f64 = ranks.iter().map(|r| (*r as f64 / 2.0).powi(2)).sum::<f64>() / 4.0;
        let dev = ((statistic - mean).abs() - 0.5).max(0.0);
        let z = dev / var.sqrt();
        (erfc(z / std::f64::consts::SQRT_2).min(1.0), PValueMethod::Normal)
    };
    Ok(WilcoxonResult {
        p_value,
        statistic,
        n_effective: n,
        method,
    })
}

/// `P(|T - E T| >= |t - E T|)` under random signs, where `T` is the doubled
/// positive-rank sum.
fn exact_two_sided(doubled_ranks: &[u64], t2: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2 * t2 as i64 - total as i64).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total as i64).abs() >= observed)
        .map(|(_, c)| *c)
        .sum();
    extreme as f64 / (1u64 << doubled_ranks.len()) as f64
}

/// Wilcoxon test on two reports' per-item scores, paired by item id.
pub fn wilcoxon_reports(
    a: &ScoreReport,
    b: &ScoreReport,
    zero_method: ZeroMethod,
) -> Result<WilcoxonResult, RankingError> {
    if !a.per_item.keys().eq(b.per_item.keys()) {
        return Err(RankingError::Misaligned(format!(
            "{} and {} score different item sets",
            a.system.as_deref().unwrap_or("?"),
            b.system.as_deref().unwrap_or("?")
        )));
    }
    wilcoxon_signed_rank(&a.per_item_values(), &b.per_item_values(), zero_method)
}

/// One team's scored submission on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRun {
    pub team: String,
    pub dataset: String,
    pub task: Option<Task>,
    pub report: ScoreReport,
    /// Filled in from a baseline instead of a real submission.
    #[serde(default)]
    pub substituted: bool,
}

impl SystemRun {
    pub fn new(team: impl Into<String>, dataset: impl Into<String>, report: ScoreReport) -> Self {
        SystemRun {
            team: team.into(),
            dataset: dataset.into(),
            task: report.task,
            report,
            substituted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub team: String,
    pub aggregate: f64,
    pub cluster_id: usize,
    pub rank: usize,
    /// p-value of the test against the head of the cluster it was compared with.
    pub p_vs_head: Option<f64>,
    #[serde(default)]
    pub substituted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub dataset: String,
    pub task: Option<Task>,
    pub metric: String,
    pub alpha: f64,
    pub zero_method: ZeroMethod,
    pub entries: Vec<LeaderboardEntry>,
}

impl Leaderboard {
    pub fn entry(&self, team: &str) -> Option<&LeaderboardEntry> {
        self.entries.iter().find(|e| e.team == team)
    }

    pub fn to_text(&self) -> String {
        let team_w = self
            .entries
            .iter()
            .map(|e| e.team.len())
            .chain([4])
            .max()
            .unwrap_or(4);
        let mut out = String::new();
        let task = self.task.map(|t| format!(" task {t}")).unwrap_or_default();
        let _ = writeln!(out, "{}{task} ({}, alpha={})", self.dataset, self.metric, self.alpha);
        let _ = writeln!(out, "{:>4}  {:<team_w$}  {:>8}", "rank", "team", self.metric);
        for e in &self.entries {
            let mark = if e.substituted { " *" } else { "" };
            let _ = writeln!(out, "{:>4}  {:<team_w$}  {:>8.3}{mark}", e.rank, e.team, e.aggregate);
        }
        out
    }
}

/// Greedy tie clustering over runs on one dataset (see module docs).
pub fn cluster_ties(
    runs: &[SystemRun],
    alpha: f64,
    zero_method: ZeroMethod,
) -> Result<Leaderboard, RankingError> {
    let first = runs.first().ok_or(RankingError::Empty)?;
    let mut teams = BTreeSet::new();
    for r in runs {
        if !teams.insert(r.team.as_str()) {
            return Err(RankingError::DuplicateTeam(r.team.clone()));
        }
        if !r.report.per_item.keys().eq(first.report.per_item.keys()) {
            return Err(RankingError::Misaligned(format!(
                "{} and {} score different item sets on {}",
                first.team, r.team, first.dataset
            )));
        }
    }
    let mut sorted: Vec<&SystemRun> = runs.iter().collect();
    sorted.sort_by(|a, b| {
        a.report
            .aggregate
            .total_cmp(&b.report.aggregate)
            .then_with(|| a.team.cmp(&b.team))
    });

    let mut entries: Vec<LeaderboardEntry> = Vec::with_capacity(sorted.len());
    let mut head = 0usize;
    for (i, run) in sorted.iter().enumerate() {
        let (cluster_id, rank, p) = if i == 0 {
            (1, 1, None)
        } else {
            let test = wilcoxon_reports(&run.report, &sorted[head].report, zero_method)?;
            let prev = &entries[i - 1];
            if test.p_value > alpha {
                (prev.cluster_id, prev.rank, Some(test.p_value))
            } else {
                head = i;
                (prev.cluster_id + 1, i + 1, Some(test.p_value))
            }
        };
        entries.push(LeaderboardEntry {
            team: run.team.clone(),
            aggregate: run.report.aggregate,
            cluster_id,
            rank,
            p_vs_head: p,
            substituted: run.substituted,
        });
    }
    Ok(Leaderboard {
        dataset: first.dataset.clone(),
        task: first.task,
        metric: first.report.metric.clone(),
        alpha,
        zero_method,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRank {
    pub rank: usize,
    /// `None` when the rank was taken from the substitution baseline.
    pub aggregate: Option<f64>,
    pub substituted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallEntry {
    pub team: String,
    pub ranks: BTreeMap<String, DatasetRank>,
    pub av_pos: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallLeaderboard {
    pub datasets: Vec<String>,
    pub substitution_baseline: String,
    pub entries: Vec<OverallEntry>,
}

impl OverallLeaderboard {
    pub fn entry(&self, team: &str) -> Option<&OverallEntry> {
        self.entries.iter().find(|e| e.team == team)
    }

    pub fn to_text(&self) -> String {
        let team_w = self
            .entries
            .iter()
            .map(|e| e.team.len())
            .chain([4])
            .max()
            .unwrap_or(4);
        let mut out = String::new();
        let _ = write!(out, "{:>4}  {:>8}  {:<team_w$}", "rank", "(av.pos)", "team");
        for d in &self.datasets {
            let _ = write!(out, "  {:>13}", d);
        }
        out.push('\n');
        for e in &self.entries {
            let _ = write!(out, "{:>4}  {:>8}  {:<team_w$}", e.rank, format!("({})", fmt_pos(e.av_pos)), e.team);
            for d in &self.datasets {
                let r = &e.ranks[d];
                let score = match r.aggregate {
                    Some(a) if !r.substituted => format!("{a:.3}"),
                    _ => "BSL".to_string(),
                };
                let _ = write!(out, "  {:>7} {:>5}", score, format!("({})", r.rank));
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_pos(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Orders teams by their mean rank over all datasets. A team absent from a
/// dataset takes the rank of `substitution_baseline` there. Teams with equal
/// mean rank share the smallest overall rank.
pub fn cross_dataset_leaderboard(
    per_dataset: &BTreeMap<String, Leaderboard>,
    substitution_baseline: &str,
) -> Result<OverallLeaderboard, RankingError> {
    if per_dataset.is_empty() {
        return Err(RankingError::Empty);
    }
    let teams: BTreeSet<&str> = per_dataset
        .values()
        .flat_map(|lb| lb.entries.iter().map(|e| e.team.as_str()))
        .collect();
    let mut rows: Vec<(u64, OverallEntry)> = Vec::with_capacity(teams.len());
    for team in teams {
        let mut ranks = BTreeMap::new();
        let mut sum = 0u64;
        for (dataset, lb) in per_dataset {
            let cell = match lb.entry(team) {
                Some(e) => DatasetRank {
                    rank: e.rank,
                    aggregate: Some(e.aggregate),
                    substituted: e.substituted,
                },
                None => {
                    let bsl = lb.entry(substitution_baseline).ok_or_else(|| RankingError::MissingSubstitute {
                        dataset: dataset.clone(),
                        team: team.to_string(),
                        baseline: substitution_baseline.to_string(),
                    })?;
                    DatasetRank {
                        rank: bsl.rank,
                        aggregate: None,
                        substituted: true,
                    }
                }
            };
            sum += cell.rank as u64;
            ranks.insert(dataset.clone(), cell);
        }
        rows.push((
            sum,
            OverallEntry {
                team: team.to_string(),
                ranks,
                av_pos: sum as f64 / per_dataset.len() as f64,
                rank: 0,
            },
        ));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.team.cmp(&b.1.team)));
    let mut entries = Vec::with_capacity(rows.len());
    for i in 0..rows.len() {
        let rank = if i > 0 && rows[i].0 == rows[i - 1].0 {
            entries.last().map(|e: &OverallEntry| e.rank).unwrap_or(1)
        } else {
            i + 1
        };
        let mut e = rows[i].1.clone();
        e.rank = rank;
        entries.push(e);
    }
    Ok(OverallLeaderboard {
        datasets: per_dataset.keys().cloned().collect(),
        substitution_baseline: substitution_baseline.to_string(),
        entries,
    })
}
