//! The `disagree` command line: validate, derive, score, baseline, rank, report.
//!
//! Every command returns an [`Outcome`] instead of printing or exiting, so the
//! binary stays a thin shell and the commands are testable in-process.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::baselines::{most_frequent_label, most_frequent_soft, random_label, random_soft, BaselineKind, Provenance, RandomFamily};
use crate::corpus::{parse_metadata, parse_named_dataset, validate_dataset, Dataset, Split};
use crate::error::{CorpusError, MetricError, RankingError};
use crate::metrics::{Metric, ScoreReport, Task};
use crate::predictions::{gold_soft_predictions, score_predictions, PredictionFile, Predictions};
use crate::ranking::{cluster_ties, cross_dataset_leaderboard, Leaderboard, OverallLeaderboard, SystemRun, ZeroMethod, DEFAULT_ALPHA};
use crate::scheme::LabelScheme;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_COVERAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "disagree", version, about = "Evaluate systems trained on disaggregated annotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset and report every problem found.
    Validate {
        dataset: PathBuf,
        /// Bundled scheme name (csc, mp, par, ven) or a JSON scheme file.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Fail unless the metadata file is readable and covers every annotator.
        #[arg(long)]
        require_metadata: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Write the gold soft labels of a dataset as a Task A prediction file.
    Derive {
        dataset: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        split: Option<Split>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score a prediction file against gold.
    Score {
        gold: PathBuf,
        predictions: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        task: Option<Task>,
        /// Use this metric instead of the official one for (task, scheme).
        #[arg(long)]
        metric: Option<Metric>,
        #[arg(long)]
        split: Option<Split>,
        /// Team or system name recorded in the report.
        #[arg(long)]
        system: Option<String>,
        /// Multiply all values by 100.
        #[arg(long)]
        percent: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate baseline predictions for the items of a target file.
    Baseline {
        #[arg(long, value_parser = clap::value_parser!(BaselineKind))]
        kind: BaselineKind,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        task: Task,
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "simplex")]
        family: RandomFamily,
        /// Restrict the training file to one split.
        #[arg(long)]
        train_split: Option<Split>,
        #[arg(long)]
        target_split: Option<Split>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Rank score reports per dataset and across datasets.
    Rank {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Team whose per-dataset rank fills in for teams missing there.
        #[arg(long, default_value = "random")]
        substitution_baseline: String,
        #[arg(long, default_value = "wilcox")]
        zero_method: ZeroMethod,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Render a score report or rank output.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        percent: bool,
    },
}

/// Exit code plus what would go to stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, message: impl fmt::Display) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Exit code and message of a failed command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure(pub i32, pub String);

pub type CmdResult = Result<String, Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                Outcome::ok(text)
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let result = match cli.command {
        Command::Validate {
            dataset,
            scheme,
            metadata,
            require_metadata,
            format,
        } => {
            return match cmd_validate(&dataset, metadata.as_deref(), &scheme, require_metadata, format) {
                Ok((code, stdout)) => Outcome {
                    code,
                    stdout,
                    stderr: if code == EXIT_OK { String::new() } else { "error: validation failed\n".into() },
                },
                Err(Failure(code, message)) => Outcome::fail(code, message),
            }
        }
        Command::Derive {
            dataset,
            scheme,
            split,
            output,
        } => cmd_derive(&dataset, &scheme, split).and_then(|s| emit(s, output.as_deref())),
        Command::Score {
            gold,
            predictions,
            scheme,
            task,
            metric,
            split,
            system,
            percent,
            format,
            output,
        } => cmd_score(&gold, &predictions, &scheme, ScoreOptions { task, metric, split, system, percent })
            .map(|r| render_report(&r, format))
            .and_then(|s| emit(s, output.as_deref())),
        Command::Baseline {
            kind,
            train,
            target,
            task,
            scheme,
            seed,
            family,
            train_split,
            target_split,
            output,
        } => {
            let opts = BaselineOptions {
                kind,
                task,
                seed,
                family,
                train_split,
                target_split,
            };
            cmd_baseline(&train, &target, &scheme, opts).and_then(|s| emit(s, output.as_deref()))
        }
        Command::Rank {
            reports,
            alpha,
            substitution_baseline,
            zero_method,
            format,
            output,
        } => cmd_rank(&reports, alpha, &substitution_baseline, zero_method)
            .map(|r| match format {
                Format::Json => pretty(&r),
                Format::Text => r.to_text(),
            })
            .and_then(|s| emit(s, output.as_deref())),
        Command::Report { input, format, percent } => cmd_report(&input, format, percent),
    };
    match result {
        Ok(out) => Outcome::ok(out),
        Err(Failure(code, message)) => Outcome::fail(code, message),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure(EXIT_IO, format!("cannot read {}: {e}", path.display())))
}

fn emit(text: String, output: Option<&Path>) -> CmdResult {
    match output {
        None => Ok(text),
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure(EXIT_IO, format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn scheme_arg(arg: &str) -> Result<LabelScheme, Failure> {
    let looks_like_path = arg.contains(std::path::MAIN_SEPARATOR) || arg.contains('/') || arg.contains('.');
    if LabelScheme::bundled(arg).is_none() && !looks_like_path && !Path::new(arg).exists() {
        return Err(Failure(
            EXIT_USAGE,
            format!("unknown scheme {arg:?}; use one of csc, mp, par, ven or a JSON file"),
        ));
    }
    LabelScheme::resolve(arg).map_err(|e| {
        let code = match e {
            crate::error::SchemeError::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure(code, e.to_string())
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn corpus_failure(e: CorpusError) -> Failure {
    match e {
        CorpusError::Invalid(findings) => {
            let mut msg = format!("{} problem(s) in dataset", findings.len());
            for f in &findings {
                msg.push_str(&format!("\n  {f}"));
            }
            Failure(EXIT_VALIDATION, msg)
        }
        other => Failure(EXIT_VALIDATION, other.to_string()),
    }
}

fn load_dataset(path: &Path, scheme: &LabelScheme, split: Option<Split>) -> Result<Dataset, Failure> {
    let bytes = read(path)?;
    let ds = parse_named_dataset(&bytes, scheme, &dataset_name(path)).map_err(corpus_failure)?;
    Ok(match split {
        Some(s) => ds.split(s),
        None => ds,
    })
}

/// Parse and validate; findings are written to stdout as JSON or text.
/// Exit 2 on any structural finding (including anything that stops parsing),
/// or on annotators without metadata when metadata is required.
pub fn cmd_validate(
    dataset: &Path,
    metadata: Option<&Path>,
    scheme: &str,
    require_metadata: bool,
    format: Format,
) -> Result<(i32, String), Failure> {
    let scheme = scheme_arg(scheme)?;
    let bytes = read(dataset)?;
    let (findings, items, missing) = match parse_named_dataset(&bytes, &scheme, &dataset_name(dataset)) {
        Err(CorpusError::Invalid(findings)) => (findings, 0, Vec::new()),
        Err(e) => return Err(Failure(EXIT_VALIDATION, e.to_string())),
        Ok(mut ds) => {
            match metadata {
                Some(path) => {
                    let meta = match fs::read(path) {
                        Ok(b) => b,
                        Err(e) if require_metadata => {
                            return Err(Failure(EXIT_IO, format!("cannot read {}: {e}", path.display())))
                        }
                        Err(_) => Vec::new(),
                    };
                    if !meta.is_empty() {
                        let profiles = parse_metadata(&meta).map_err(|e| Failure(EXIT_VALIDATION, e.to_string()))?;
                        ds.attach_profiles(profiles);
                    }
                }
                None if require_metadata => {
                    return Err(Failure(EXIT_USAGE, "--require-metadata needs --metadata <path>".into()));
                }
                None => {}
            }
            let report = validate_dataset(&ds);
            (report.findings, ds.items.len(), ds.missing_profiles.iter().cloned().collect::<Vec<_>>())
        }
    };
    let structural = findings.iter().filter(|f| f.kind.is_structural()).count();
    let metadata_gap = require_metadata && !missing.is_empty();
    let text = match format {
        Format::Json => pretty(&json!({
            "dataset": dataset_name(dataset),
            "scheme": scheme,
            "items": items,
            "findings": findings,
            "missing_profiles": missing,
        })),
        Format::Text => {
            let mut out = format!("{}: {items} items, {} finding(s)\n", dataset_name(dataset), findings.len());
            for f in &findings {
                out.push_str(&format!("  {:?}: {f}\n", f.kind));
            }
            if !missing.is_empty() {
                out.push_str(&format!("  no metadata for annotators: {}\n", missing.join(", ")));
            }
            out
        }
    };
    let code = if structural > 0 || metadata_gap { EXIT_VALIDATION } else { EXIT_OK };
    Ok((code, text))
}

/// Gold soft labels as a Task A prediction file.
pub fn cmd_derive(dataset: &Path, scheme: &str, split: Option<Split>) -> CmdResult {
    let scheme = scheme_arg(scheme)?;
    let ds = load_dataset(dataset, &scheme, split)?;
    let file = PredictionFile::new(ds.name.clone(), scheme, Predictions::A(gold_soft_predictions(&ds)));
    Ok(file.to_ndjson())
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    pub task: Option<Task>,
    pub metric: Option<Metric>,
    pub split: Option<Split>,
    pub system: Option<String>,
    pub percent: bool,
}

pub fn cmd_score(gold: &Path, predictions: &Path, scheme: &str, opts: ScoreOptions) -> Result<ScoreReport, Failure> {
    let scheme = scheme_arg(scheme)?;
    let ds = load_dataset(gold, &scheme, opts.split)?;
    let file = PredictionFile::parse(&read(predictions)?, Some(&scheme)).map_err(|e| Failure(EXIT_VALIDATION, e.to_string()))?;
    let task = file.header.task;
    if let Some(t) = opts.task {
        if t != task {
            return Err(Failure(
                EXIT_VALIDATION,
                format!("--task {t} but {} holds task {task} predictions", predictions.display()),
            ));
        }
    }
    let metric = opts.metric.unwrap_or_else(|| Metric::official(task, &scheme));
    let mut report = score_predictions(&ds, &file.predictions, metric).map_err(|e| match e {
        MetricError::Coverage { .. } | MetricError::AnnotatorMisalignment { .. } => Failure(EXIT_COVERAGE, e.to_string()),
        other => Failure(EXIT_VALIDATION, other.to_string()),
    })?;
    report.metric_override = metric != Metric::official(task, &scheme);
    report.dataset = Some(ds.name.clone());
    report.system = Some(opts.system.unwrap_or_else(|| dataset_name(predictions)));
    Ok(if opts.percent { report.to_percent() } else { report })
}

fn render_report(r: &ScoreReport, format: Format) -> String {
    match format {
        Format::Json => pretty(r),
        Format::Text => report_text(r),
    }
}

fn report_text(r: &ScoreReport) -> String {
    let mut out = format!(
        "{} on {}: {} = {:.4} over {} items",
        r.system.as_deref().unwrap_or("?"),
        r.dataset.as_deref().unwrap_or("?"),
        r.metric,
        r.aggregate,
        r.n
    );
    if r.percent {
        out.push_str(" (x100)");
    }
    if r.metric_override {
        out.push_str(" [metric override]");
    }
    out.push('\n');
    out
}

#[derive(Debug, Clone)]
pub struct BaselineOptions {
    pub kind: BaselineKind,
    pub task: Task,
    pub seed: u64,
    pub family: RandomFamily,
    pub train_split: Option<Split>,
    pub target_split: Option<Split>,
}

pub fn cmd_baseline(train: &Path, target: &Path, scheme: &str, opts: BaselineOptions) -> CmdResult {
    let scheme = scheme_arg(scheme)?;
    let target = load_dataset(target, &scheme, opts.target_split)?;
    let invalid = |e: crate::error::BaselineError| Failure(EXIT_VALIDATION, e.to_string());
    let (predictions, provenance) = match (opts.kind, opts.task) {
        (BaselineKind::MostFrequent, task) => {
            let train = load_dataset(train, &scheme, opts.train_split)?;
            match task {
                Task::A => {
                    let mf = most_frequent_soft(&train).map_err(invalid)?;
                    (Predictions::A(mf.assign(&scheme, &target.items)), mf.provenance())
                }
                Task::B => {
                    let mf = most_frequent_label(&train).map_err(invalid)?;
                    (Predictions::B(mf.assign(&target.items)), mf.provenance())
                }
            }
        }
        (BaselineKind::Random, task) => {
            let predictions = match task {
                Task::A => Predictions::A(random_soft(&scheme, &target.items, opts.seed, opts.family)),
                Task::B => Predictions::B(random_label(&scheme, &target.items, opts.seed)),
            };
            let provenance = Provenance {
                kind: BaselineKind::Random,
                seed: Some(opts.seed),
                family: (task == Task::A).then_some(opts.family),
                tie_breaks: Vec::new(),
            };
            (predictions, provenance)
        }
    };
    Ok(PredictionFile::new(target.name.clone(), scheme, predictions)
        .with_provenance(provenance)
        .to_ndjson())
}

/// Per-dataset leaderboards plus the overall table.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankOutput {
    pub datasets: BTreeMap<String, Leaderboard>,
    pub overall: OverallLeaderboard,
}

impl RankOutput {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for lb in self.datasets.values() {
            out.push_str(&lb.to_text());
            out.push('\n');
        }
        out.push_str(&self.overall.to_text());
        out
    }
}

pub fn cmd_rank(reports: &[PathBuf], alpha: f64, substitution_baseline: &str, zero_method: ZeroMethod) -> Result<RankOutput, Failure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure(EXIT_USAGE, format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut by_dataset: BTreeMap<String, Vec<SystemRun>> = BTreeMap::new();
    for path in reports {
        let report: ScoreReport = serde_json::from_slice(&read(path)?)
            .map_err(|e| Failure(EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
        let dataset = report
            .dataset
            .clone()
            .ok_or_else(|| Failure(EXIT_VALIDATION, format!("{}: report names no dataset", path.display())))?;
        let team = report.system.clone().unwrap_or_else(|| dataset_name(path));
        by_dataset.entry(dataset.clone()).or_default().push(SystemRun::new(team, dataset, report));
    }
    let ranking_failure = |e: RankingError| match e {
        RankingError::Misaligned(_) => Failure(EXIT_COVERAGE, e.to_string()),
        other => Failure(EXIT_VALIDATION, other.to_string()),
    };
    let mut datasets = BTreeMap::new();
    for (name, runs) in &by_dataset {
        datasets.insert(name.clone(), cluster_ties(runs, alpha, zero_method).map_err(ranking_failure)?);
    }
    let overall = cross_dataset_leaderboard(&datasets, substitution_baseline).map_err(ranking_failure)?;
    Ok(RankOutput { datasets, overall })
}

/// Renders a score report or a rank output, whichever the file holds.
pub fn cmd_report(input: &Path, format: Format, percent: bool) -> CmdResult {
    let value: Value = serde_json::from_slice(&read(input)?)
        .map_err(|e| Failure(EXIT_VALIDATION, format!("{}: {e}", input.display())))?;
    let bad = |e: serde_json::Error| Failure(EXIT_VALIDATION, format!("{}: {e}", input.display()));
    if value.get("overall").is_some() {
        let r: RankOutput = serde_json::from_value(value).map_err(bad)?;
        return Ok(match format {
            Format::Json => pretty(&r),
            Format::Text => r.to_text(),
        });
    }
    let mut r: ScoreReport = serde_json::from_value(value).map_err(bad)?;
    if percent {
        r = r.to_percent();
    }
    Ok(render_report(&r, format))
}
