//! Command-line front end: ingest, summarize, serialize, report.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use crate::evaluation::{build_report, QueryErrorReport, ReportOptions, DEFAULT_ORACLE_LIMIT};
use crate::io::{format_summary, read_edge_list};
use crate::summarizer::{RunStats, SampleRule, ScoreMode, Summarizer, SummarizerConfig};
use crate::summary_graph::SummaryGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreKind {
    Exact,
    Sketch,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "graphsum", version, about = "Lossy graph summarization by greedy supernode merging")]
pub struct Args {
    /// Whitespace-separated edge list, `#` lines are comments.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of supernodes to stop at.
    #[arg(long)]
    pub k: usize,
    /// Candidate sample size per step: logn, 5logn, log2n or fixed:N.
    #[arg(long, default_value = "logn")]
    pub sample: SampleRule,
    #[arg(long, value_enum, default_value_t = ScoreKind::Exact)]
    pub score: ScoreKind,
    /// Sketch width (sketch scoring only).
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    /// Sketch depth (sketch scoring only).
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Track vertex membership; enables query errors and member lists.
    #[arg(long)]
    pub retain_members: bool,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Largest vertex count for which the brute-force error check runs.
    #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
    pub oracle_limit: usize,
}

/// Everything that determines a run. Echoed into every report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub input_path: PathBuf,
    pub k: usize,
    pub sample_rule: SampleRule,
    pub score_mode: ScoreMode,
    pub seed: u64,
    pub retain_members: bool,
    pub oracle_limit: usize,
    pub report_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl From<Args> for RunManifest {
    fn from(a: Args) -> Self {
        RunManifest {
            input_path: a.input,
            k: a.k,
            sample_rule: a.sample,
            score_mode: match a.score {
                ScoreKind::Exact => ScoreMode::Exact,
                ScoreKind::Sketch => ScoreMode::Sketch {
                    width: a.width,
                    depth: a.depth,
                },
            },
            seed: a.seed,
            retain_members: a.retain_members,
            oracle_limit: a.oracle_limit,
            report_path: a.report,
            summary_path: a.summary_out,
        }
    }
}

impl RunManifest {
    pub fn config(&self) -> SummarizerConfig {
        SummarizerConfig::new(self.k)
            .with_sample_rule(self.sample_rule)
            .with_score_mode(self.score_mode)
            .with_seed(self.seed)
    }

    fn key_values(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let mut kv = vec![
            ("input", self.input_path.display().to_string()),
            ("k", self.k.to_string()),
            ("sample", self.sample_rule.to_string()),
        ];
        match self.score_mode {
            ScoreMode::Exact => kv.push(("score", "exact".into())),
            ScoreMode::Sketch { width, depth } => {
                kv.push(("score", "sketch".into()));
                kv.push(("width", width.to_string()));
                kv.push(("depth", depth.to_string()));
            }
        }
        kv.push(("seed", self.seed.to_string()));
        kv.push(("retain_members", self.retain_members.to_string()));
        kv.push(("oracle_limit", self.oracle_limit.to_string()));
        kv.push(("report", path(&self.report_path)));
        kv.push(("summary_out", path(&self.summary_path)));
        kv
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: SummaryGraph,
    pub summary_text: String,
    pub report: QueryErrorReport,
    pub report_text: String,
    pub stats: RunStats,
}

/// Runs the whole pipeline and writes any requested output files.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome> {
    let edges = read_edge_list(&manifest.input_path)?;
    let original = SummaryGraph::from_edges(&edges, manifest.retain_members)?;
    let n = original.vertex_count();
    if manifest.k == 0 || manifest.k > n {
        return Err(Error::InvalidConfig(format!(
            "k = {} must lie in 1..={n}",
            manifest.k
        )));
    }

    let start = Instant::now();
    let mut summarizer = Summarizer::new(original.clone(), manifest.config())?;
    let stats = summarizer.run()?;
    let elapsed_seconds = start.elapsed().as_secs_f64();
    let summary = summarizer.into_graph();

    let report = build_report(
        &original,
        &summary,
        &ReportOptions {
            oracle_limit: manifest.oracle_limit,
            exact_triangles: None,
            elapsed_seconds,
        },
    )?;
    let report_text = render_report(manifest, &summary, &report, &stats);
    let summary_text = format_summary(&summary);
    if let Some(path) = &manifest.summary_path {
        std::fs::write(path, &summary_text)?;
    }
    if let Some(path) = &manifest.report_path {
        std::fs::write(path, &report_text)?;
    }
    Ok(RunOutcome {
        summary,
        summary_text,
        report,
        report_text,
        stats,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or("-".to_string(), |v| v.to_string())
}

/// Human-readable table followed by `key=value` lines.
pub fn render_report(
    manifest: &RunManifest,
    summary: &SummaryGraph,
    report: &QueryErrorReport,
    stats: &RunStats,
) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        ("vertices", summary.vertex_count().to_string()),
        ("edges", summary.edge_count().to_string()),
        ("supernodes", summary.alive_count().to_string()),
        ("superedges", summary.superedge_count().to_string()),
        ("merges", stats.merges.to_string()),
        ("re_l1", report.re_l1.to_string()),
        ("re_l1_normalized", report.re_l1_normalized.to_string()),
        ("re_l2_squared", report.re_l2_squared.to_string()),
        ("re_brute", opt(report.re_brute)),
    ];
    if summary.retains_members() {
        rows.extend([
            ("degree_err_avg", opt(report.degree_err_avg)),
            ("degree_err_std", opt(report.degree_err_std)),
            ("centrality_err_avg", opt(report.centrality_err_avg)),
            ("centrality_err_std", opt(report.centrality_err_std)),
            ("triangles_exact", opt(report.triangles_exact)),
            ("triangles_estimate", report.triangles_estimate.to_string()),
            ("triangle_relative_err", opt(report.triangle_relative_err)),
        ]);
    }
    rows.push(("elapsed_seconds", report.elapsed_seconds.to_string()));

    let mut out = String::new();
    let manifest_kv = manifest.key_values();
    let width = rows
        .iter()
        .map(|(k, _)| k.len())
        .chain(manifest_kv.iter().map(|(k, _)| k.len()))
        .max()
        .unwrap_or(0);
    out.push_str("graphsum report\n");
    for (k, v) in &manifest_kv {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    out.push('\n');
    for (k, v) in &rows {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    out.push('\n');
    for (k, v) in &rows {
        let _ = writeln!(out, "{k}={v}");
    }
    for (k, v) in &manifest_kv {
        let _ = writeln!(out, "manifest.{k}={v}");
    }
    out
}

/// Looks up a `key=value` line in rendered report text.
pub fn report_value<'a>(report_text: &'a str, key: &str) -> Option<&'a str> {
    report_text
        .lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}
