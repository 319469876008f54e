//! File-level scoring of weakness-detection tools against labeled reports.
//!
//! A tool scores a hit on (SWC, file) when some successful run of that tool
//! reported that SWC in that labeled vulnerable file; line numbers play no
//! role. The Union column is the size of the set union of the per-tool hit
//! file sets, so for every row: max(per-tool) <= union <= sum(per-tool).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::swc::{AnalysisReport, SwcId};

/// Terminal state of one detector invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Timeout,
    Crash,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Timeout => "timeout",
            RunStatus::Crash => "crash",
        }
    }
}

/// One normalized finding: an SWC id attached to a file, line optional.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub swc: SwcId,
    pub file: String,
    pub line: Option<u32>,
}

/// The outcome of running one tool on one target.
#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub tool: String,
    pub target: String,
    pub status: RunStatus,
    pub wall_time_s: f64,
    /// Empty unless status is `Ok`; partial output of timed-out or crashed
    /// runs is discarded.
    pub findings: Vec<Finding>,
}

/// Maps raw tool labels through an SWC mapping, deduplicating nothing (the
/// scorer dedupes); labels absent from the mapping are returned separately
/// rather than silently dropped.
pub fn apply_swc_mapping(
    raw: &[(String, String, Option<u32>)],
    mapping: &BTreeMap<String, SwcId>,
) -> (Vec<Finding>, Vec<String>) {
    let mut findings = Vec::new();
    let mut unmapped = Vec::new();
    for (label, file, line) in raw {
        match mapping.get(label) {
            Some(swc) => findings.push(Finding {
                swc: *swc,
                file: file.clone(),
                line: *line,
            }),
            None => unmapped.push(label.clone()),
        }
    }
    (findings, unmapped)
}

/// One row of the score table: a single SWC id across every tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreRow {
    pub swc: SwcId,
    /// Number of labeled vulnerable files for this SWC.
    pub all_count: usize,
    /// Hit count per tool; `None` renders as "/" (tool does not claim the
    /// weakness).
    pub per_tool: BTreeMap<String, Option<usize>>,
    /// Size of the union of the per-tool hit file sets.
    pub union_count: usize,
}

impl ScoreRow {
    /// Detection rate as a whole percentage, rounded half-up.
    pub fn detection_rate_percent(&self) -> u32 {
        detection_rate_percent(self.all_count, self.union_count)
    }
}

/// Per-tool successful-analysis summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolSummary {
    pub tool: String,
    pub ok_runs: usize,
    pub total_runs: usize,
}

impl ToolSummary {
    pub fn success_rate_percent(&self) -> u32 {
        detection_rate_percent(self.total_runs, self.ok_runs)
    }
}

/// The full file-level score table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    pub summaries: Vec<ToolSummary>,
    /// Findings that referenced files absent from the labels; they are
    /// excluded from hits (this table does no false-positive accounting).
    pub out_of_scope_findings: usize,
}

/// `round(100 * part / whole)`, half-up, in pure integer arithmetic.
pub fn detection_rate_percent(whole: usize, part: usize) -> u32 {
    if whole == 0 {
        return 0;
    }
    ((100 * part as u64 + whole as u64 / 2) / whole as u64) as u32
}

/// Scores detector runs against labeled reports at file level.
///
/// `tool_support` declares which SWC ids each tool claims to detect; rows
/// mark unclaimed (tool, SWC) cells as unsupported. Every tool present in
/// `tool_support` or in `runs` gets a column.
pub fn score_file_level(
    labels: &[AnalysisReport],
    runs: &[DetectorRun],
    tool_support: &BTreeMap<String, BTreeSet<SwcId>>,
) -> ScoreTable {
    // labeled[swc] = set of vulnerable files carrying that label.
    let mut labeled: BTreeMap<SwcId, BTreeSet<&str>> = BTreeMap::new();
    let mut labeled_files: BTreeSet<&str> = BTreeSet::new();
    for report in labels {
        labeled_files.insert(report.file_path.as_str());
        for finding in &report.findings {
            labeled
                .entry(finding.category)
                .or_default()
                .insert(report.file_path.as_str());
        }
    }

    let mut tools: BTreeSet<String> = tool_support.keys().cloned().collect();
    for run in runs {
        tools.insert(run.tool.clone());
    }

    // hits[(tool, swc)] = set of labeled vulnerable files the tool flagged.
    let mut hits: BTreeMap<(String, SwcId), BTreeSet<&str>> = BTreeMap::new();
    let mut out_of_scope = 0usize;
    let mut totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for run in runs {
        let entry = totals.entry(run.tool.clone()).or_insert((0, 0));
        entry.1 += 1;
        if run.status != RunStatus::Ok {
            continue;
        }
        entry.0 += 1;
        for finding in &run.findings {
            let vulnerable = labeled
                .get(&finding.swc)
                .is_some_and(|files| files.contains(finding.file.as_str()));
            if vulnerable {
                hits.entry((run.tool.clone(), finding.swc))
                    .or_default()
                    .insert(finding.file.as_str());
            } else {
                out_of_scope += 1;
            }
        }
    }

    let rows = labeled
        .iter()
        .map(|(swc, files)| {
            let mut per_tool = BTreeMap::new();
            let mut union: BTreeSet<&str> = BTreeSet::new();
            for tool in &tools {
                let supported = tool_support
                    .get(tool)
                    .is_none_or(|claimed| claimed.contains(swc));
                if !supported {
                    per_tool.insert(tool.clone(), None);
                    continue;
                }
                let tool_hits = hits.get(&(tool.clone(), *swc));
                let count = tool_hits.map_or(0, |set| set.len());
                if let Some(set) = tool_hits {
                    union.extend(set.iter().copied());
                }
                per_tool.insert(tool.clone(), Some(count));
            }
            ScoreRow {
                swc: *swc,
                all_count: files.len(),
                per_tool,
                union_count: union.len(),
            }
        })
        .collect();

    let summaries = tools
        .iter()
        .map(|tool| {
            let (ok_runs, total_runs) = totals.get(tool).copied().unwrap_or((0, 0));
            ToolSummary {
                tool: tool.clone(),
                ok_runs,
                total_runs,
            }
        })
        .collect();

    ScoreTable {
        rows,
        summaries,
        out_of_scope_findings: out_of_scope,
    }
}
