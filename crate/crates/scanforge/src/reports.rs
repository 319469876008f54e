//! Reading, validating, serializing, and summarizing SWC analysis reports.
//!
//! Report schema (exact keys): `filePath` (string) and `SWCs` (array of
//! objects with `category`, `function`, `lineNumber`). `lineNumber` may be a
//! single integer or an array; a scalar is lifted to a one-element list.
//! `function` is `"N/A"` for file-scoped weaknesses.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use scanforge_core::swc::{
    corpus_stats, AnalysisReport, CorpusStats, FunctionRef, ProjectSummary, SwcFinding, SwcId,
};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::project::{build_graph, project_series, scan_project, ScanOptions};
use crate::util::walk_sorted;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("document is not a JSON object")]
    NotAnObject,
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}` has the wrong type: expected {expected}")]
    WrongType {
        key: &'static str,
        expected: &'static str,
    },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid SWC category: {0}")]
    Category(String),
    #[error("line numbers must be positive integers")]
    BadLineNumber,
    #[error("invalid report: {0}")]
    Invariant(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

const REPORT_KEYS: [&str; 2] = ["filePath", "SWCs"];
const FINDING_KEYS: [&str; 3] = ["category", "function", "lineNumber"];

/// Parses one analysis report document. Strict mode rejects unknown keys;
/// lenient mode ignores them with a warning. A missing `function` is treated
/// as the N/A marker (with a warning).
pub fn parse_report(
    text: &str,
    strict: bool,
) -> Result<(AnalysisReport, Vec<String>), ReportError> {
    let document: Value = serde_json::from_str(text)?;
    parse_report_value(&document, strict)
}

pub fn parse_report_value(
    document: &Value,
    strict: bool,
) -> Result<(AnalysisReport, Vec<String>), ReportError> {
    let object = document.as_object().ok_or(ReportError::NotAnObject)?;
    let mut warnings = Vec::new();
    for key in object.keys() {
        if !REPORT_KEYS.contains(&key.as_str()) {
            if strict {
                return Err(ReportError::UnknownKey(key.clone()));
            }
            warnings.push(format!("ignoring unknown key `{key}`"));
        }
    }
    let file_path = object
        .get("filePath")
        .ok_or(ReportError::MissingKey("filePath"))?
        .as_str()
        .ok_or(ReportError::WrongType {
            key: "filePath",
            expected: "string",
        })?
        .to_string();
    let swcs = object
        .get("SWCs")
        .ok_or(ReportError::MissingKey("SWCs"))?
        .as_array()
        .ok_or(ReportError::WrongType {
            key: "SWCs",
            expected: "array",
        })?;

    let mut findings = Vec::with_capacity(swcs.len());
    for entry in swcs {
        let finding = entry.as_object().ok_or(ReportError::WrongType {
            key: "SWCs",
            expected: "array of objects",
        })?;
        for key in finding.keys() {
            if !FINDING_KEYS.contains(&key.as_str()) {
                if strict {
                    return Err(ReportError::UnknownKey(key.clone()));
                }
                warnings.push(format!("ignoring unknown finding key `{key}`"));
            }
        }
        let category_text = finding
            .get("category")
            .ok_or(ReportError::MissingKey("category"))?
            .as_str()
            .ok_or(ReportError::WrongType {
                key: "category",
                expected: "string",
            })?;
        let category = SwcId::parse(category_text, !strict)
            .map_err(|err| ReportError::Category(err.to_string()))?;
        let function = match finding.get("function") {
            None => {
                warnings.push(format!(
                    "finding {category_text} in `{file_path}` has no `function`; treated as N/A"
                ));
                FunctionRef::NotApplicable
            }
            Some(Value::String(name)) if name == "N/A" => FunctionRef::NotApplicable,
            Some(Value::String(name)) => FunctionRef::Named(name.clone()),
            Some(_) => {
                return Err(ReportError::WrongType {
                    key: "function",
                    expected: "string",
                })
            }
        };
        let line_numbers = match finding.get("lineNumber") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Number(n)) => vec![as_positive_u32(n)?],
            Some(Value::Array(items)) => items
                .iter()
                .map(|item| match item {
                    Value::Number(n) => as_positive_u32(n),
                    _ => Err(ReportError::BadLineNumber),
                })
                .collect::<Result<Vec<u32>, _>>()?,
            Some(_) => {
                return Err(ReportError::WrongType {
                    key: "lineNumber",
                    expected: "integer or array of integers",
                })
            }
        };
        findings.push(SwcFinding {
            category,
            function,
            line_numbers,
        });
    }

    let report = AnalysisReport {
        file_path,
        findings,
    };
    report
        .validate()
        .map_err(|err| ReportError::Invariant(err.to_string()))?;
    Ok((report, warnings))
}

fn as_positive_u32(n: &serde_json::Number) -> Result<u32, ReportError> {
    n.as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .filter(|v| *v > 0)
        .ok_or(ReportError::BadLineNumber)
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    #[serde(rename = "filePath")]
    file_path: &'a str,
    #[serde(rename = "SWCs")]
    swcs: Vec<FindingDoc<'a>>,
}

#[derive(Serialize)]
struct FindingDoc<'a> {
    category: String,
    function: &'a str,
    #[serde(rename = "lineNumber")]
    line_number: &'a [u32],
}

/// Serializes a report with deterministic key order;
/// `parse_report(serialize_report(r))` reproduces `r` exactly.
pub fn serialize_report(report: &AnalysisReport) -> String {
    let doc = ReportDoc {
        file_path: &report.file_path,
        swcs: report
            .findings
            .iter()
            .map(|f| FindingDoc {
                category: f.category.to_string(),
                function: f.function.as_str(),
                line_number: &f.line_numbers,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

/// Outcome of loading one report file.
#[derive(Debug)]
pub struct LoadedReport {
    pub path: PathBuf,
    pub result: Result<(AnalysisReport, Vec<String>), ReportError>,
}

/// Parses every `.json` file under `dir`, in sorted order.
pub fn load_reports_dir(dir: &Path, strict: bool) -> std::io::Result<Vec<LoadedReport>> {
    let mut loaded = Vec::new();
    for path in walk_sorted(dir, &|name| name.starts_with('.'))? {
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let result = fs::read_to_string(&path)
            .map_err(ReportError::from)
            .and_then(|text| parse_report(&text, strict));
        loaded.push(LoadedReport { path, result });
    }
    Ok(loaded)
}

/// Corpus statistics plus the warnings produced while collecting them.
pub struct CorpusOutcome {
    pub stats: CorpusStats,
    pub warnings: Vec<String>,
}

/// Collects corpus statistics from a directory tree: every parseable report
/// JSON feeds the per-SWC counts; projects are the immediate subdirectories
/// containing `.sol` files (or the root itself when it holds sources
/// directly), bucketed by the effective constraint of their largest
/// compilation root.
pub fn collect_corpus(dir: &Path, options: &ScanOptions) -> std::io::Result<CorpusOutcome> {
    let mut warnings = Vec::new();
    let mut reports: Vec<AnalysisReport> = Vec::new();
    for loaded in load_reports_dir(dir, false)? {
        match loaded.result {
            Ok((report, mut report_warnings)) => {
                warnings.append(&mut report_warnings);
                reports.push(report);
            }
            Err(err) => warnings.push(format!("skipping {}: {err}", loaded.path.display())),
        }
    }

    let mut project_dirs: Vec<PathBuf> = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for entry in entries {
        if entry.is_dir() && contains_sol(&entry, options)? {
            project_dirs.push(entry);
        }
    }
    if project_dirs.is_empty() && contains_sol(dir, options)? {
        project_dirs.push(dir.to_path_buf());
    }

    let mut projects: Vec<ProjectSummary> = Vec::new();
    for project_dir in &project_dirs {
        match build_graph(project_dir, options, &[]) {
            Ok(built) => {
                projects.push(ProjectSummary {
                    files: built.scan.files.len() as u64,
                    lines_of_code: built.scan.total_lines(),
                    series: project_series(&built),
                });
            }
            Err(err) => warnings.push(format!("skipping project {}: {err}", project_dir.display())),
        }
    }

    Ok(CorpusOutcome {
        stats: corpus_stats(&reports, &projects),
        warnings,
    })
}

fn contains_sol(dir: &Path, options: &ScanOptions) -> std::io::Result<bool> {
    let scan = scan_project(dir, options).map_err(|err| std::io::Error::other(err.to_string()))?;
    Ok(!scan.files.is_empty())
}

/// JSON shape of the `stats` output.
#[derive(Debug, Serialize)]
pub struct StatsDoc {
    pub per_swc: BTreeMap<String, u64>,
    pub buckets: BTreeMap<String, u64>,
    pub avg_loc: f64,
    pub total_projects: u64,
    pub total_files: u64,
    pub total_findings: u64,
}

impl StatsDoc {
    pub fn from_stats(stats: &CorpusStats) -> StatsDoc {
        StatsDoc {
            per_swc: stats
                .per_swc
                .iter()
                .map(|(id, count)| (format!("SWC-{id}"), *count))
                .collect(),
            buckets: stats
                .buckets
                .iter()
                .map(|(series, count)| (series.to_string(), *count))
                .collect(),
            avg_loc: stats.avg_loc,
            total_projects: stats.total_projects,
            total_files: stats.total_files,
            total_findings: stats.total_findings,
        }
    }
}

/// Per-SWC counts sorted the way the summary tables print them: by count
/// descending, then by id.
fn sorted_counts(stats: &CorpusStats) -> Vec<(u32, u64)> {
    let mut counts: Vec<(u32, u64)> = stats.per_swc.iter().map(|(id, c)| (*id, *c)).collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    counts
}

pub fn render_stats_markdown(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str("# Corpus statistics\n\n");
    out.push_str(&format!(
        "- projects: {}\n- Solidity files: {}\n- findings: {}\n- average LOC per project: {:.2}\n\n",
        stats.total_projects, stats.total_files, stats.total_findings, stats.avg_loc
    ));
    out.push_str("| SWC | Count |\n|---|---|\n");
    for (id, count) in sorted_counts(stats) {
        out.push_str(&format!("| SWC-{id} | {count} |\n"));
    }
    out.push_str("\n| Compiler series | DApps |\n|---|---|\n");
    for (series, count) in &stats.buckets {
        out.push_str(&format!("| {series} | {count} |\n"));
    }
    out
}

pub fn render_stats_csv(stats: &CorpusStats) -> String {
    let mut out = String::from("section,key,value\n");
    for (id, count) in sorted_counts(stats) {
        out.push_str(&format!("swc,SWC-{id},{count}\n"));
    }
    for (series, count) in &stats.buckets {
        out.push_str(&format!("bucket,{series},{count}\n"));
    }
    out.push_str(&format!("total,projects,{}\n", stats.total_projects));
    out.push_str(&format!("total,files,{}\n", stats.total_files));
    out.push_str(&format!("total,findings,{}\n", stats.total_findings));
    out.push_str(&format!("avg,loc,{:.2}\n", stats.avg_loc));
    out
}
