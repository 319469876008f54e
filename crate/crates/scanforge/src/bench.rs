//! Running external weakness detectors under a time budget and scoring
//! their findings against labeled reports.
//!
//! Adapters describe how to invoke a tool (a command template with
//! `{source}` / `{bytecode}` / `{abi}` placeholders), how to parse its
//! output, and how its labels map to SWC ids. Each run executes in an
//! isolated scratch directory and is killed — process group and all — when
//! the budget expires; timed-out and crashed runs contribute no findings.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use scanforge_core::score::{score_file_level, DetectorRun, Finding, RunStatus, ScoreTable};
use scanforge_core::swc::SwcId;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::reports::load_reports_dir;
use crate::util::walk_sorted;

/// Default per-target execution budget, in seconds.
pub const DEFAULT_BUDGET_S: u64 = 300;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("adapter config: {0}")]
    Config(String),
    #[error("cannot launch `{command}`: {message}")]
    Launch { command: String, message: String },
    #[error("invalid JSON in {path}: {message}")]
    BadJson { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// How an adapter's stdout is parsed into findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputParser {
    /// One finding per line: `label [file [line]]`, whitespace separated.
    Lines,
    /// A JSON array (or `{"findings": [...]}`) of objects with a
    /// `label`/`check`/`type` key and optional `file`/`path` and `line`.
    Json,
}

/// Configuration of one detector adapter.
#[derive(Debug, Clone)]
pub struct Adapter {
    pub tool_name: String,
    pub command: Vec<String>,
    pub parser: OutputParser,
    pub swc_mapping: BTreeMap<String, SwcId>,
    pub budget_s: u64,
}

impl Adapter {
    /// The SWC ids this tool claims to detect.
    pub fn supported(&self) -> BTreeSet<SwcId> {
        self.swc_mapping.values().copied().collect()
    }
}

#[derive(Debug, Deserialize)]
struct AdapterDoc {
    tool_name: String,
    command: Vec<String>,
    parser: OutputParser,
    #[serde(default)]
    swc_mapping: BTreeMap<String, Value>,
    budget_s: Option<u64>,
}

const PLACEHOLDERS: [&str; 3] = ["{source}", "{bytecode}", "{abi}"];

/// Loads and validates an adapter config file (a JSON array of adapters).
pub fn load_adapters(path: &Path) -> Result<Vec<Adapter>, BenchError> {
    let text = fs::read_to_string(path)?;
    let docs: Vec<AdapterDoc> = serde_json::from_str(&text).map_err(|err| BenchError::BadJson {
        path: path.display().to_string(),
        message: err.to_string(),
    })?;
    let mut adapters = Vec::with_capacity(docs.len());
    for doc in docs {
        if doc.command.is_empty() {
            return Err(BenchError::Config(format!(
                "adapter `{}` has an empty command",
                doc.tool_name
            )));
        }
        let has_placeholder = doc
            .command
            .iter()
            .any(|arg| PLACEHOLDERS.iter().any(|p| arg.contains(p)));
        if !has_placeholder {
            return Err(BenchError::Config(format!(
                "adapter `{}` command contains no {{source}}/{{bytecode}}/{{abi}} placeholder",
                doc.tool_name
            )));
        }
        let mut mapping = BTreeMap::new();
        for (label, value) in doc.swc_mapping {
            let id = match &value {
                Value::String(s) => SwcId::parse(s, true),
                Value::Number(n) => n
                    .as_u64()
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| scanforge_core::swc::SwcIdError::BadFormat(value.to_string()))
                    .and_then(SwcId::new),
                other => Err(scanforge_core::swc::SwcIdError::BadFormat(
                    other.to_string(),
                )),
            }
            .map_err(|err| {
                BenchError::Config(format!(
                    "adapter `{}` maps `{label}` to an invalid SWC id: {err}",
                    doc.tool_name
                ))
            })?;
            mapping.insert(label, id);
        }
        adapters.push(Adapter {
            tool_name: doc.tool_name,
            command: doc.command,
            parser: doc.parser,
            swc_mapping: mapping,
            budget_s: doc.budget_s.unwrap_or(DEFAULT_BUDGET_S),
        });
    }
    Ok(adapters)
}

fn expand_template(arg: &str, target: &Path) -> String {
    arg.replace("{source}", &target.display().to_string())
        .replace(
            "{bytecode}",
            &target.with_extension("bin").display().to_string(),
        )
        .replace("{abi}", &target.with_extension("abi").display().to_string())
}

/// Persisted record of one (tool, target) run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub tool_name: String,
    pub target: String,
    pub status: String,
    pub wall_time_s: f64,
    pub findings: Vec<FindingRecord>,
    /// Labels the tool emitted that the adapter mapping does not cover.
    pub unmapped_labels: Vec<String>,
    /// SWC ids the adapter claims; drives the "/" markers when scoring.
    pub supported: Vec<String>,
    pub budget_s: u64,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FindingRecord {
    pub swc: String,
    pub file: String,
    pub line: Option<u32>,
}

/// Runs one adapter on one target, enforcing the budget with a hard kill of
/// the whole process group. Partial output of timed-out runs is discarded.
pub fn run_detector(
    adapter: &Adapter,
    target: &Path,
    budget_s: Option<u64>,
) -> Result<RunRecord, BenchError> {
    let budget = Duration::from_secs(budget_s.unwrap_or(adapter.budget_s));
    let scratch = tempfile::tempdir()?;
    let argv: Vec<String> = adapter
        .command
        .iter()
        .map(|arg| expand_template(arg, target))
        .collect();

    let mut command = Command::new(&argv[0]);
    command
        .args(&argv[1..])
        .current_dir(scratch.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    crate::util::isolate_process_group(&mut command);
    let started = Instant::now();
    let mut child = command.spawn().map_err(|err| BenchError::Launch {
        command: argv[0].clone(),
        message: err.to_string(),
    })?;

    let mut stdout_pipe = child.stdout.take().expect("piped stdout");
    let stdout_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let mut stderr_pipe = child.stderr.take().expect("piped stderr");
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = started + budget;
    let mut record = RunRecord {
        tool_name: adapter.tool_name.clone(),
        target: target.display().to_string(),
        status: "ok".to_string(),
        wall_time_s: 0.0,
        findings: Vec::new(),
        unmapped_labels: Vec::new(),
        supported: adapter
            .supported()
            .iter()
            .map(|id| id.to_string())
            .collect(),
        budget_s: budget.as_secs(),
        detail: String::new(),
    };

    let exit = loop {
        match child.try_wait()? {
            Some(status) => break Some(status),
            None => {
                if Instant::now() >= deadline {
                    crate::util::kill_process_tree(&mut child);
                    let _ = child.wait();
                    break None;
                }
                std::thread::sleep(Duration::from_millis(25));
            }
        }
    };
    let stdout = stdout_reader.join().unwrap_or_default();
    let stderr = stderr_reader.join().unwrap_or_default();
    record.wall_time_s = started.elapsed().as_secs_f64();

    let Some(exit) = exit else {
        record.status = "timeout".to_string();
        record.wall_time_s = record.wall_time_s.max(budget.as_secs_f64());
        record.detail = format!("killed after {}s budget", budget.as_secs());
        return Ok(record);
    };
    if !exit.success() {
        record.status = "crash".to_string();
        record.detail = truncate(stderr.trim(), 400);
        return Ok(record);
    }

    match parse_output(adapter.parser, &stdout, &record.target) {
        Ok(raw) => {
            for (label, file, line) in raw {
                match adapter.swc_mapping.get(&label) {
                    Some(id) => record.findings.push(FindingRecord {
                        swc: id.to_string(),
                        file,
                        line,
                    }),
                    None => record.unmapped_labels.push(label),
                }
            }
        }
        Err(message) => {
            // Exit 0 with unparseable output counts as a crash.
            record.status = "crash".to_string();
            record.findings.clear();
            record.detail = message;
        }
    }
    Ok(record)
}

fn truncate(text: &str, limit: usize) -> String {
    if text.len() <= limit {
        text.to_string()
    } else {
        format!("{}...", &text[..limit])
    }
}

fn parse_output(
    parser: OutputParser,
    stdout: &str,
    target: &str,
) -> Result<Vec<(String, String, Option<u32>)>, String> {
    match parser {
        OutputParser::Lines => {
            let mut findings = Vec::new();
            for line in stdout.lines() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let mut parts = line.split_whitespace();
                let label = parts.next().expect("non-empty line").to_string();
                let file = parts
                    .next()
                    .map(str::to_string)
                    .unwrap_or_else(|| target.to_string());
                let line_no =
                    match parts.next() {
                        None => None,
                        Some(n) => Some(n.parse::<u32>().map_err(|_| {
                            format!("bad line number `{n}` in output line `{line}`")
                        })?),
                    };
                findings.push((label, file, line_no));
            }
            Ok(findings)
        }
        OutputParser::Json => {
            let value: Value = serde_json::from_str(stdout)
                .map_err(|err| format!("unparseable JSON output: {err}"))?;
            let items = match &value {
                Value::Array(items) => items.clone(),
                Value::Object(map) => match map.get("findings") {
                    Some(Value::Array(items)) => items.clone(),
                    _ => return Err("JSON output has no findings array".to_string()),
                },
                _ => return Err("JSON output is neither array nor object".to_string()),
            };
            let mut findings = Vec::new();
            for item in items {
                let Some(object) = item.as_object() else {
                    return Err("finding entry is not an object".to_string());
                };
                let label = ["label", "check", "type"]
                    .iter()
                    .find_map(|k| object.get(*k).and_then(Value::as_str))
                    .ok_or_else(|| "finding entry has no label/check/type".to_string())?
                    .to_string();
                let file = ["file", "path"]
                    .iter()
                    .find_map(|k| object.get(*k).and_then(Value::as_str))
                    .map(str::to_string)
                    .unwrap_or_else(|| target.to_string());
                let line = object
                    .get("line")
                    .and_then(Value::as_u64)
                    .and_then(|n| u32::try_from(n).ok());
                findings.push((label, file, line));
            }
            Ok(findings)
        }
    }
}

fn sanitize(component: &str) -> String {
    component
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Persists one record as `<runs_dir>/<tool>__<target>.json`.
pub fn store_run(runs_dir: &Path, record: &RunRecord) -> std::io::Result<PathBuf> {
    fs::create_dir_all(runs_dir)?;
    let name = format!(
        "{}__{}.json",
        sanitize(&record.tool_name),
        sanitize(&record.target)
    );
    let path = runs_dir.join(name);
    let mut text = serde_json::to_string_pretty(record).expect("serializable");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Loads every run record under `runs_dir`.
pub fn load_runs(runs_dir: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let mut records = Vec::new();
    for path in walk_sorted(runs_dir, &|name| name.starts_with('.'))? {
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|err| BenchError::BadJson {
            path: path.display().to_string(),
            message: err.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

fn to_core_run(record: &RunRecord) -> DetectorRun {
    let status = match record.status.as_str() {
        "ok" => RunStatus::Ok,
        "timeout" => RunStatus::Timeout,
        _ => RunStatus::Crash,
    };
    DetectorRun {
        tool: record.tool_name.clone(),
        target: record.target.clone(),
        status,
        wall_time_s: record.wall_time_s,
        findings: record
            .findings
            .iter()
            .filter_map(|f| {
                SwcId::parse(&f.swc, true).ok().map(|swc| Finding {
                    swc,
                    file: f.file.clone(),
                    line: f.line,
                })
            })
            .collect(),
    }
}

/// Scores stored run records against a labels directory.
pub fn score_runs(
    labels_dir: &Path,
    runs_dir: &Path,
) -> Result<(ScoreTable, Vec<String>), BenchError> {
    let mut warnings = Vec::new();
    let mut labels = Vec::new();
    for loaded in load_reports_dir(labels_dir, false)? {
        match loaded.result {
            Ok((report, _)) => labels.push(report),
            Err(err) => warnings.push(format!("skipping label {}: {err}", loaded.path.display())),
        }
    }
    let records = load_runs(runs_dir)?;
    let runs: Vec<DetectorRun> = records.iter().map(to_core_run).collect();
    let mut support: BTreeMap<String, BTreeSet<SwcId>> = BTreeMap::new();
    for record in &records {
        let entry = support.entry(record.tool_name.clone()).or_default();
        for id in &record.supported {
            if let Ok(id) = SwcId::parse(id, true) {
                entry.insert(id);
            }
        }
    }
    Ok((score_file_level(&labels, &runs, &support), warnings))
}

fn tool_columns(table: &ScoreTable) -> Vec<String> {
    table.summaries.iter().map(|s| s.tool.clone()).collect()
}

/// Markdown rendering: the per-SWC table with "/" markers and the Union
/// column, per-tool successful-analysis counts, and per-SWC detection rates.
pub fn render_table_markdown(table: &ScoreTable) -> String {
    let tools = tool_columns(table);
    let mut out = String::from("# File-level detection results\n\n");
    out.push_str("| ID | All |");
    for tool in &tools {
        out.push_str(&format!(" {tool} |"));
    }
    out.push_str(" Union |\n|---|---|");
    for _ in &tools {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    for row in &table.rows {
        out.push_str(&format!("| {} | {} |", row.swc.number(), row.all_count));
        for tool in &tools {
            match row.per_tool.get(tool) {
                Some(Some(count)) => out.push_str(&format!(" {count} |")),
                _ => out.push_str(" / |"),
            }
        }
        out.push_str(&format!(" {} |\n", row.union_count));
    }
    out.push_str("\n## Successful analysis\n\n| Tool | OK | Total | Rate |\n|---|---|---|---|\n");
    for summary in &table.summaries {
        out.push_str(&format!(
            "| {} | {} | {} | {}% |\n",
            summary.tool,
            summary.ok_runs,
            summary.total_runs,
            summary.success_rate_percent()
        ));
    }
    out.push_str("\n## Detection rates\n\n| ID | Rate |\n|---|---|\n");
    for row in &table.rows {
        out.push_str(&format!(
            "| {} | {}% |\n",
            row.swc.number(),
            row.detection_rate_percent()
        ));
    }
    if table.out_of_scope_findings > 0 {
        out.push_str(&format!(
            "\n{} finding(s) referenced files outside the labeled set and were excluded.\n",
            table.out_of_scope_findings
        ));
    }
    out
}

pub fn render_table_csv(table: &ScoreTable) -> String {
    let tools = tool_columns(table);
    let mut out = String::from("id,all");
    for tool in &tools {
        out.push_str(&format!(",{tool}"));
    }
    out.push_str(",union,rate_percent\n");
    for row in &table.rows {
        out.push_str(&format!("{},{}", row.swc.number(), row.all_count));
        for tool in &tools {
            match row.per_tool.get(tool) {
                Some(Some(count)) => out.push_str(&format!(",{count}")),
                _ => out.push_str(",/"),
            }
        }
        out.push_str(&format!(
            ",{},{}\n",
            row.union_count,
            row.detection_rate_percent()
        ));
    }
    out
}

/// JSON document shape of `bench score`.
#[derive(Debug, Serialize)]
pub struct ScoreDoc {
    pub rows: Vec<ScoreRowDoc>,
    pub summaries: Vec<SummaryDoc>,
    pub out_of_scope_findings: usize,
}

#[derive(Debug, Serialize)]
pub struct ScoreRowDoc {
    pub swc: String,
    pub all: usize,
    pub per_tool: BTreeMap<String, Option<usize>>,
    pub union: usize,
    pub rate_percent: u32,
}

#[derive(Debug, Serialize)]
pub struct SummaryDoc {
    pub tool: String,
    pub ok_runs: usize,
    pub total_runs: usize,
    pub rate_percent: u32,
}

impl ScoreDoc {
    pub fn from_table(table: &ScoreTable) -> ScoreDoc {
        ScoreDoc {
            rows: table
                .rows
                .iter()
                .map(|row| ScoreRowDoc {
                    swc: row.swc.to_string(),
                    all: row.all_count,
                    per_tool: row.per_tool.clone(),
                    union: row.union_count,
                    rate_percent: row.detection_rate_percent(),
                })
                .collect(),
            summaries: table
                .summaries
                .iter()
                .map(|s| SummaryDoc {
                    tool: s.tool.clone(),
                    ok_runs: s.ok_runs,
                    total_runs: s.total_runs,
                    rate_percent: s.success_rate_percent(),
                })
                .collect(),
            out_of_scope_findings: table.out_of_scope_findings,
        }
    }
}
