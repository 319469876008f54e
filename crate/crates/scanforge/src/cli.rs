//! Command-line entry point: `graph`, `resolve`, `compile`, `validate`,
//! `stats`, `bench run`, `bench score`.
//!
//! Exit codes: 0 on full success, 1 on domain errors (validation failures,
//! compile failures), 2 on usage errors. With `--format json` every command
//! prints one `{command, status, data, warnings}` document on stdout.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use scanforge_core::version::ConsistencyMode;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bench::{self, ScoreDoc};
use crate::project::{self, GraphDoc, ScanOptions};
use crate::registry::{Registry, RegistryError};
use crate::reports::{self, StatsDoc};
use crate::solc;
use crate::util::parallel_map;

/// Env var consulted when `--solc-dir` is not given.
pub const SOLC_DIR_ENV: &str = "SCANFORGE_SOLC_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "scanforge",
    about = "Turn raw DApp projects into compilable units and score weakness detectors",
    version
)]
struct Cli {
    /// Output format; `json` wraps results in {command, status, data, warnings}.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for compile and bench run.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Md,
    Csv,
}

#[derive(Debug, Args)]
struct IgnoreArgs {
    /// Extra directory names to skip while scanning (repeatable).
    #[arg(long = "ignore")]
    ignore: Vec<String>,
}

impl IgnoreArgs {
    fn options(&self) -> ScanOptions {
        let mut options = ScanOptions::default();
        options.ignore_dirs.extend(self.ignore.iter().cloned());
        options
    }
}

#[derive(Debug, Subcommand)]
enum CommandKind {
    /// Export a project's import dependency graph (JSON, or DOT with --dot).
    Graph {
        project: PathBuf,
        /// Emit DOT text instead of the JSON document.
        #[arg(long)]
        dot: bool,
        #[command(flatten)]
        ignore: IgnoreArgs,
    },
    /// Vendor missing external packages from a registry into the project.
    Resolve {
        project: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// Overwrite vendored files that differ from the registry copy.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        ignore: IgnoreArgs,
    },
    /// Compile project roots to bytecode + ABI artifacts.
    Compile {
        project: PathBuf,
        /// Compilation root(s); defaults to the graph's computed roots.
        #[arg(long = "root")]
        roots: Vec<String>,
        /// Directory of compiler executables named by version.
        #[arg(long = "solc-dir")]
        solc_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Version consistency rule applied to each unit.
        #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
        mode: ModeArg,
        /// Per-unit compiler timeout in seconds.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        #[command(flatten)]
        ignore: IgnoreArgs,
    },
    /// Validate analysis report JSON files against the schema.
    Validate {
        reports_dir: PathBuf,
        /// Warn on unknown keys instead of rejecting them.
        #[arg(long)]
        lenient: bool,
    },
    /// Summarize a labeled corpus: per-SWC counts, compiler buckets, LOC.
    Stats {
        corpus_dir: PathBuf,
        #[command(flatten)]
        ignore: IgnoreArgs,
    },
    /// Run external detectors or score their stored results.
    #[command(subcommand)]
    Bench(BenchKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strict,
    Intersect,
}

impl From<ModeArg> for ConsistencyMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Strict => ConsistencyMode::Strict,
            ModeArg::Intersect => ConsistencyMode::Intersect,
        }
    }
}

#[derive(Debug, Subcommand)]
enum BenchKind {
    /// Run every adapter on every target under a time budget.
    Run {
        #[arg(long)]
        adapters: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Override every adapter's budget (seconds).
        #[arg(long)]
        budget: Option<u64>,
        /// Directory for per-(tool, target) run records.
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
    /// Score stored run records against labeled reports.
    Score {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        runs: PathBuf,
        /// Also write the markdown table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Outcome {
    ok: bool,
    data: Value,
    warnings: Vec<String>,
    text: String,
}

impl Outcome {
    fn ok(data: Value, warnings: Vec<String>, text: String) -> Outcome {
        Outcome {
            ok: true,
            data,
            warnings,
            text,
        }
    }

    fn error(message: impl Into<String>, warnings: Vec<String>) -> Outcome {
        let message = message.into();
        Outcome {
            ok: false,
            data: json!({ "error": message }),
            warnings,
            text: format!("error: {message}"),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    status: &'a str,
    data: &'a Value,
    warnings: &'a [String],
}

/// Parses `argv` and runs the selected command, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let jobs = cli.jobs as usize;
    let (name, outcome) = match &cli.command {
        CommandKind::Graph {
            project,
            dot,
            ignore,
        } => ("graph", cmd_graph(project, *dot, &ignore.options())),
        CommandKind::Resolve {
            project,
            registry,
            force,
            ignore,
        } => (
            "resolve",
            cmd_resolve(project, registry, *force, &ignore.options()),
        ),
        CommandKind::Compile {
            project,
            roots,
            solc_dir,
            out,
            mode,
            timeout,
            ignore,
        } => (
            "compile",
            cmd_compile(
                project,
                roots,
                solc_dir.as_deref(),
                out,
                (*mode).into(),
                *timeout,
                jobs,
                &ignore.options(),
            ),
        ),
        CommandKind::Validate {
            reports_dir,
            lenient,
        } => ("validate", cmd_validate(reports_dir, *lenient)),
        CommandKind::Stats { corpus_dir, ignore } => (
            "stats",
            cmd_stats(corpus_dir, &ignore.options(), cli.format),
        ),
        CommandKind::Bench(BenchKind::Run {
            adapters,
            targets,
            budget,
            runs,
        }) => (
            "bench run",
            cmd_bench_run(adapters, targets, *budget, runs, jobs),
        ),
        CommandKind::Bench(BenchKind::Score { labels, runs, out }) => (
            "bench score",
            cmd_bench_score(labels, runs, out.as_deref(), cli.format),
        ),
    };
    emit(cli.format, name, &outcome)
}

fn emit(format: Format, command: &str, outcome: &Outcome) -> i32 {
    match format {
        Format::Json => {
            let envelope = Envelope {
                command,
                status: if outcome.ok { "ok" } else { "error" },
                data: &outcome.data,
                warnings: &outcome.warnings,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&envelope).expect("serializable")
            );
        }
        _ => {
            if !outcome.text.is_empty() {
                println!("{}", outcome.text);
            }
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
        }
    }
    if outcome.ok {
        0
    } else {
        1
    }
}

fn graph_warnings(built: &project::BuiltGraph) -> Vec<String> {
    let mut warnings: Vec<String> = built
        .scan
        .issues
        .iter()
        .map(|issue| format!("{}: {}", issue.path, issue.message))
        .collect();
    warnings.extend(built.resolve_issues.iter().cloned());
    if built.graph.fallback_roots() {
        warnings.push(
            "no import-free contract file found; falling back to every contract-declaring file as a root"
                .to_string(),
        );
    }
    let orphans = built.graph.orphans();
    if !orphans.is_empty() {
        warnings.push(format!(
            "orphan files reachable from no root: {}",
            orphans.join(", ")
        ));
    }
    warnings
}

fn cmd_graph(project_dir: &Path, dot: bool, options: &ScanOptions) -> Outcome {
    let built = match project::build_graph(project_dir, options, &[]) {
        Ok(built) => built,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let warnings = graph_warnings(&built);
    if dot {
        let text = project::to_dot(&built.graph);
        return Outcome::ok(json!({ "dot": text }), warnings, text);
    }
    let doc = GraphDoc::from_graph(&built.graph);
    let data = serde_json::to_value(&doc).expect("serializable");
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    Outcome::ok(data, warnings, text)
}

fn cmd_resolve(
    project_dir: &Path,
    registry_dir: &Path,
    force: bool,
    options: &ScanOptions,
) -> Outcome {
    let registry = match Registry::open(registry_dir) {
        Ok(registry) => registry,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let built = match project::build_graph(project_dir, options, &[]) {
        Ok(built) => built,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let mut warnings = graph_warnings(&built);

    // Group missing externals by package with their needed subpaths and the
    // constraints of the files importing them.
    let mut needed: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut importer_constraints: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for missing in built.graph.missing() {
        if !missing.subpath.is_empty() {
            let subpaths = needed.entry(missing.package.clone()).or_default();
            if !subpaths.contains(&missing.subpath) {
                subpaths.push(missing.subpath.clone());
            }
        } else {
            needed.entry(missing.package.clone()).or_default();
        }
        let importers = importer_constraints
            .entry(missing.package.clone())
            .or_default();
        if !importers.contains(&missing.importer) {
            importers.push(missing.importer.clone());
        }
    }

    let mut vendored = Vec::new();
    let mut remappings = Vec::new();
    let mut not_in_registry = Vec::new();
    for (package, subpaths) in &needed {
        let mut constraint: Option<scanforge_core::version::VersionConstraint> = None;
        for importer in importer_constraints.get(package).into_iter().flatten() {
            if let Some(file_constraint) = built.scan.constraint_of(importer) {
                constraint = Some(match constraint {
                    None => file_constraint,
                    Some(current) => current.and(&file_constraint),
                });
            }
        }
        let constraint = constraint.filter(|c| {
            let satisfiable = c.is_satisfiable();
            if !satisfiable {
                warnings.push(format!(
                    "importers of {package} have incompatible pragmas; ignoring them for version selection"
                ));
            }
            satisfiable
        });
        let selection = match registry.select_version(package, constraint.as_ref(), subpaths) {
            Ok(selection) => selection,
            Err(RegistryError::UnknownPackage { .. }) => {
                not_in_registry.push(package.clone());
                continue;
            }
            Err(err) => return Outcome::error(err.to_string(), warnings),
        };
        let outcome = match registry.vendor(selection, project_dir, force) {
            Ok(outcome) => outcome,
            Err(err) => return Outcome::error(err.to_string(), warnings),
        };
        vendored.push(json!({
            "package": selection.package,
            "version": selection.version,
            "files": outcome.files.len(),
        }));
        remappings.push(outcome.remapping);
    }
    if let Err(err) = project::store_remappings(project_dir, &remappings) {
        return Outcome::error(err.to_string(), warnings);
    }

    let rebuilt = match project::build_graph(project_dir, options, &[]) {
        Ok(rebuilt) => rebuilt,
        Err(err) => return Outcome::error(err.to_string(), warnings),
    };
    let remaining: Vec<String> = rebuilt
        .graph
        .missing()
        .iter()
        .map(|m| m.package.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    for package in &not_in_registry {
        warnings.push(format!("package {package} is not in the registry"));
    }
    let data = json!({
        "vendored": vendored,
        "remappings": remappings.iter().map(|(p, t)| json!([p, t])).collect::<Vec<_>>(),
        "missing_before": built.graph.missing().len(),
        "missing_after": rebuilt.graph.missing().len(),
        "remaining_packages": remaining,
    });
    let text = format!(
        "vendored {} package(s); unresolved imports {} -> {}",
        vendored.len(),
        built.graph.missing().len(),
        rebuilt.graph.missing().len()
    );
    Outcome::ok(data, warnings, text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compile(
    project_dir: &Path,
    roots: &[String],
    solc_dir: Option<&Path>,
    out_dir: &Path,
    mode: ConsistencyMode,
    timeout: u64,
    jobs: usize,
    options: &ScanOptions,
) -> Outcome {
    let built = match project::build_graph(project_dir, options, &[]) {
        Ok(built) => built,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let mut warnings = graph_warnings(&built);

    let solc_dir: Option<PathBuf> = solc_dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(SOLC_DIR_ENV).map(PathBuf::from));
    let releases = match &solc_dir {
        None => {
            warnings.push(format!(
                "no --solc-dir given and {SOLC_DIR_ENV} is unset; no compiler releases available"
            ));
            Vec::new()
        }
        Some(dir) => match solc::discover_releases(dir) {
            Ok(releases) => {
                if releases.is_empty() {
                    warnings.push(format!(
                        "no compiler executables found in {}",
                        dir.display()
                    ));
                }
                releases
            }
            Err(err) => return Outcome::error(format!("{}: {err}", dir.display()), warnings),
        },
    };

    let selected_roots: Vec<String> = if roots.is_empty() {
        built.graph.roots().iter().cloned().collect()
    } else {
        let mut normalized = Vec::new();
        for root in roots {
            match scanforge_core::paths::normalize(root) {
                Some(path) if built.graph.nodes().contains(&path) => normalized.push(path),
                _ => {
                    return Outcome::error(format!("root `{root}` is not a project file"), warnings)
                }
            }
        }
        normalized
    };
    if selected_roots.is_empty() {
        return Outcome::error("project has no compilation roots", warnings);
    }

    let results = parallel_map(jobs, selected_roots.clone(), |root| {
        let unit = match solc::assemble_unit(&built, project_dir, &root, mode, &releases) {
            Ok(unit) => unit,
            Err(failure) => return (root, Err(failure)),
        };
        let release = match solc::solve_version(unit.constraint.as_ref(), &releases) {
            Ok(release) => release,
            Err(failure) => return (root, Err(failure)),
        };
        match solc::compile(&unit, &release, timeout) {
            Ok(artifacts) => (root, Ok(artifacts)),
            Err(failure) => (root, Err(failure)),
        }
    });

    let mut units = Vec::new();
    let mut failed = 0usize;
    for (root, result) in &results {
        match result {
            Ok(artifacts) => {
                let written = match solc::write_artifacts(out_dir, artifacts) {
                    Ok(written) => written,
                    Err(err) => return Outcome::error(err.to_string(), warnings),
                };
                units.push(json!({
                    "root": root,
                    "status": "ok",
                    "contracts": artifacts.iter().map(|a| a.contract_name.clone()).collect::<Vec<_>>(),
                    "artifacts": written
                        .iter()
                        .map(|p| p.display().to_string())
                        .collect::<Vec<_>>(),
                }));
            }
            Err(failure) => {
                failed += 1;
                units.push(json!({
                    "root": root,
                    "status": failure.kind.as_str(),
                    "detail": failure.detail,
                }));
            }
        }
    }
    let data = json!({
        "units": units,
        "compiled": results.len() - failed,
        "failed": failed,
    });
    let mut lines: Vec<String> = results
        .iter()
        .map(|(root, result)| match result {
            Ok(artifacts) => format!("{root}: ok ({} contract(s))", artifacts.len()),
            Err(failure) => format!("{root}: {failure}"),
        })
        .collect();
    lines.push(format!(
        "compiled {}/{} unit(s)",
        results.len() - failed,
        results.len()
    ));
    if failed > 0 {
        return Outcome {
            ok: false,
            data,
            warnings,
            text: lines.join("\n"),
        };
    }
    Outcome::ok(data, warnings, lines.join("\n"))
}

fn cmd_validate(reports_dir: &Path, lenient: bool) -> Outcome {
    let loaded = match reports::load_reports_dir(reports_dir, !lenient) {
        Ok(loaded) => loaded,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    let checked = loaded.len();
    for report in loaded {
        match report.result {
            Ok((_, mut report_warnings)) => warnings.append(&mut report_warnings),
            Err(err) => errors.push((report.path.display().to_string(), err.to_string())),
        }
    }
    let data = json!({
        "checked": checked,
        "errors": errors
            .iter()
            .map(|(file, error)| json!({ "file": file, "error": error }))
            .collect::<Vec<_>>(),
    });
    if errors.is_empty() {
        Outcome::ok(data, warnings, format!("{checked} report(s) valid"))
    } else {
        let text = errors
            .iter()
            .map(|(file, error)| format!("{file}: {error}"))
            .collect::<Vec<_>>()
            .join("\n");
        Outcome {
            ok: false,
            data,
            warnings,
            text,
        }
    }
}

fn cmd_stats(corpus_dir: &Path, options: &ScanOptions, format: Format) -> Outcome {
    let outcome = match reports::collect_corpus(corpus_dir, options) {
        Ok(outcome) => outcome,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let doc = StatsDoc::from_stats(&outcome.stats);
    let data = serde_json::to_value(&doc).expect("serializable");
    let text = match format {
        Format::Csv => reports::render_stats_csv(&outcome.stats),
        _ => reports::render_stats_markdown(&outcome.stats),
    };
    Outcome::ok(data, outcome.warnings, text)
}

fn cmd_bench_run(
    adapters_path: &Path,
    targets_dir: &Path,
    budget: Option<u64>,
    runs_dir: &Path,
    jobs: usize,
) -> Outcome {
    let adapters = match bench::load_adapters(adapters_path) {
        Ok(adapters) => adapters,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let targets = match crate::util::walk_sorted(targets_dir, &|name| name.starts_with('.')) {
        Ok(files) => files
            .into_iter()
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("sol"))
            .collect::<Vec<_>>(),
        Err(err) => return Outcome::error(format!("{}: {err}", targets_dir.display()), Vec::new()),
    };
    if targets.is_empty() {
        return Outcome::error(
            format!("no .sol targets under {}", targets_dir.display()),
            Vec::new(),
        );
    }
    let pairs: Vec<(usize, PathBuf)> = adapters
        .iter()
        .enumerate()
        .flat_map(|(i, _)| targets.iter().map(move |t| (i, t.clone())))
        .collect();
    let results = parallel_map(jobs, pairs, |(adapter_idx, target)| {
        bench::run_detector(&adapters[adapter_idx], &target, budget)
    });

    let mut per_tool: BTreeMap<String, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut stored = 0usize;
    for result in &results {
        match result {
            Ok(record) => {
                if let Err(err) = bench::store_run(runs_dir, record) {
                    return Outcome::error(err.to_string(), Vec::new());
                }
                stored += 1;
                let counts = per_tool.entry(record.tool_name.clone()).or_default();
                *counts
                    .entry(match record.status.as_str() {
                        "ok" => "ok",
                        "timeout" => "timeout",
                        _ => "crash",
                    })
                    .or_insert(0) += 1;
            }
            Err(err) => return Outcome::error(err.to_string(), Vec::new()),
        }
    }
    let data = json!({
        "targets": targets.len(),
        "records": stored,
        "tools": per_tool
            .iter()
            .map(|(tool, counts)| {
                (
                    tool.clone(),
                    json!({
                        "ok": counts.get("ok").copied().unwrap_or(0),
                        "timeout": counts.get("timeout").copied().unwrap_or(0),
                        "crash": counts.get("crash").copied().unwrap_or(0),
                    }),
                )
            })
            .collect::<serde_json::Map<String, Value>>(),
    });
    let text = per_tool
        .iter()
        .map(|(tool, counts)| {
            format!(
                "{tool}: ok={} timeout={} crash={}",
                counts.get("ok").copied().unwrap_or(0),
                counts.get("timeout").copied().unwrap_or(0),
                counts.get("crash").copied().unwrap_or(0)
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Outcome::ok(data, Vec::new(), text)
}

fn cmd_bench_score(
    labels_dir: &Path,
    runs_dir: &Path,
    out: Option<&Path>,
    format: Format,
) -> Outcome {
    let (table, warnings) = match bench::score_runs(labels_dir, runs_dir) {
        Ok(result) => result,
        Err(err) => return Outcome::error(err.to_string(), Vec::new()),
    };
    let markdown = bench::render_table_markdown(&table);
    if let Some(out) = out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                if let Err(err) = fs::create_dir_all(parent) {
                    return Outcome::error(err.to_string(), warnings);
                }
            }
        }
        if let Err(err) = fs::write(out, &markdown) {
            return Outcome::error(err.to_string(), warnings);
        }
    }
    let doc = ScoreDoc::from_table(&table);
    let data = serde_json::to_value(&doc).expect("serializable");
    let text = match format {
        Format::Csv => bench::render_table_csv(&table),
        _ => markdown,
    };
    Outcome::ok(data, warnings, text)
}
