//! Project scanning: find the Solidity files of a DApp tree, parse each one,
//! and assemble the file-level dependency graph.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use scanforge_core::graph::{DependencyGraph, FileNode};
use scanforge_core::source::SourceFile;
use scanforge_core::swc::CompilerSeries;
use scanforge_core::version::VersionConstraint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::walk_sorted;

/// Directory of vendored externals and toolchain state inside a project.
pub const SCANFORGE_DIR: &str = ".scanforge";
/// Vendored package trees live under this project-relative prefix.
pub const VENDOR_PREFIX: &str = ".scanforge/lib";
/// Remappings persisted by `resolve` for later `graph`/`compile` runs.
pub const REMAPPINGS_FILE: &str = ".scanforge/remappings.json";

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("cannot read project directory {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Io(#[from] io::Error),
}

/// Which directories a scan descends into.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Directory names skipped anywhere in the tree.
    pub ignore_dirs: Vec<String>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            ignore_dirs: ["node_modules", "test", "tests", "mock", "mocks"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ScanOptions {
    fn skips(&self, name: &str) -> bool {
        // Hidden directories are skipped except our own vendor tree.
        if name.starts_with('.') && name != SCANFORGE_DIR {
            return true;
        }
        self.ignore_dirs.iter().any(|d| d == name)
    }
}

/// One scanned Solidity file.
#[derive(Debug, Clone)]
pub struct ScannedFile {
    pub source: SourceFile,
    pub lines_of_code: u64,
    /// True for files under the vendored library tree; they never become
    /// compilation roots.
    pub vendored: bool,
}

/// A problem with one file that did not stop the scan.
#[derive(Debug, Clone, Serialize)]
pub struct FileIssue {
    pub path: String,
    pub message: String,
}

/// All Solidity files of a project, keyed by normalized relative path.
#[derive(Debug, Clone, Default)]
pub struct ProjectScan {
    pub files: BTreeMap<String, ScannedFile>,
    pub issues: Vec<FileIssue>,
}

impl ProjectScan {
    /// Conjunction of the version pragmas of one file.
    pub fn constraint_of(&self, path: &str) -> Option<VersionConstraint> {
        self.files.get(path).and_then(|f| f.source.constraint())
    }

    pub fn total_lines(&self) -> u64 {
        self.files.values().map(|f| f.lines_of_code).sum()
    }
}

/// Walks `root` and parses every `.sol` file. Files that are not UTF-8 are
/// reported and skipped; files with lexical errors are kept as import-less
/// nodes with the error recorded.
pub fn scan_project(root: &Path, options: &ScanOptions) -> Result<ProjectScan, ProjectError> {
    let entries = walk_sorted(root, &|name| options.skips(name)).map_err(|source| {
        ProjectError::Unreadable {
            path: root.display().to_string(),
            source,
        }
    })?;
    let mut scan = ProjectScan::default();
    for absolute in entries {
        if absolute.extension().and_then(|e| e.to_str()) != Some("sol") {
            continue;
        }
        let relative = absolute
            .strip_prefix(root)
            .expect("walker stays under root")
            .to_string_lossy()
            .replace('\\', "/");
        let Some(path) = scanforge_core::paths::normalize(&relative) else {
            continue;
        };
        let bytes = fs::read(&absolute)?;
        let text = match String::from_utf8(bytes) {
            Ok(text) => text,
            Err(_) => {
                scan.issues.push(FileIssue {
                    path,
                    message: "not valid UTF-8; skipped".to_string(),
                });
                continue;
            }
        };
        let vendored = path.starts_with(VENDOR_PREFIX);
        match SourceFile::scan(&path, &text) {
            Ok(source) => {
                scan.files.insert(
                    path,
                    ScannedFile {
                        source,
                        lines_of_code: text.lines().count() as u64,
                        vendored,
                    },
                );
            }
            Err(err) => {
                scan.issues.push(FileIssue {
                    path: path.clone(),
                    message: err.to_string(),
                });
                let source = SourceFile {
                    path: path.clone(),
                    content_hash: scanforge_core::source::content_hash(text.as_bytes()),
                    pragmas: Vec::new(),
                    imports: Vec::new(),
                    declarations: Vec::new(),
                };
                scan.files.insert(
                    path,
                    ScannedFile {
                        source,
                        lines_of_code: text.lines().count() as u64,
                        vendored,
                    },
                );
            }
        }
    }
    Ok(scan)
}

/// Reads remappings persisted by `resolve`; missing file means none.
pub fn load_remappings(root: &Path) -> Result<Vec<(String, String)>, ProjectError> {
    let path = root.join(REMAPPINGS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path)?;
    let entries: Vec<(String, String)> = serde_json::from_str(&text).map_err(|err| {
        ProjectError::Io(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {err}", path.display()),
        ))
    })?;
    Ok(entries)
}

/// Persists remappings, merged with any existing entries, sorted, deduped.
pub fn store_remappings(
    root: &Path,
    new_entries: &[(String, String)],
) -> Result<Vec<(String, String)>, ProjectError> {
    let mut entries = load_remappings(root)?;
    entries.extend(new_entries.iter().cloned());
    entries.sort();
    entries.dedup();
    fs::create_dir_all(root.join(SCANFORGE_DIR))?;
    let mut text = serde_json::to_string_pretty(&entries).expect("serializable");
    text.push('\n');
    fs::write(root.join(REMAPPINGS_FILE), text)?;
    Ok(entries)
}

/// A scan plus the graph built from it.
#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: DependencyGraph,
    pub scan: ProjectScan,
    pub remappings: Vec<(String, String)>,
    /// Import-resolution problems (e.g. paths escaping the root).
    pub resolve_issues: Vec<String>,
}

/// Scans `root` and builds its dependency graph, applying stored remappings
/// plus any extra ones supplied by the caller.
pub fn build_graph(
    root: &Path,
    options: &ScanOptions,
    extra_remappings: &[(String, String)],
) -> Result<BuiltGraph, ProjectError> {
    let scan = scan_project(root, options)?;
    let mut remappings = load_remappings(root)?;
    remappings.extend(extra_remappings.iter().cloned());
    remappings.sort();
    remappings.dedup();
    let nodes: BTreeMap<String, FileNode> = scan
        .files
        .iter()
        .map(|(path, file)| {
            (
                path.clone(),
                FileNode {
                    imports: file
                        .source
                        .imports
                        .iter()
                        .map(|i| i.raw_path.clone())
                        .collect(),
                    deployable: file.source.declares_contract() && !file.vendored,
                },
            )
        })
        .collect();
    let (graph, errors) = DependencyGraph::build(&nodes, &remappings);
    Ok(BuiltGraph {
        graph,
        scan,
        remappings,
        resolve_issues: errors.iter().map(|e| e.to_string()).collect(),
    })
}

/// JSON document shape of the `graph` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub missing: Vec<MissingDoc>,
    pub roots: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MissingDoc {
    pub importer: String,
    pub raw_path: String,
    pub package: String,
    pub subpath: String,
}

impl GraphDoc {
    pub fn from_graph(graph: &DependencyGraph) -> GraphDoc {
        GraphDoc {
            nodes: graph.nodes().iter().cloned().collect(),
            edges: graph
                .edges()
                .map(|(from, to)| [from.to_string(), to.to_string()])
                .collect(),
            missing: graph
                .missing()
                .iter()
                .map(|m| MissingDoc {
                    importer: m.importer.clone(),
                    raw_path: m.raw_path.clone(),
                    package: m.package.clone(),
                    subpath: m.subpath.clone(),
                })
                .collect(),
            roots: graph.roots().iter().cloned().collect(),
        }
    }
}

/// Renders the graph as DOT text for visualization.
pub fn to_dot(graph: &DependencyGraph) -> String {
    let mut out = String::from("digraph dependencies {\n");
    for node in graph.nodes() {
        out.push_str(&format!("  \"{node}\";\n"));
    }
    for (from, to) in graph.edges() {
        out.push_str(&format!("  \"{from}\" -> \"{to}\";\n"));
    }
    for missing in graph.missing() {
        out.push_str(&format!(
            "  \"{}\" -> \"{}/{}\" [style=dashed, color=red];\n",
            missing.importer, missing.package, missing.subpath
        ));
    }
    out.push_str("}\n");
    out
}

/// The compiler series a project is bucketed under: the effective constraint
/// of its largest compilation root (intersection over the root's closure,
/// falling back to the root's own pragmas when the intersection is empty).
pub fn project_series(built: &BuiltGraph) -> CompilerSeries {
    let mut best: Option<(usize, &String)> = None;
    for root in built.graph.roots() {
        let size = built.graph.closure(root).map(|c| c.len()).unwrap_or(0);
        let better = match best {
            None => true,
            Some((best_size, best_root)) => {
                size > best_size || (size == best_size && root < best_root)
            }
        };
        if better {
            best = Some((size, root));
        }
    }
    let Some((_, root)) = best else {
        return CompilerSeries::Other;
    };
    let closure = built.graph.closure(root).expect("root is a node");
    let mut effective: Option<VersionConstraint> = None;
    for path in &closure {
        if let Some(constraint) = built.scan.constraint_of(path) {
            effective = Some(match effective {
                None => constraint,
                Some(current) => current.and(&constraint),
            });
        }
    }
    let effective = match effective {
        Some(c) if c.is_satisfiable() => Some(c),
        _ => built.scan.constraint_of(root),
    };
    CompilerSeries::of_constraint(effective.as_ref())
}
