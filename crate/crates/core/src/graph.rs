//! File-level dependency graph of a DApp project: import resolution,
//! missing-external classification, compilation roots, and closures.
//!
//! The graph is built from per-file import lists that the caller has already
//! extracted; this module never touches the file system. Edges point
//! importer -> imported. A compilation root is a file no other project file
//! imports and that declares at least one deployable contract.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::paths;

/// An import that resolves to no file in the project: an external package
/// to be vendored (or a genuinely missing source).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MissingExternal {
    pub importer: String,
    pub raw_path: String,
    /// Root path segment; the first two segments for `@scope/name` packages.
    pub package: String,
    /// Remainder after the package prefix; empty for single-segment paths.
    pub subpath: String,
}

/// Outcome of resolving one import directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Resolved(String),
    External(MissingExternal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveError {
    /// A relative import climbed above the project root.
    EscapesRoot { importer: String, raw_path: String },
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::EscapesRoot { importer, raw_path } => write!(
                f,
                "import `{raw_path}` in `{importer}` escapes the project root"
            ),
        }
    }
}

fn split_package(raw_path: &str) -> (String, String) {
    let mut segments = raw_path.splitn(3, '/');
    let first = segments.next().unwrap_or("");
    if first.starts_with('@') {
        match segments.next() {
            Some(second) => {
                let mut package = String::from(first);
                package.push('/');
                package.push_str(second);
                (package, segments.next().unwrap_or("").to_string())
            }
            None => (first.to_string(), String::new()),
        }
    } else {
        let rest: Vec<&str> = segments.collect();
        (first.to_string(), rest.join("/"))
    }
}

/// Resolves one import directive against the project's file set.
///
/// Relative paths (`./`, `../`) are joined to the importer's directory.
/// Other paths get the longest matching remapping prefix applied, then are
/// tried as project-relative paths directly. Anything that still names no
/// project file is classified as an external package.
pub fn resolve_import(
    importer: &str,
    raw_path: &str,
    files: &BTreeSet<String>,
    remappings: &[(String, String)],
) -> Result<Resolution, ResolveError> {
    let external = |candidate: &str| {
        let (package, subpath) = split_package(candidate);
        Resolution::External(MissingExternal {
            importer: importer.to_string(),
            raw_path: raw_path.to_string(),
            package,
            subpath,
        })
    };

    if raw_path.starts_with("./") || raw_path.starts_with("../") {
        let joined = paths::join(paths::parent(importer), raw_path).ok_or_else(|| {
            ResolveError::EscapesRoot {
                importer: importer.to_string(),
                raw_path: raw_path.to_string(),
            }
        })?;
        if files.contains(&joined) {
            return Ok(Resolution::Resolved(joined));
        }
        return Ok(external(&joined));
    }

    // Longest-prefix-first remapping.
    let remapped = remappings
        .iter()
        .filter(|(prefix, _)| raw_path.starts_with(prefix.as_str()))
        .max_by_key(|(prefix, _)| prefix.len())
        .map(|(prefix, target)| {
            let mut out = String::from(target.as_str());
            out.push_str(&raw_path[prefix.len()..]);
            out
        });
    if let Some(remapped) = remapped {
        if let Some(normalized) = paths::normalize(&remapped) {
            if files.contains(&normalized) {
                return Ok(Resolution::Resolved(normalized));
            }
        }
        return Ok(external(raw_path));
    }

    if let Some(direct) = paths::normalize(raw_path) {
        if files.contains(&direct) {
            return Ok(Resolution::Resolved(direct));
        }
    }
    Ok(external(raw_path))
}

/// Per-file inputs for graph construction.
#[derive(Debug, Clone, Default)]
pub struct FileNode {
    /// Raw import paths exactly as written in the file.
    pub imports: Vec<String>,
    /// Whether the file declares a deployable (plain) contract. Vendored
    /// library files should pass `false` so they never become roots.
    pub deployable: bool,
}

/// The file-level dependency graph of one project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: BTreeSet<String>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    missing: Vec<MissingExternal>,
    roots: BTreeSet<String>,
    fallback_roots: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    UnknownRoot(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::UnknownRoot(root) => write!(f, "`{root}` is not a node of the graph"),
        }
    }
}

impl DependencyGraph {
    /// Builds the graph from parsed per-file data. Resolution errors are
    /// collected, not fatal; the affected import contributes no edge.
    pub fn build(
        files: &BTreeMap<String, FileNode>,
        remappings: &[(String, String)],
    ) -> (DependencyGraph, Vec<ResolveError>) {
        let nodes: BTreeSet<String> = files.keys().cloned().collect();
        let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut missing: Vec<MissingExternal> = Vec::new();
        let mut errors = Vec::new();
        for (path, node) in files {
            for raw in &node.imports {
                match resolve_import(path, raw, &nodes, remappings) {
                    Ok(Resolution::Resolved(target)) => {
                        adjacency.entry(path.clone()).or_default().insert(target);
                    }
                    Ok(Resolution::External(external)) => missing.push(external),
                    Err(err) => errors.push(err),
                }
            }
        }
        missing.sort();
        missing.dedup();

        let imported: BTreeSet<&String> = adjacency.values().flatten().collect();
        let mut roots: BTreeSet<String> = files
            .iter()
            .filter(|(path, node)| node.deployable && !imported.contains(path))
            .map(|(path, _)| path.clone())
            .collect();
        let mut fallback_roots = false;
        if roots.is_empty() && !nodes.is_empty() {
            roots = files
                .iter()
                .filter(|(_, node)| node.deployable)
                .map(|(path, _)| path.clone())
                .collect();
            fallback_roots = true;
        }

        (
            DependencyGraph {
                nodes,
                adjacency,
                missing,
                roots,
                fallback_roots,
            },
            errors,
        )
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    /// Ordered importer -> imported pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.adjacency
            .iter()
            .flat_map(|(from, tos)| tos.iter().map(move |to| (from.as_str(), to.as_str())))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(|tos| tos.len()).sum()
    }

    pub fn missing(&self) -> &[MissingExternal] {
        &self.missing
    }

    /// Compilation roots: files never imported by another project file that
    /// declare a deployable contract. When a project has no such file (for
    /// example a whole-project import cycle), all contract-declaring files
    /// are returned and [`fallback_roots`](Self::fallback_roots) is set.
    pub fn roots(&self) -> &BTreeSet<String> {
        &self.roots
    }

    pub fn fallback_roots(&self) -> bool {
        self.fallback_roots
    }

    /// The root plus all transitively imported files, depth-first with
    /// children in path order, each file exactly once; cycles traversed once.
    pub fn closure(&self, root: &str) -> Result<Vec<String>, GraphError> {
        if !self.nodes.contains(root) {
            return Err(GraphError::UnknownRoot(root.to_string()));
        }
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        let mut order: Vec<String> = Vec::new();
        let mut stack: Vec<&str> = alloc::vec![root];
        while let Some(current) = stack.pop() {
            if !visited.insert(current) {
                continue;
            }
            order.push(current.to_string());
            if let Some(children) = self.adjacency.get(current) {
                for child in children.iter().rev() {
                    if !visited.contains(child.as_str()) {
                        stack.push(child);
                    }
                }
            }
        }
        Ok(order)
    }

    /// Files reachable from no compilation root; candidates for a lint
    /// warning rather than an error.
    pub fn orphans(&self) -> Vec<String> {
        let mut covered: BTreeSet<String> = BTreeSet::new();
        for root in &self.roots {
            if let Ok(closure) = self.closure(root) {
                covered.extend(closure);
            }
        }
        self.nodes
            .iter()
            .filter(|n| !covered.contains(*n))
            .cloned()
            .collect()
    }
}
