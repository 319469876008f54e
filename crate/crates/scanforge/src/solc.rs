//! Driving the Solidity compiler: release discovery, version solving,
//! standard-JSON assembly, subprocess execution with a timeout, and failure
//! classification.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use scanforge_core::failure::{classify_failure, FailureClass, FailureKind};
use scanforge_core::version::{check_consistency, ConsistencyMode, Version, VersionConstraint};
use serde::{Deserialize, Serialize};

use crate::project::BuiltGraph;

/// A concrete compiler executable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilerRelease {
    pub version: Version,
    pub invocation: PathBuf,
}

/// Scans a directory for compiler executables named after their version
/// (`solc-0.8.19`, `solc-v0.8.19`, `0.8.19`, ...). Returns releases sorted
/// by version, one per version.
pub fn discover_releases(dir: &Path) -> std::io::Result<Vec<CompilerRelease>> {
    let mut by_version: BTreeMap<Version, PathBuf> = BTreeMap::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        if !path.is_file() {
            continue;
        }
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            if fs::metadata(&path)?.permissions().mode() & 0o111 == 0 {
                continue;
            }
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(version) = version_from_name(name) {
            by_version.entry(version).or_insert(path);
        }
    }
    Ok(by_version
        .into_iter()
        .map(|(version, invocation)| CompilerRelease {
            version,
            invocation,
        })
        .collect())
}

fn version_from_name(name: &str) -> Option<Version> {
    let mut rest = name;
    for prefix in ["solc-v", "solc-", "solc_", "solc", "v"] {
        if let Some(stripped) = rest.strip_prefix(prefix) {
            rest = stripped;
            break;
        }
    }
    let numeric: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    if numeric.is_empty() {
        return None;
    }
    Version::parse(numeric.trim_end_matches('.'))
}

/// Picks the highest release satisfying `constraint`; `None` constraint
/// means any release works.
pub fn solve_version(
    constraint: Option<&VersionConstraint>,
    available: &[CompilerRelease],
) -> Result<CompilerRelease, FailureClass> {
    let best = available
        .iter()
        .filter(|release| constraint.is_none_or(|c| c.satisfies(release.version)))
        .max_by_key(|release| release.version);
    best.cloned().ok_or_else(|| {
        let wanted = constraint.map_or("any".to_string(), |c| c.to_string());
        FailureClass::new(
            FailureKind::CompilerUnavailable,
            format!(
                "no compiler release satisfies `{wanted}` (available: {})",
                if available.is_empty() {
                    "none".to_string()
                } else {
                    available
                        .iter()
                        .map(|r| r.version.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                }
            ),
        )
    })
}

/// Everything needed to compile one root: the ordered closure with exact
/// on-disk contents, the remappings, and the effective version constraint.
#[derive(Debug, Clone)]
pub struct CompilationUnit {
    pub root: String,
    pub sources: Vec<(String, String)>,
    pub remappings: Vec<(String, String)>,
    pub constraint: Option<VersionConstraint>,
}

/// Assembles the compilation unit for `root`.
///
/// Fails with `MissingFile` when the closure still imports unresolved
/// externals, and with `VersionMismatch` when the consistency check for
/// `mode` rejects the unit.
pub fn assemble_unit(
    built: &BuiltGraph,
    project_root: &Path,
    root: &str,
    mode: ConsistencyMode,
    available: &[CompilerRelease],
) -> Result<CompilationUnit, FailureClass> {
    let closure = built
        .graph
        .closure(root)
        .map_err(|err| FailureClass::new(FailureKind::MissingFile, err.to_string()))?;

    let unresolved: Vec<String> = built
        .graph
        .missing()
        .iter()
        .filter(|m| closure.contains(&m.importer))
        .map(|m| format!("`{}` imported by `{}`", m.raw_path, m.importer))
        .collect();
    if !unresolved.is_empty() {
        return Err(FailureClass::new(
            FailureKind::MissingFile,
            format!("unresolved imports: {}", unresolved.join("; ")),
        ));
    }

    let constraints: Vec<(String, Option<VersionConstraint>)> = closure
        .iter()
        .map(|path| (path.clone(), built.scan.constraint_of(path)))
        .collect();
    let versions: Vec<Version> = available.iter().map(|r| r.version).collect();
    let constraint = check_consistency(root, &constraints, mode, &versions)
        .map_err(|err| FailureClass::new(FailureKind::VersionMismatch, err.detail.clone()))?;

    let mut sources = Vec::with_capacity(closure.len());
    for path in &closure {
        let content = fs::read_to_string(project_root.join(path))
            .map_err(|err| FailureClass::new(FailureKind::MissingFile, format!("{path}: {err}")))?;
        sources.push((path.clone(), content));
    }
    Ok(CompilationUnit {
        root: root.to_string(),
        sources,
        remappings: built.remappings.clone(),
        constraint,
    })
}

#[derive(Debug, Serialize)]
struct StandardJsonInput {
    language: &'static str,
    sources: BTreeMap<String, SourceContent>,
    settings: Settings,
}

#[derive(Debug, Serialize)]
struct SourceContent {
    content: String,
}

#[derive(Debug, Serialize)]
struct Settings {
    remappings: Vec<String>,
    #[serde(rename = "outputSelection")]
    output_selection: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

/// Builds the compiler's standard-JSON input document: one sources entry per
/// closure file keyed by project-relative path, remappings, and an output
/// selection for ABI plus deployment bytecode. Key order is deterministic.
pub fn build_standard_json(unit: &CompilationUnit) -> String {
    let sources = unit
        .sources
        .iter()
        .map(|(path, content)| {
            (
                path.clone(),
                SourceContent {
                    content: content.clone(),
                },
            )
        })
        .collect();
    let output_selection: BTreeMap<String, BTreeMap<String, Vec<String>>> = [(
        "*".to_string(),
        [(
            "*".to_string(),
            vec!["abi".to_string(), "evm.bytecode.object".to_string()],
        )]
        .into_iter()
        .collect(),
    )]
    .into_iter()
    .collect();
    let input = StandardJsonInput {
        language: "Solidity",
        sources,
        settings: Settings {
            remappings: unit
                .remappings
                .iter()
                .map(|(prefix, target)| format!("{prefix}={target}"))
                .collect(),
            output_selection,
        },
    };
    serde_json::to_string(&input).expect("serializable")
}

#[derive(Debug, Deserialize)]
struct StandardJsonOutput {
    #[serde(default)]
    errors: Vec<OutputDiagnostic>,
    #[serde(default)]
    contracts: BTreeMap<String, BTreeMap<String, OutputContract>>,
}

#[derive(Debug, Deserialize)]
struct OutputDiagnostic {
    #[serde(default)]
    severity: String,
    #[serde(rename = "formattedMessage")]
    formatted_message: Option<String>,
    #[serde(default)]
    message: String,
}

#[derive(Debug, Deserialize)]
struct OutputContract {
    #[serde(default)]
    abi: serde_json::Value,
    evm: Option<OutputEvm>,
}

#[derive(Debug, Deserialize)]
struct OutputEvm {
    bytecode: Option<OutputBytecode>,
}

#[derive(Debug, Deserialize)]
struct OutputBytecode {
    #[serde(default)]
    object: String,
}

/// One compiled contract from the unit's root file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CompilationArtifact {
    pub contract_name: String,
    pub source_file: String,
    pub compiler_version: String,
    /// Hex string of the deployment bytecode.
    pub bytecode: String,
    pub abi: serde_json::Value,
}

/// Runs `release` on the unit's standard-JSON input, enforcing `timeout_s`.
///
/// On success returns one artifact per contract declared in the root file;
/// dependencies are compiled but excluded from the output. Diagnostics of
/// severity `error` are classified into a [`FailureClass`].
pub fn compile(
    unit: &CompilationUnit,
    release: &CompilerRelease,
    timeout_s: u64,
) -> Result<Vec<CompilationArtifact>, FailureClass> {
    let input = build_standard_json(unit);
    let scratch = tempfile::tempdir().map_err(|err| {
        FailureClass::new(FailureKind::CompileError, format!("scratch dir: {err}"))
    })?;
    let output = run_with_timeout(
        &release.invocation,
        &["--standard-json"],
        input.as_bytes(),
        scratch.path(),
        Duration::from_secs(timeout_s),
    )?;

    let parsed: StandardJsonOutput = serde_json::from_slice(&output.stdout).map_err(|err| {
        let stderr = String::from_utf8_lossy(&output.stderr);
        FailureClass::new(
            FailureKind::CompileError,
            format!(
                "unparseable compiler output ({err}); stderr: {}",
                stderr.trim()
            ),
        )
    })?;

    let errors: Vec<String> = parsed
        .errors
        .iter()
        .filter(|d| d.severity == "error")
        .map(|d| {
            d.formatted_message
                .clone()
                .unwrap_or_else(|| d.message.clone())
        })
        .collect();
    if !errors.is_empty() {
        return Err(classify_failure(&errors.join("\n")));
    }
    if !output.status_success {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(classify_failure(stderr.trim()));
    }

    let mut artifacts = Vec::new();
    if let Some(root_contracts) = parsed.contracts.get(&unit.root) {
        for (name, contract) in root_contracts {
            let bytecode = contract
                .evm
                .as_ref()
                .and_then(|evm| evm.bytecode.as_ref())
                .map(|b| b.object.clone())
                .unwrap_or_default();
            if !bytecode.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(FailureClass::new(
                    FailureKind::CompileError,
                    format!("contract {name}: bytecode is not valid hex"),
                ));
            }
            artifacts.push(CompilationArtifact {
                contract_name: name.clone(),
                source_file: unit.root.clone(),
                compiler_version: release.version.to_string(),
                bytecode,
                abi: if contract.abi.is_null() {
                    serde_json::Value::Array(Vec::new())
                } else {
                    contract.abi.clone()
                },
            });
        }
    }
    Ok(artifacts)
}

struct SubprocessOutput {
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    status_success: bool,
}

fn run_with_timeout(
    program: &Path,
    args: &[&str],
    stdin_bytes: &[u8],
    cwd: &Path,
    timeout: Duration,
) -> Result<SubprocessOutput, FailureClass> {
    let mut command = Command::new(program);
    command
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    crate::util::isolate_process_group(&mut command);
    let mut child = command.spawn().map_err(|err| {
        FailureClass::new(
            FailureKind::CompilerUnavailable,
            format!("cannot run {}: {err}", program.display()),
        )
    })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = stdin_bytes.to_vec();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(&input);
    });
    let mut stdout_pipe = child.stdout.take().expect("piped stdout");
    let stdout_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout_pipe.read_to_end(&mut buf);
        buf
    });
    let mut stderr_pipe = child.stderr.take().expect("piped stderr");
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    crate::util::kill_process_tree(&mut child);
                    let _ = child.wait();
                    let _ = writer.join();
                    let _ = stdout_reader.join();
                    let _ = stderr_reader.join();
                    return Err(FailureClass::new(
                        FailureKind::Timeout,
                        format!("compiler exceeded {}s budget", timeout.as_secs()),
                    ));
                }
                std::thread::sleep(Duration::from_millis(20));
            }
            Err(err) => {
                return Err(FailureClass::new(
                    FailureKind::CompileError,
                    format!("wait failed: {err}"),
                ))
            }
        }
    };
    let _ = writer.join();
    let stdout = stdout_reader.join().unwrap_or_default();
    let stderr = stderr_reader.join().unwrap_or_default();
    Ok(SubprocessOutput {
        stdout,
        stderr,
        status_success: status.success(),
    })
}

/// Writes artifacts as `<out>/<root-stem>.<Contract>.json`, returning the
/// written paths.
pub fn write_artifacts(
    out_dir: &Path,
    artifacts: &[CompilationArtifact],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for artifact in artifacts {
        let stem = Path::new(&artifact.source_file)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("unit");
        let path = out_dir.join(format!("{stem}.{}.json", artifact.contract_name));
        let mut text = serde_json::to_string_pretty(artifact).expect("serializable");
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
