//! Local registry of external library packages and vendoring of missing
//! packages into a project.
//!
//! Registry layout on disk: `<root>/<package>/<version>/<subpath...>` plus a
//! human-editable `registry.json` manifest. Vendoring copies a selected
//! package version into `<project>/.scanforge/lib/<package>/` and hands back
//! the remapping that makes the project's imports resolve to it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use scanforge_core::source::{content_hash, SourceFile};
use scanforge_core::version::{Version, VersionConstraint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::project::VENDOR_PREFIX;
use crate::util::{walk_sorted, LockGuard};

pub const MANIFEST_FILE: &str = "registry.json";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("package {package} version {version} already exists in the registry")]
    Duplicate { package: String, version: String },
    #[error("{dir} contains no .sol files")]
    EmptySource { dir: String },
    #[error("version `{0}` is not an exact semantic version")]
    BadVersion(String),
    #[error("package {package} not found in the registry")]
    UnknownPackage { package: String },
    #[error("no version of {package} satisfies the request: {near_misses}")]
    NoVersion {
        package: String,
        near_misses: String,
    },
    #[error("vendored file {path} differs from the registry copy; pass --force to overwrite")]
    VendorConflict { path: String },
    #[error("registry manifest {path} is invalid: {message}")]
    BadManifest { path: String, message: String },
    #[error("{0}")]
    Io(#[from] io::Error),
}

/// One stored package version.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PackageVersion {
    pub package: String,
    pub version: String,
    pub files: Vec<String>,
    /// Constraint satisfied by the package's own sources; `null` when the
    /// sources carry no version pragma.
    pub pragma_range: Option<String>,
}

impl PackageVersion {
    pub fn parsed_version(&self) -> Option<Version> {
        Version::parse(&self.version)
    }

    pub fn parsed_range(&self) -> Option<VersionConstraint> {
        self.pragma_range
            .as_deref()
            .and_then(|r| VersionConstraint::parse(r).ok())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    packages: Vec<PackageVersion>,
}

/// A package registry rooted at one directory.
#[derive(Debug)]
pub struct Registry {
    root: PathBuf,
    manifest: Manifest,
}

impl Registry {
    /// Opens (or initializes) the registry at `root`.
    pub fn open(root: &Path) -> Result<Registry, RegistryError> {
        let manifest_path = root.join(MANIFEST_FILE);
        let manifest = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path)?;
            serde_json::from_str(&text).map_err(|err| RegistryError::BadManifest {
                path: manifest_path.display().to_string(),
                message: err.to_string(),
            })?
        } else {
            Manifest::default()
        };
        Ok(Registry {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn packages(&self) -> &[PackageVersion] {
        &self.manifest.packages
    }

    pub fn entry(&self, package: &str, version: &str) -> Option<&PackageVersion> {
        self.manifest
            .packages
            .iter()
            .find(|p| p.package == package && p.version == version)
    }

    fn persist(&self) -> Result<(), RegistryError> {
        let mut sorted = self.manifest.clone();
        sorted.packages.sort_by(|a, b| {
            (a.package.as_str(), a.version.as_str()).cmp(&(b.package.as_str(), b.version.as_str()))
        });
        let mut text = serde_json::to_string_pretty(&sorted).expect("serializable");
        text.push('\n');
        fs::write(self.root.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Copies `source_dir`'s `.sol` tree into the registry as
    /// `package@version` and records it in the manifest. The stored
    /// `pragma_range` is the intersection of every contained pragma.
    pub fn add(
        &mut self,
        package: &str,
        version: &str,
        source_dir: &Path,
    ) -> Result<PackageVersion, RegistryError> {
        if Version::parse(version).is_none() {
            return Err(RegistryError::BadVersion(version.to_string()));
        }
        if self.entry(package, version).is_some() {
            return Err(RegistryError::Duplicate {
                package: package.to_string(),
                version: version.to_string(),
            });
        }
        let sources = walk_sorted(source_dir, &|name| name.starts_with('.'))?;
        let sol_files: Vec<PathBuf> = sources
            .into_iter()
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("sol"))
            .collect();
        if sol_files.is_empty() {
            return Err(RegistryError::EmptySource {
                dir: source_dir.display().to_string(),
            });
        }

        let _lock = LockGuard::acquire(&self.root)?;
        let target_root = self.root.join(package).join(version);
        let mut files = Vec::new();
        let mut range: Option<VersionConstraint> = None;
        for file in &sol_files {
            let subpath = file
                .strip_prefix(source_dir)
                .expect("walker stays under source dir")
                .to_string_lossy()
                .replace('\\', "/");
            let text = fs::read_to_string(file)?;
            if let Ok(parsed) = SourceFile::scan(&subpath, &text) {
                if let Some(constraint) = parsed.constraint() {
                    range = Some(match range {
                        None => constraint,
                        Some(current) => current.and(&constraint),
                    });
                }
            }
            let target = target_root.join(&subpath);
            fs::create_dir_all(target.parent().expect("file has parent"))?;
            fs::write(&target, text)?;
            files.push(subpath);
        }
        files.sort();
        let entry = PackageVersion {
            package: package.to_string(),
            version: version.to_string(),
            files,
            pragma_range: range.map(|r| r.to_string()),
        };
        self.manifest.packages.push(entry.clone());
        self.persist()?;
        Ok(entry)
    }

    /// Selects the best version of `package`: every `needed_subpaths` entry
    /// must exist in the version's file list AND the stored pragma range
    /// must intersect `project_constraint`; among survivors the highest
    /// version wins.
    pub fn select_version(
        &self,
        package: &str,
        project_constraint: Option<&VersionConstraint>,
        needed_subpaths: &[String],
    ) -> Result<&PackageVersion, RegistryError> {
        let candidates: Vec<&PackageVersion> = self
            .manifest
            .packages
            .iter()
            .filter(|p| p.package == package)
            .collect();
        if candidates.is_empty() {
            return Err(RegistryError::UnknownPackage {
                package: package.to_string(),
            });
        }
        let mut near_misses = Vec::new();
        let mut best: Option<&PackageVersion> = None;
        for candidate in candidates {
            let missing: Vec<&String> = needed_subpaths
                .iter()
                .filter(|needed| !candidate.files.contains(needed))
                .collect();
            if !missing.is_empty() {
                near_misses.push(format!(
                    "{} lacks {}",
                    candidate.version,
                    missing
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                continue;
            }
            let compatible = match (project_constraint, candidate.parsed_range()) {
                (Some(project), Some(range)) => project.and(&range).is_satisfiable(),
                _ => true,
            };
            if !compatible {
                near_misses.push(format!(
                    "{} pragma range {} is incompatible with the project",
                    candidate.version,
                    candidate.pragma_range.as_deref().unwrap_or("-")
                ));
                continue;
            }
            let better = match best {
                None => true,
                Some(current) => candidate.parsed_version() > current.parsed_version(),
            };
            if better {
                best = Some(candidate);
            }
        }
        best.ok_or_else(|| RegistryError::NoVersion {
            package: package.to_string(),
            near_misses: if near_misses.is_empty() {
                "no candidates".to_string()
            } else {
                near_misses.join("; ")
            },
        })
    }

    /// Copies a selected package version into the project's vendor tree.
    ///
    /// Identical existing content is left untouched (idempotent); differing
    /// content is a conflict unless `force` is set. Returns the vendored
    /// file paths (project-relative) and the remapping entry that makes the
    /// package's imports resolve.
    pub fn vendor(
        &self,
        selection: &PackageVersion,
        project_root: &Path,
        force: bool,
    ) -> Result<VendorOutcome, RegistryError> {
        let source_root = self.root.join(&selection.package).join(&selection.version);
        let vendor_root = project_root.join(VENDOR_PREFIX).join(&selection.package);
        let _lock = LockGuard::acquire(&project_root.join(crate::project::SCANFORGE_DIR))?;
        let mut written = Vec::new();
        let mut reused = 0usize;
        for subpath in &selection.files {
            let from = source_root.join(subpath);
            let to = vendor_root.join(subpath);
            let content = fs::read(&from)?;
            let relative = format!("{VENDOR_PREFIX}/{}/{subpath}", selection.package);
            if to.exists() {
                let existing = fs::read(&to)?;
                if content_hash(&existing) == content_hash(&content) && existing == content {
                    reused += 1;
                    written.push(relative);
                    continue;
                }
                if !force {
                    return Err(RegistryError::VendorConflict { path: relative });
                }
            }
            fs::create_dir_all(to.parent().expect("file has parent"))?;
            fs::write(&to, content)?;
            written.push(relative);
        }
        written.sort();
        Ok(VendorOutcome {
            files: written,
            reused,
            remapping: (
                format!("{}/", selection.package),
                format!("{VENDOR_PREFIX}/{}/", selection.package),
            ),
        })
    }
}

/// Result of vendoring one package version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VendorOutcome {
    /// Project-relative paths now present under the vendor tree.
    pub files: Vec<String>,
    /// How many of those were already present with identical content.
    pub reused: usize,
    /// `(import prefix, vendor directory)` remapping.
    pub remapping: (String, String),
}
