//! Classification of compilation failures into the small taxonomy the rest
//! of the toolchain reports on: missing project files, compiler version
//! misconfiguration, plain compile errors, unavailable compilers, timeouts.

use alloc::string::{String, ToString};
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureKind {
    MissingFile,
    VersionMismatch,
    CompileError,
    CompilerUnavailable,
    Timeout,
}

impl FailureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureKind::MissingFile => "missing-file",
            FailureKind::VersionMismatch => "version-mismatch",
            FailureKind::CompileError => "compile-error",
            FailureKind::CompilerUnavailable => "compiler-unavailable",
            FailureKind::Timeout => "timeout",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classified compilation failure with its original diagnostic text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureClass {
    pub kind: FailureKind,
    pub detail: String,
}

impl FailureClass {
    pub fn new(kind: FailureKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

/// Maps raw compiler diagnostics onto a [`FailureKind`].
///
/// File-not-found wording wins over version wording when both appear, since
/// a missing source is the more fundamental defect.
pub fn classify_failure(diagnostics: &str) -> FailureClass {
    let kind = if diagnostics.contains("not found: File not found")
        || diagnostics.contains("File not found")
        || (diagnostics.contains("Source \"") && diagnostics.contains("\" not found"))
        || diagnostics.contains("File outside of allowed directories")
    {
        FailureKind::MissingFile
    } else if diagnostics.contains("requires different compiler version") {
        FailureKind::VersionMismatch
    } else {
        FailureKind::CompileError
    };
    FailureClass {
        kind,
        detail: diagnostics.trim().to_string(),
    }
}
