//! The SWC weakness label model: IDs, per-file findings, analysis reports,
//! and corpus-level aggregation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::version::VersionConstraint;

/// Lowest registered SWC identifier.
pub const SWC_MIN: u32 = 100;
/// Highest registered SWC identifier.
pub const SWC_MAX: u32 = 136;

/// A registry identifier in the closed range SWC-100 ..= SWC-136.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwcId(u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SwcIdError {
    OutOfRange(u32),
    BadFormat(String),
}

impl fmt::Display for SwcIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwcIdError::OutOfRange(n) => {
                write!(
                    f,
                    "SWC-{n} is outside the registry range {SWC_MIN}..={SWC_MAX}"
                )
            }
            SwcIdError::BadFormat(s) => write!(f, "`{s}` is not of the form SWC-<number>"),
        }
    }
}

impl SwcId {
    pub fn new(number: u32) -> Result<Self, SwcIdError> {
        if (SWC_MIN..=SWC_MAX).contains(&number) {
            Ok(SwcId(number))
        } else {
            Err(SwcIdError::OutOfRange(number))
        }
    }

    /// Parses the canonical `SWC-<n>` form, case-sensitively. Lenient mode
    /// additionally trims surrounding whitespace, nothing more.
    pub fn parse(text: &str, lenient: bool) -> Result<Self, SwcIdError> {
        let text = if lenient { text.trim() } else { text };
        let number = text
            .strip_prefix("SWC-")
            .and_then(|n| n.parse::<u32>().ok())
            .ok_or_else(|| SwcIdError::BadFormat(text.to_string()))?;
        SwcId::new(number)
    }

    pub fn number(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for SwcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SWC-{}", self.0)
    }
}

/// The function a finding belongs to, or the N/A marker for weaknesses that
/// span a whole file (or the whole project).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionRef {
    Named(String),
    NotApplicable,
}

impl FunctionRef {
    pub fn as_str(&self) -> &str {
        match self {
            FunctionRef::Named(name) => name,
            FunctionRef::NotApplicable => "N/A",
        }
    }
}

/// One labeled weakness in one Solidity file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwcFinding {
    pub category: SwcId,
    pub function: FunctionRef,
    pub line_numbers: Vec<u32>,
}

/// The labels attached to one Solidity file. `findings` empty means the file
/// was analyzed and found clean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub file_path: String,
    pub findings: Vec<SwcFinding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportInvariantError {
    EmptyFilePath,
    ZeroLineNumber { category: SwcId },
    MissingLineNumbers { category: SwcId },
}

impl fmt::Display for ReportInvariantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportInvariantError::EmptyFilePath => f.write_str("filePath is empty"),
            ReportInvariantError::ZeroLineNumber { category } => {
                write!(f, "{category} finding has a non-positive line number")
            }
            ReportInvariantError::MissingLineNumbers { category } => {
                write!(
                    f,
                    "{category} finding has no line numbers and names a function"
                )
            }
        }
    }
}

impl AnalysisReport {
    /// Checks the structural invariants: non-empty path, positive line
    /// numbers, and line numbers present unless the finding is file-scoped
    /// (function = N/A).
    pub fn validate(&self) -> Result<(), ReportInvariantError> {
        if self.file_path.is_empty() {
            return Err(ReportInvariantError::EmptyFilePath);
        }
        for finding in &self.findings {
            if finding.line_numbers.contains(&0) {
                return Err(ReportInvariantError::ZeroLineNumber {
                    category: finding.category,
                });
            }
            if finding.line_numbers.is_empty()
                && !matches!(finding.function, FunctionRef::NotApplicable)
            {
                return Err(ReportInvariantError::MissingLineNumbers {
                    category: finding.category,
                });
            }
        }
        Ok(())
    }
}

/// Compiler-version series a DApp is bucketed into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CompilerSeries {
    V04,
    V05,
    V06,
    V07,
    V08,
    Other,
}

impl CompilerSeries {
    pub const ALL: [CompilerSeries; 6] = [
        CompilerSeries::V04,
        CompilerSeries::V05,
        CompilerSeries::V06,
        CompilerSeries::V07,
        CompilerSeries::V08,
        CompilerSeries::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CompilerSeries::V04 => "0.4+",
            CompilerSeries::V05 => "0.5+",
            CompilerSeries::V06 => "0.6+",
            CompilerSeries::V07 => "0.7+",
            CompilerSeries::V08 => "0.8+",
            CompilerSeries::Other => "other",
        }
    }

    /// Buckets a constraint by the lowest version it admits.
    pub fn of_constraint(constraint: Option<&VersionConstraint>) -> CompilerSeries {
        let Some(version) = constraint.and_then(|c| c.minimal_admitted()) else {
            return CompilerSeries::Other;
        };
        if version.major != 0 {
            return CompilerSeries::Other;
        }
        match version.minor {
            4 => CompilerSeries::V04,
            5 => CompilerSeries::V05,
            6 => CompilerSeries::V06,
            7 => CompilerSeries::V07,
            8 => CompilerSeries::V08,
            _ => CompilerSeries::Other,
        }
    }
}

impl fmt::Display for CompilerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-project facts the aggregator needs; the caller scans the project.
#[derive(Debug, Clone)]
pub struct ProjectSummary {
    pub files: u64,
    pub lines_of_code: u64,
    pub series: CompilerSeries,
}

/// Corpus-level aggregates over reports and projects.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    /// Finding occurrences per SWC id.
    pub per_swc: BTreeMap<u32, u64>,
    /// DApp count per compiler series; keys always cover every series.
    pub buckets: BTreeMap<CompilerSeries, u64>,
    /// Mean lines of code per project.
    pub avg_loc: f64,
    pub total_projects: u64,
    pub total_files: u64,
    pub total_findings: u64,
}

/// Aggregates reports and project summaries into corpus statistics.
/// Aggregation is associative and order-independent.
pub fn corpus_stats(reports: &[AnalysisReport], projects: &[ProjectSummary]) -> CorpusStats {
    let mut per_swc: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total_findings = 0u64;
    for report in reports {
        for finding in &report.findings {
            *per_swc.entry(finding.category.number()).or_insert(0) += 1;
            total_findings += 1;
        }
    }
    let mut buckets: BTreeMap<CompilerSeries, u64> = CompilerSeries::ALL
        .iter()
        .map(|series| (*series, 0))
        .collect();
    let mut total_loc = 0u64;
    let mut total_files = 0u64;
    for project in projects {
        *buckets
            .get_mut(&project.series)
            .expect("all series present") += 1;
        total_loc += project.lines_of_code;
        total_files += project.files;
    }
    let total_projects = projects.len() as u64;
    let avg_loc = if total_projects == 0 {
        0.0
    } else {
        total_loc as f64 / total_projects as f64
    };
    CorpusStats {
        per_swc,
        buckets,
        avg_loc,
        total_projects,
        total_files,
        total_findings,
    }
}
