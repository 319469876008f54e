//! Solidity pragma version constraints and compiler release selection.
//!
//! A pragma like `pragma solidity >=0.6.0 <0.8.0;` is a conjunction of
//! clauses. This module parses those constraints, evaluates satisfaction,
//! intersects constraints across files, and picks the highest compiler
//! release admitted by a constraint.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// An exact compiler version triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Version {
    pub major: u32,
    pub minor: u32,
    pub patch: u32,
}

impl Version {
    pub const fn new(major: u32, minor: u32, patch: u32) -> Self {
        Self {
            major,
            minor,
            patch,
        }
    }

    /// Parses `M`, `M.m`, or `M.m.p`; missing components default to zero.
    pub fn parse(text: &str) -> Option<Self> {
        let mut parts = text.split('.');
        let major = parse_component(parts.next()?)?;
        let minor = match parts.next() {
            Some(p) => parse_component(p)?,
            None => 0,
        };
        let patch = match parts.next() {
            Some(p) => parse_component(p)?,
            None => 0,
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Self::new(major, minor, patch))
    }

    /// The first version that a caret constraint on `self` no longer admits.
    ///
    /// `^1.2.3` admits up to (excl.) 2.0.0, `^0.8.1` up to 0.9.0, and
    /// `^0.0.3` up to 0.0.4.
    pub fn next_breaking(&self) -> Version {
        if self.major > 0 {
            Version::new(self.major + 1, 0, 0)
        } else if self.minor > 0 {
            Version::new(0, self.minor + 1, 0)
        } else {
            Version::new(0, 0, self.patch + 1)
        }
    }
}

fn parse_component(text: &str) -> Option<u32> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

/// Comparison operator of a single constraint clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Exact,
    Greater,
    GreaterEq,
    Less,
    LessEq,
    Caret,
}

impl Comparator {
    fn as_str(&self) -> &'static str {
        match self {
            Comparator::Exact => "=",
            Comparator::Greater => ">",
            Comparator::GreaterEq => ">=",
            Comparator::Less => "<",
            Comparator::LessEq => "<=",
            Comparator::Caret => "^",
        }
    }
}

/// One comparator applied to one version.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clause {
    pub comparator: Comparator,
    pub version: Version,
}

impl Clause {
    pub fn matches(&self, v: Version) -> bool {
        match self.comparator {
            Comparator::Exact => v == self.version,
            Comparator::Greater => v > self.version,
            Comparator::GreaterEq => v >= self.version,
            Comparator::Less => v < self.version,
            Comparator::LessEq => v <= self.version,
            Comparator::Caret => v >= self.version && v < self.version.next_breaking(),
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.comparator.as_str(), self.version)
    }
}

/// A conjunction of clauses; always holds at least one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionConstraint {
    clauses: Vec<Clause>,
}

/// Error raised while parsing a constraint expression. `offset` is the char
/// index of the offending token within the expression text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ConstraintParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

impl VersionConstraint {
    pub fn new(clauses: Vec<Clause>) -> Option<Self> {
        if clauses.is_empty() {
            None
        } else {
            Some(Self { clauses })
        }
    }

    pub fn exact(version: Version) -> Self {
        Self {
            clauses: alloc::vec![Clause {
                comparator: Comparator::Exact,
                version
            }],
        }
    }

    pub fn caret(version: Version) -> Self {
        Self {
            clauses: alloc::vec![Clause {
                comparator: Comparator::Caret,
                version
            }],
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Parses a pragma constraint expression such as `^0.8.0` or
    /// `>=0.6.0 <0.8.0`. A bare version means an exact requirement.
    ///
    /// Only the comparators `= > >= < <= ^` are understood; anything else
    /// (ranges with `||`, tildes, wildcards) is rejected so the caller can
    /// flag the file.
    pub fn parse(text: &str) -> Result<Self, ConstraintParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut clauses = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let comparator = match chars[i] {
                '^' => {
                    i += 1;
                    Comparator::Caret
                }
                '=' => {
                    i += 1;
                    Comparator::Exact
                }
                '>' => {
                    i += 1;
                    if chars.get(i) == Some(&'=') {
                        i += 1;
                        Comparator::GreaterEq
                    } else {
                        Comparator::Greater
                    }
                }
                '<' => {
                    i += 1;
                    if chars.get(i) == Some(&'=') {
                        i += 1;
                        Comparator::LessEq
                    } else {
                        Comparator::Less
                    }
                }
                c if c.is_ascii_digit() => Comparator::Exact,
                c => {
                    return Err(ConstraintParseError {
                        offset: i,
                        message: format!("unsupported constraint token `{c}`"),
                    })
                }
            };
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            let version = Version::parse(&token).ok_or_else(|| ConstraintParseError {
                offset: start,
                message: format!("malformed version `{token}`"),
            })?;
            clauses.push(Clause {
                comparator,
                version,
            });
        }
        VersionConstraint::new(clauses).ok_or_else(|| ConstraintParseError {
            offset: 0,
            message: "empty constraint expression".to_string(),
        })
    }

    pub fn satisfies(&self, version: Version) -> bool {
        self.clauses.iter().all(|c| c.matches(version))
    }

    /// Conjunction of two constraints; duplicate clauses collapse.
    pub fn and(&self, other: &VersionConstraint) -> VersionConstraint {
        let mut clauses = self.clauses.clone();
        for clause in &other.clauses {
            if !clauses.contains(clause) {
                clauses.push(*clause);
            }
        }
        VersionConstraint { clauses }
    }

    /// The version interval admitted by this conjunction.
    pub fn interval(&self) -> VersionInterval {
        let mut interval = VersionInterval::unbounded();
        for clause in &self.clauses {
            let v = clause.version;
            match clause.comparator {
                Comparator::Exact => {
                    interval.tighten_low(v, true);
                    interval.tighten_high(v, true);
                }
                Comparator::Greater => interval.tighten_low(v, false),
                Comparator::GreaterEq => interval.tighten_low(v, true),
                Comparator::Less => interval.tighten_high(v, false),
                Comparator::LessEq => interval.tighten_high(v, true),
                Comparator::Caret => {
                    interval.tighten_low(v, true);
                    interval.tighten_high(v.next_breaking(), false);
                }
            }
        }
        interval
    }

    /// Whether any version at all can satisfy the conjunction.
    pub fn is_satisfiable(&self) -> bool {
        !self.interval().is_empty()
    }

    /// The lowest version the constraint admits, when bounded below.
    pub fn minimal_admitted(&self) -> Option<Version> {
        let interval = self.interval();
        if interval.is_empty() {
            return None;
        }
        interval.low.map(|(v, inclusive)| {
            if inclusive {
                v
            } else {
                Version::new(v.major, v.minor, v.patch + 1)
            }
        })
    }

    /// The highest release in `available` that satisfies the constraint.
    pub fn max_satisfying(&self, available: &[Version]) -> Option<Version> {
        available
            .iter()
            .copied()
            .filter(|v| self.satisfies(*v))
            .max()
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{clause}")?;
        }
        Ok(())
    }
}

/// Closed/open interval over version triples. `None` bounds are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VersionInterval {
    /// Lower bound and whether it is inclusive.
    pub low: Option<(Version, bool)>,
    /// Upper bound and whether it is inclusive.
    pub high: Option<(Version, bool)>,
}

impl VersionInterval {
    pub fn unbounded() -> Self {
        Self {
            low: None,
            high: None,
        }
    }

    fn tighten_low(&mut self, v: Version, inclusive: bool) {
        let replace = match self.low {
            None => true,
            Some((cur, cur_inc)) => v > cur || (v == cur && cur_inc && !inclusive),
        };
        if replace {
            self.low = Some((v, inclusive));
        }
    }

    fn tighten_high(&mut self, v: Version, inclusive: bool) {
        let replace = match self.high {
            None => true,
            Some((cur, cur_inc)) => v < cur || (v == cur && cur_inc && !inclusive),
        };
        if replace {
            self.high = Some((v, inclusive));
        }
    }

    pub fn is_empty(&self) -> bool {
        match (self.low, self.high) {
            (Some((lo, lo_inc)), Some((hi, hi_inc))) => {
                lo > hi || (lo == hi && !(lo_inc && hi_inc))
            }
            _ => false,
        }
    }
}

/// How version agreement across a compilation unit is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// Dependencies must admit the version solved for the root file.
    Strict,
    /// The unit compiles with the intersection of all file constraints.
    Intersect,
}

/// A version-consistency violation, naming the files that conflict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionMismatch {
    pub files: Vec<String>,
    pub detail: String,
}

impl fmt::Display for VersionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)
    }
}

/// Checks version agreement across the files of a compilation unit and
/// returns the effective constraint the unit compiles under.
///
/// `files` pairs each closure member with the conjunction of its pragma
/// constraints (`None` when the file carries no version pragma). In strict
/// mode the root's constraint is solved against `available` (falling back to
/// the lowest admitted version when no inventory is known) and every
/// dependency must admit that version. In intersect mode all constraints are
/// intersected and the result must be satisfiable.
pub fn check_consistency(
    root: &str,
    files: &[(String, Option<VersionConstraint>)],
    mode: ConsistencyMode,
    available: &[Version],
) -> Result<Option<VersionConstraint>, VersionMismatch> {
    match mode {
        ConsistencyMode::Strict => {
            let root_constraint = files
                .iter()
                .find(|(path, _)| path == root)
                .and_then(|(_, c)| c.clone());
            let Some(root_constraint) = root_constraint else {
                return Ok(None);
            };
            let target = root_constraint
                .max_satisfying(available)
                .or_else(|| root_constraint.minimal_admitted());
            let Some(target) = target else {
                return Ok(Some(root_constraint));
            };
            let offending: Vec<String> = files
                .iter()
                .filter(|(path, constraint)| {
                    path != root && constraint.as_ref().is_some_and(|c| !c.satisfies(target))
                })
                .map(|(path, _)| path.clone())
                .collect();
            if offending.is_empty() {
                Ok(Some(root_constraint))
            } else {
                let listed = offending.join(", ");
                Err(VersionMismatch {
                    detail: format!(
                        "root `{root}` resolves to {target} but {listed} exclude(s) that version"
                    ),
                    files: offending,
                })
            }
        }
        ConsistencyMode::Intersect => {
            let mut effective: Option<VersionConstraint> = None;
            let mut constrained: Vec<String> = Vec::new();
            for (path, constraint) in files {
                let Some(constraint) = constraint else {
                    continue;
                };
                constrained.push(path.clone());
                let combined = match &effective {
                    None => constraint.clone(),
                    Some(current) => current.and(constraint),
                };
                if !combined.is_satisfiable() {
                    let listed = constrained.join(", ");
                    return Err(VersionMismatch {
                        detail: format!(
                            "no compiler version satisfies the combined pragmas of {listed}"
                        ),
                        files: constrained,
                    });
                }
                effective = Some(combined);
            }
            Ok(effective)
        }
    }
}
