//! Lexical extraction of pragmas, imports, and top-level declarations from
//! Solidity source text.
//!
//! No grammar, no AST: a scrubbing pass blanks comments and string contents
//! while preserving every character offset, and the extractors then scan the
//! scrubbed text for directives. Import paths are sliced out of the original
//! text at the offsets found in the scrubbed text, so the raw path survives
//! scrubbing byte-for-byte.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::version::{ConstraintParseError, VersionConstraint};

/// The four standard Solidity import syntaxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportForm {
    /// `import "a.sol";`
    Plain,
    /// `import "a.sol" as A;`
    Aliased,
    /// `import {X, Y as Z} from "a.sol";`
    SymbolList,
    /// `import * as A from "a.sol";`
    GlobAliased,
}

/// One import directive, with the path exactly as written between quotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportDirective {
    pub raw_path: String,
    pub form: ImportForm,
    /// Char index of the `import` keyword in the file.
    pub offset: usize,
}

/// A version pragma with the char offset of its `pragma` keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PragmaDirective {
    pub constraint: VersionConstraint,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeclarationKind {
    Contract,
    Library,
    Interface,
    AbstractContract,
}

impl DeclarationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeclarationKind::Contract => "contract",
            DeclarationKind::Library => "library",
            DeclarationKind::Interface => "interface",
            DeclarationKind::AbstractContract => "abstract-contract",
        }
    }

    /// Whether bytecode of this declaration can be deployed on its own.
    pub fn is_deployable(&self) -> bool {
        matches!(self, DeclarationKind::Contract)
    }
}

/// A top-level `contract`/`library`/`interface` declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub kind: DeclarationKind,
}

/// Everything the toolchain needs to know about one Solidity file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Normalized project-relative path.
    pub path: String,
    /// FNV-1a digest of the raw bytes, for change and conflict detection.
    pub content_hash: u64,
    pub pragmas: Vec<PragmaDirective>,
    pub imports: Vec<ImportDirective>,
    pub declarations: Vec<Declaration>,
}

impl SourceFile {
    /// Scrubs and scans `text`, producing the full per-file summary.
    pub fn scan(path: &str, text: &str) -> Result<SourceFile, SourceError> {
        let scrubbed = scrub(text)?;
        Ok(SourceFile {
            path: path.to_string(),
            content_hash: content_hash(text.as_bytes()),
            pragmas: extract_pragmas(&scrubbed)?,
            imports: extract_imports(&scrubbed, text)?,
            declarations: extract_declarations(&scrubbed),
        })
    }

    /// Conjunction of every version pragma in the file, `None` when the file
    /// carries no version pragma.
    pub fn constraint(&self) -> Option<VersionConstraint> {
        let mut iter = self.pragmas.iter();
        let first = iter.next()?.constraint.clone();
        Some(iter.fold(first, |acc, p| acc.and(&p.constraint)))
    }

    /// Whether the file declares at least one plain (deployable) contract.
    pub fn declares_contract(&self) -> bool {
        self.declarations.iter().any(|d| d.kind.is_deployable())
    }
}

/// Lexical errors surfaced while scanning one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceError {
    /// A `/*` comment never closed; `line` is the 1-based line of the opener.
    UnterminatedComment { line: usize },
    /// An `import` with no `;` before end of file.
    UnterminatedImport { offset: usize },
    /// A `pragma` with no `;` before end of file.
    UnterminatedPragma { offset: usize },
    /// An import whose quoted path is empty or unparseable.
    MalformedImport { offset: usize },
    /// An import syntax outside the four standard forms.
    UnsupportedImportForm { offset: usize },
    /// A version pragma whose constraint expression failed to parse.
    MalformedPragma {
        offset: usize,
        inner: ConstraintParseError,
    },
}

impl fmt::Display for SourceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceError::UnterminatedComment { line } => {
                write!(f, "unterminated block comment opened on line {line}")
            }
            SourceError::UnterminatedImport { offset } => {
                write!(
                    f,
                    "import directive at offset {offset} has no terminating `;`"
                )
            }
            SourceError::UnterminatedPragma { offset } => {
                write!(
                    f,
                    "pragma directive at offset {offset} has no terminating `;`"
                )
            }
            SourceError::MalformedImport { offset } => {
                write!(f, "malformed import directive at offset {offset}")
            }
            SourceError::UnsupportedImportForm { offset } => {
                write!(f, "unsupported import form at offset {offset}")
            }
            SourceError::MalformedPragma { offset, inner } => {
                write!(f, "malformed pragma at offset {offset}: {inner}")
            }
        }
    }
}

/// FNV-1a, 64-bit. Stable digest for change detection across runs.
pub fn content_hash(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Blanks comments and string-literal contents with spaces, preserving every
/// other character and all char offsets. String quote delimiters stay so the
/// extractors can locate quoted spans; newlines stay so line numbers in later
/// diagnostics remain valid. Output char length always equals input length.
pub fn scrub(text: &str) -> Result<String, SourceError> {
    #[derive(PartialEq)]
    enum State {
        Code,
        LineComment,
        BlockComment { open_line: usize },
        Str { quote: char, escaped: bool },
    }

    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut state = State::Code;
    let mut line = 1usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
        }
        match state {
            State::Code => match c {
                '/' if chars.get(i + 1) == Some(&'/') => {
                    state = State::LineComment;
                    out.push(' ');
                    out.push(' ');
                    i += 2;
                    continue;
                }
                '/' if chars.get(i + 1) == Some(&'*') => {
                    state = State::BlockComment { open_line: line };
                    out.push(' ');
                    out.push(' ');
                    i += 2;
                    continue;
                }
                '"' | '\'' => {
                    state = State::Str {
                        quote: c,
                        escaped: false,
                    };
                    out.push(c);
                }
                _ => out.push(c),
            },
            State::LineComment => {
                if c == '\n' {
                    state = State::Code;
                    out.push('\n');
                } else {
                    out.push(if c == '\r' { '\r' } else { ' ' });
                }
            }
            State::BlockComment { .. } => {
                if c == '*' && chars.get(i + 1) == Some(&'/') {
                    out.push(' ');
                    out.push(' ');
                    i += 2;
                    state = State::Code;
                    continue;
                }
                out.push(match c {
                    '\n' => '\n',
                    '\r' => '\r',
                    _ => ' ',
                });
            }
            State::Str { quote, escaped } => {
                if c == '\n' {
                    // Strings do not span lines; recover rather than give up.
                    state = State::Code;
                    out.push('\n');
                } else if escaped {
                    state = State::Str {
                        quote,
                        escaped: false,
                    };
                    out.push(' ');
                } else if c == '\\' {
                    state = State::Str {
                        quote,
                        escaped: true,
                    };
                    out.push(' ');
                } else if c == quote {
                    state = State::Code;
                    out.push(c);
                } else {
                    out.push(' ');
                }
            }
        }
        i += 1;
    }
    if let State::BlockComment { open_line } = state {
        return Err(SourceError::UnterminatedComment { line: open_line });
    }
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Char positions at which `keyword` occurs as a standalone identifier.
fn keyword_positions(chars: &[char], keyword: &str) -> Vec<usize> {
    let kw: Vec<char> = keyword.chars().collect();
    let mut positions = Vec::new();
    let mut i = 0;
    while i + kw.len() <= chars.len() {
        if chars[i..i + kw.len()] == kw[..] {
            let before_ok = i == 0 || !is_ident_char(chars[i - 1]);
            let after_ok = i + kw.len() == chars.len() || !is_ident_char(chars[i + kw.len()]);
            if before_ok && after_ok {
                positions.push(i);
                i += kw.len();
                continue;
            }
        }
        i += 1;
    }
    positions
}

fn skip_ws(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

fn find_before(chars: &[char], mut i: usize, end: usize, target: char) -> Option<usize> {
    while i < end {
        if chars[i] == target {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Extracts every `pragma solidity ...;` constraint, in file order.
/// Non-version pragmas (abicoder, experimental, ...) are ignored.
/// Expects scrubbed text.
pub fn extract_pragmas(scrubbed: &str) -> Result<Vec<PragmaDirective>, SourceError> {
    let chars: Vec<char> = scrubbed.chars().collect();
    let mut pragmas = Vec::new();
    for offset in keyword_positions(&chars, "pragma") {
        let after = skip_ws(&chars, offset + "pragma".len());
        let mut end = after;
        while end < chars.len() && is_ident_char(chars[end]) {
            end += 1;
        }
        let tag: String = chars[after..end].iter().collect();
        let semi = find_before(&chars, end, chars.len(), ';')
            .ok_or(SourceError::UnterminatedPragma { offset })?;
        if tag != "solidity" {
            continue;
        }
        let expr: String = chars[end..semi].iter().collect();
        let expr_start = end;
        let constraint = VersionConstraint::parse(expr.trim()).map_err(|inner| {
            SourceError::MalformedPragma {
                offset: expr_start + inner.offset,
                inner,
            }
        })?;
        pragmas.push(PragmaDirective { constraint, offset });
    }
    Ok(pragmas)
}

/// Extracts every import directive from scrubbed text, slicing the raw path
/// out of `original` at the quoted span's offsets.
pub fn extract_imports(
    scrubbed: &str,
    original: &str,
) -> Result<Vec<ImportDirective>, SourceError> {
    let chars: Vec<char> = scrubbed.chars().collect();
    let orig: Vec<char> = original.chars().collect();
    let mut imports = Vec::new();
    for offset in keyword_positions(&chars, "import") {
        let semi = find_before(&chars, offset, chars.len(), ';')
            .ok_or(SourceError::UnterminatedImport { offset })?;
        let mut cursor = skip_ws(&chars, offset + "import".len());
        if cursor >= semi {
            return Err(SourceError::MalformedImport { offset });
        }
        let form = match chars[cursor] {
            '"' | '\'' => {
                // Plain or aliased: path first, optional `as` after it.
                let close = find_before(&chars, cursor + 1, semi, chars[cursor])
                    .ok_or(SourceError::MalformedImport { offset })?;
                let rest: String = chars[close + 1..semi].iter().collect();
                if rest.split_whitespace().next() == Some("as") {
                    ImportForm::Aliased
                } else {
                    ImportForm::Plain
                }
            }
            '{' => {
                cursor = find_before(&chars, cursor, semi, '}')
                    .ok_or(SourceError::MalformedImport { offset })?;
                ImportForm::SymbolList
            }
            '*' => ImportForm::GlobAliased,
            _ => return Err(SourceError::UnsupportedImportForm { offset }),
        };
        // The quoted path is the first quoted span at or after the cursor.
        let open = (cursor..semi)
            .find(|&i| chars[i] == '"' || chars[i] == '\'')
            .ok_or(SourceError::MalformedImport { offset })?;
        let close = find_before(&chars, open + 1, semi, chars[open])
            .ok_or(SourceError::MalformedImport { offset })?;
        let raw_path: String = orig[open + 1..close].iter().collect();
        if raw_path.is_empty() {
            return Err(SourceError::MalformedImport { offset });
        }
        imports.push(ImportDirective {
            raw_path,
            form,
            offset,
        });
    }
    Ok(imports)
}

/// Best-effort scan for top-level `contract`/`library`/`interface`
/// declarations; nested braces are skipped by depth counting.
pub fn extract_declarations(scrubbed: &str) -> Vec<Declaration> {
    let chars: Vec<char> = scrubbed.chars().collect();
    let mut declarations = Vec::new();
    let mut depth = 0i32;
    let mut i = 0;
    let mut abstract_pending = false;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' {
            depth += 1;
            i += 1;
            continue;
        }
        if c == '}' {
            depth -= 1;
            i += 1;
            continue;
        }
        if depth == 0 && is_ident_char(c) && (i == 0 || !is_ident_char(chars[i - 1])) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let kind = match word.as_str() {
                "abstract" => {
                    abstract_pending = true;
                    continue;
                }
                "contract" if abstract_pending => Some(DeclarationKind::AbstractContract),
                "contract" => Some(DeclarationKind::Contract),
                "library" => Some(DeclarationKind::Library),
                "interface" => Some(DeclarationKind::Interface),
                _ => {
                    abstract_pending = false;
                    continue;
                }
            };
            abstract_pending = false;
            if let Some(kind) = kind {
                let name_start = skip_ws(&chars, i);
                let mut name_end = name_start;
                while name_end < chars.len() && is_ident_char(chars[name_end]) {
                    name_end += 1;
                }
                if name_end > name_start {
                    declarations.push(Declaration {
                        name: chars[name_start..name_end].iter().collect(),
                        kind,
                    });
                    i = name_end;
                }
            }
            continue;
        }
        i += 1;
    }
    declarations
}
