//! Normalized project-relative path algebra.
//!
//! All paths handled by this crate use forward slashes and contain no `.` or
//! `..` segments. Normalization happens once, at the boundary; every other
//! module can then compare paths as plain strings.

use alloc::string::String;
use alloc::vec::Vec;

/// Normalizes a path: forward slashes, no empty/`.` segments, `..` resolved.
///
/// Returns `None` when `..` would climb above the root, i.e. the path escapes
/// the project.
pub fn normalize(path: &str) -> Option<String> {
    let mut stack: Vec<&str> = Vec::new();
    for segment in path.split(['/', '\\']) {
        match segment {
            "" | "." => {}
            ".." => {
                stack.pop()?;
            }
            s => stack.push(s),
        }
    }
    Some(stack.join("/"))
}

/// The directory part of a normalized path; `""` for top-level entries.
pub fn parent(path: &str) -> &str {
    match path.rfind('/') {
        Some(idx) => &path[..idx],
        None => "",
    }
}

/// Joins a relative import path onto a base directory and normalizes.
pub fn join(base_dir: &str, relative: &str) -> Option<String> {
    if base_dir.is_empty() {
        normalize(relative)
    } else {
        let mut joined = String::with_capacity(base_dir.len() + relative.len() + 1);
        joined.push_str(base_dir);
        joined.push('/');
        joined.push_str(relative);
        normalize(&joined)
    }
}
