//! Core algorithms for turning raw multi-file DApp projects into compilable
//! units and for scoring weakness-detection tools against labeled datasets.
//!
//! Everything in this crate is pure computation over owned data: no file
//! system, no subprocesses, no clocks. The companion `scanforge` crate wires
//! these pieces to disk, compilers, and the command line.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod failure;
pub mod graph;
pub mod paths;
pub mod score;
pub mod source;
pub mod swc;
pub mod version;

pub use failure::{classify_failure, FailureClass, FailureKind};
pub use graph::{DependencyGraph, MissingExternal, Resolution};
pub use source::{ImportDirective, ImportForm, SourceFile};
pub use swc::{AnalysisReport, SwcFinding, SwcId};
pub use version::{Version, VersionConstraint};
