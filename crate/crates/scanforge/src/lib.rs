//! Disk, subprocess, and CLI layer over `scanforge-core`.
//!
//! Modules mirror the pipeline: [`project`] scans a DApp tree and builds its
//! import graph, [`registry`] vendors missing library packages, [`solc`]
//! drives the Solidity compiler over its standard-JSON protocol, [`reports`]
//! reads and summarizes SWC analysis reports, and [`bench`] runs external
//! detectors under a time budget and scores them.

pub mod bench;
pub mod cli;
pub mod project;
pub mod registry;
pub mod reports;
pub mod solc;
pub mod util;
