//! Automatic offload-pattern search for mixed destination environments.
//!
//! An application is scanned for `for` loops and function-call blocks, then
//! verified stage by stage against many-core CPU, GPU and FPGA devices:
//! function-block replacement first, loop offloading second. CPU and GPU loop
//! stages run a genetic algorithm over per-loop offload bits; the FPGA loop
//! stage narrows candidates by arithmetic intensity and resource efficiency
//! before measuring a handful of patterns. Measurements come from an
//! [`eval::Evaluator`], either the deterministic simulator or external
//! compile/run commands.

pub mod blocks;
pub mod code_model;
pub mod config;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fpga;
pub mod ga;
pub mod pattern;
pub mod plan;
pub mod report;

pub use error::{Error, Result};
pub use pattern::{DeviceKind, Gene, OffloadMethod, OffloadPattern};
