//! Source model: loop and call-site inventories over a C subset, plus the
//! rewrites the search applies (directive insertion, block substitution).
//!
//! The scanner understands function definitions, `for`/`while`/`do`/`switch`
//! statements and call expressions. It does not run the preprocessor; `#`
//! lines are skipped.

mod lexer;
mod rewrite;
mod scan;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ScanError};

pub use lexer::{tokenize, Token, TokenKind};
pub use rewrite::{insert_parallel_directives, substitute_function_block};
pub use scan::{normalize_tokens, scan_function_blocks, scan_loops};

/// Half-open byte range into a [`SourceUnit`]'s text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A call site already redirected to an accelerated entry point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedSubstitution {
    pub span: Span,
    pub callee: String,
    pub entry_point: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    /// SHA-256 of `text`, lowercase hex.
    pub checksum: String,
    pub substitutions: Vec<AppliedSubstitution>,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        SourceUnit {
            path: path.into(),
            checksum: checksum(&text),
            text,
            substitutions: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|_| ScanError {
            path: path.display().to_string(),
            offset: 0,
            message: "source is not valid UTF-8".into(),
        })?;
        Ok(SourceUnit::new(path.display().to_string(), text))
    }

    pub fn file_name(&self) -> &str {
        Path::new(&self.path)
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("source.c")
    }

    pub fn line_count(&self) -> usize {
        self.text.lines().count()
    }
}

pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopStatement {
    /// Document-order index from the scan that produced it.
    pub id: usize,
    /// From the `for` keyword to the end of the loop body.
    pub span: Span,
    pub nest_depth: usize,
    pub header_text: String,
    /// Name of the enclosing function definition.
    pub function: String,
    pub parallel_candidate: bool,
    /// Why the loop was excluded, when it was.
    pub reject_reason: Option<String>,
    /// Arithmetic operators in the body, nested loops included.
    pub static_op_count: u64,
    /// Array element accesses in the body at 8 bytes each.
    pub static_mem_bytes: u64,
    pub trip_count: u64,
}

impl LoopStatement {
    pub fn arithmetic_intensity(&self) -> f64 {
        self.static_op_count as f64 / self.static_mem_bytes.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopInventory {
    pub unit: Arc<SourceUnit>,
    pub loops: Vec<LoopStatement>,
    /// Ids of the parallel candidates, in document order. Gene bit `i`
    /// refers to `candidates[i]`.
    pub candidates: Vec<usize>,
}

impl LoopInventory {
    pub fn gene_length(&self) -> usize {
        self.candidates.len()
    }

    pub fn loop_by_id(&self, id: usize) -> Option<&LoopStatement> {
        self.loops
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.loops[i])
    }

    pub fn candidate_loops(&self) -> impl Iterator<Item = &LoopStatement> + '_ {
        self.candidates.iter().filter_map(|&id| self.loop_by_id(id))
    }

    /// Loop ids offloaded by `gene`, which must have one bit per candidate.
    pub fn offloaded_ids(&self, gene: &crate::Gene) -> Vec<usize> {
        gene.set_positions().map(|i| self.candidates[i]).collect()
    }

    /// Copies iteration counts from a profile sidecar; loops without an
    /// entry keep a trip count of 0.
    pub fn with_trip_counts(mut self, counts: &TripCounts) -> Self {
        for l in &mut self.loops {
            l.trip_count = counts.get(l.id);
        }
        self
    }
}

/// Per-loop execution counts (`loop_id iteration_count` lines).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripCounts(BTreeMap<usize, u64>);

impl TripCounts {
    pub fn get(&self, id: usize) -> u64 {
        self.0.get(&id).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, id: usize, count: u64) {
        self.0.insert(id, count);
    }

    pub fn parse(path: &str, text: &str) -> Result<Self, Error> {
        let mut counts = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Profile {
                path: path.to_string(),
                line: n + 1,
                message: message.to_string(),
            };
            let mut fields = line.split_whitespace();
            let id = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| bad("expected a loop id"))?;
            let count = fields
                .next()
                .and_then(|f| f.parse::<u64>().ok())
                .ok_or_else(|| bad("expected an iteration count"))?;
            if fields.next().is_some() {
                return Err(bad("trailing fields"));
            }
            counts.insert(id, count);
        }
        Ok(TripCounts(counts))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionBlockSite {
    pub id: usize,
    pub callee_name: String,
    /// Callee identifier through the closing parenthesis of the call.
    pub span: Span,
    pub caller: String,
    /// Normalized body of the callee; empty when it is not defined in the unit.
    pub body_tokens: Vec<String>,
}

/// Directive flavor inserted before offloaded loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dialect {
    ManyCoreCpu(String),
    Gpu(String),
}

impl Dialect {
    pub const DEFAULT_CPU_DIRECTIVE: &'static str = "#pragma omp parallel for";
    pub const DEFAULT_GPU_DIRECTIVE: &'static str = "#pragma acc kernels loop";

    pub fn many_core_cpu() -> Self {
        Dialect::ManyCoreCpu(Self::DEFAULT_CPU_DIRECTIVE.into())
    }

    pub fn gpu() -> Self {
        Dialect::Gpu(Self::DEFAULT_GPU_DIRECTIVE.into())
    }

    pub fn directive(&self) -> &str {
        match self {
            Dialect::ManyCoreCpu(d) | Dialect::Gpu(d) => d,
        }
    }
}

/// Static candidate filter settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOptions {
    /// Calls to these functions do not disqualify a loop.
    pub pure_functions: BTreeSet<String>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        const PURE: &[&str] = &[
            "abs", "acos", "asin", "atan", "atan2", "ceil", "cos", "cosf", "cosh", "exp", "expf",
            "fabs", "fabsf", "floor", "fmax", "fmin", "fmod", "labs", "log", "log10", "logf",
            "max", "min", "pow", "powf", "sin", "sinf", "sinh", "sqrt", "sqrtf", "tan", "tanh",
        ];
        ScanOptions {
            pure_functions: PURE.iter().map(|s| s.to_string()).collect(),
        }
    }
}
