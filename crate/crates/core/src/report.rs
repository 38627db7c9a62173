//! Search records and their two renderings: versioned JSON for machines and
//! a plain-text summary for people.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::{Measurement, Status};
use crate::fpga::NarrowingLog;
use crate::ga::goodness_of_fit;
use crate::pattern::{DeviceKind, OffloadMethod, OffloadPattern};

pub const SCHEMA_VERSION: u32 = 1;
pub const JSON_FILE: &str = "report.json";
pub const TEXT_FILE: &str = "report.txt";

/// One measured pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternRecord {
    pub pattern: OffloadPattern,
    /// GA generation, or FPGA phase (0 singles, 1 combination). Unset for
    /// function-block patterns.
    pub generation: Option<usize>,
    pub time_seconds: f64,
    pub status: Status,
    pub fitness: f64,
    pub resources_used: f64,
    pub wall_cost_seconds: f64,
}

impl PatternRecord {
    pub fn new(pattern: OffloadPattern, generation: Option<usize>, m: &Measurement, penalty_seconds: f64) -> Self {
        PatternRecord {
            pattern,
            generation,
            time_seconds: m.time_seconds,
            status: m.status,
            fitness: goodness_of_fit(m, penalty_seconds),
            resources_used: m.resources_used,
            wall_cost_seconds: m.wall_cost_seconds,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub device: DeviceKind,
    pub method: OffloadMethod,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.device, self.method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    EarlyStop,
    DeviceUnavailable,
    /// Function-block stages switched off in the configuration.
    Disabled,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::EarlyStop => "early-stop",
            SkipReason::DeviceUnavailable => "device-unavailable",
            SkipReason::Disabled => "disabled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageOutcome {
    pub stage: Stage,
    pub device_name: Option<String>,
    pub price: Option<f64>,
    pub skipped: Option<SkipReason>,
    /// Single-core time this stage's improvements are relative to.
    pub baseline_seconds: Option<f64>,
    pub gene_length: usize,
    /// Fastest ok pattern of the stage.
    pub best: Option<PatternRecord>,
    pub improvement: Option<f64>,
    /// The best ok pattern is no faster than the baseline, so the stage
    /// effectively keeps the original code.
    pub fallback_to_baseline: bool,
    pub wall_cost_seconds: f64,
    pub measurements: Vec<PatternRecord>,
    pub narrowing: Option<NarrowingLog>,
    pub notes: Vec<String>,
}

impl StageOutcome {
    pub fn skipped(stage: Stage, reason: SkipReason) -> Self {
        StageOutcome {
            stage,
            device_name: None,
            price: None,
            skipped: Some(reason),
            baseline_seconds: None,
            gene_length: 0,
            best: None,
            improvement: None,
            fallback_to_baseline: false,
            wall_cost_seconds: 0.0,
            measurements: Vec::new(),
            narrowing: None,
            notes: Vec::new(),
        }
    }

    pub fn executed(&self) -> bool {
        self.skipped.is_none()
    }

    /// An ok pattern that actually beats the baseline.
    pub fn useful(&self) -> bool {
        self.best.is_some() && !self.fallback_to_baseline
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    /// Index into the stage list; unset for no offload.
    pub stage: Option<usize>,
    pub pattern: Option<OffloadPattern>,
    pub device: Option<DeviceKind>,
    pub device_name: Option<String>,
    pub time_seconds: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserTargets {
    pub target_time_seconds: Option<f64>,
    pub target_improvement: Option<f64>,
    pub price_budget: Option<f64>,
}

impl UserTargets {
    pub fn is_empty(&self) -> bool {
        self.target_time_seconds.is_none() && self.target_improvement.is_none() && self.price_budget.is_none()
    }

    pub fn within_budget(&self, price: f64) -> bool {
        self.price_budget.is_none_or(|b| price <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchReport {
    pub schema_version: u32,
    pub application: String,
    pub source_checksum: String,
    pub backend: String,
    pub seed: u64,
    pub loops: usize,
    pub candidates: usize,
    pub baseline_seconds: f64,
    pub targets: UserTargets,
    pub stages: Vec<StageOutcome>,
    pub chosen: Choice,
    pub total_wall_cost_seconds: f64,
}

impl SearchReport {
    pub fn stage(&self, device: DeviceKind, method: OffloadMethod) -> &StageOutcome {
        self.stages
            .iter()
            .find(|s| s.stage.device == device && s.stage.method == method)
            .expect("every stage is listed")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a machine-readable report, rejecting unknown keys and other
    /// schema versions.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => return Err(Error::Report(format!("unsupported schema version {v}"))),
            None => return Err(Error::Report("missing schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "application  {} ({} loops, {} candidates)", self.application, self.loops, self.candidates);
        let _ = writeln!(out, "backend      {} (seed {})", self.backend, self.seed);
        let _ = writeln!(out, "baseline     {:.6} s on a single core", self.baseline_seconds);
        let _ = writeln!(out);
        for (i, s) in self.stages.iter().enumerate() {
            let _ = write!(out, "{}. {:<30}", i + 1, s.stage.to_string());
            if let Some(reason) = s.skipped {
                let _ = writeln!(out, "skipped ({reason})");
                continue;
            }
            match (&s.best, s.improvement) {
                (Some(best), Some(imp)) => {
                    let _ = write!(out, "{:.6} s  x{imp:.2}  ", best.time_seconds);
                    match (&best.pattern.method, &best.pattern.block) {
                        (OffloadMethod::FunctionBlock, Some(b)) => {
                            let _ = write!(out, "{} -> {}", b.callee, b.entry_point);
                        }
                        _ => {
                            let _ = write!(out, "loops {}", best.pattern.loops);
                        }
                    }
                    if s.fallback_to_baseline {
                        let _ = write!(out, "  (fallback to baseline)");
                    }
                }
                _ => {
                    let _ = write!(out, "no ok pattern");
                }
            }
            let _ = writeln!(out, "  [{} measured]", s.measurements.len());
            for note in &s.notes {
                let _ = writeln!(out, "   - {note}");
            }
        }
        let _ = writeln!(out);
        match (&self.chosen.pattern, self.chosen.stage) {
            (Some(p), Some(i)) => {
                let _ = writeln!(
                    out,
                    "chosen       {} on {} (stage {}): {:.6} s, improvement x{:.2}",
                    p.method,
                    self.chosen.device_name.as_deref().unwrap_or(p.device.as_str()),
                    i + 1,
                    self.chosen.time_seconds,
                    self.chosen.improvement
                );
            }
            _ => {
                let _ = writeln!(out, "chosen       no offload (improvement x1.00)");
            }
        }
        let _ = writeln!(out, "wall cost    {:.1} s", self.total_wall_cost_seconds);
        out
    }

    /// Writes both renderings into `dir`, returning their paths.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf), Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(JSON_FILE);
        let text = dir.join(TEXT_FILE);
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&text, self.to_text()).map_err(|e| Error::io(&text, e))?;
        Ok((json, text))
    }
}
