//! The evaluator boundary: one offload pattern in, one [`Measurement`] out.
//!
//! Two backends implement [`Evaluator`]: [`SimulatedEvaluator`] computes
//! times from per-loop cost models, [`ExternalEvaluator`] compiles and runs
//! rewritten sources with configured commands.

mod external;
mod sim;

use serde::{Deserialize, Serialize};

use crate::code_model::{Dialect, LoopInventory};
use crate::error::Error;
use crate::pattern::{DeviceKind, OffloadPattern};

pub use external::ExternalEvaluator;
pub use sim::{simulate_time, LoopProfile, SimOutcome, SimProfile, SimulatedEvaluator};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_TIMEOUT_SECONDS: f64 = 180.0;
pub const DEFAULT_FPGA_BUILD_SECONDS: f64 = 3.0 * 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationTimeClass {
    Short,
    Medium,
    Long,
}

/// One offload destination. Kind-specific fields are ignored for other kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub kind: DeviceKind,
    #[serde(default)]
    pub name: String,
    pub price: f64,
    #[serde(default = "one")]
    pub cores: u32,
    /// Seconds per byte moved between host and device memory (GPU).
    #[serde(default)]
    pub transfer_cost_per_byte: f64,
    /// Throughput gain of an offloaded loop body (FPGA).
    #[serde(default = "one")]
    pub pipeline_depth: u32,
    /// Resource units available for offloaded loops (FPGA).
    #[serde(default = "unbounded")]
    pub resource_capacity: f64,
    /// Fixed cost per offloaded loop invocation (FPGA).
    #[serde(default)]
    pub invocation_latency_seconds: f64,
    /// Per-pattern build cost recorded in wall-cost accounting. Defaults to
    /// three hours for FPGA, zero otherwise.
    #[serde(default)]
    pub build_cost_seconds: Option<f64>,
    /// Directive line for offloaded loops; defaults per kind.
    #[serde(default)]
    pub directive: Option<String>,
    #[serde(default)]
    pub compile_cmd: Option<String>,
    #[serde(default)]
    pub run_cmd: Option<String>,
    #[serde(default)]
    pub timeout_seconds: Option<f64>,
}

fn one() -> u32 {
    1
}

fn unbounded() -> f64 {
    f64::MAX
}

impl DeviceSpec {
    pub fn new(kind: DeviceKind, price: f64) -> Self {
        DeviceSpec {
            kind,
            name: kind.to_string(),
            price,
            cores: 1,
            transfer_cost_per_byte: 0.0,
            pipeline_depth: 1,
            resource_capacity: f64::MAX,
            invocation_latency_seconds: 0.0,
            build_cost_seconds: None,
            directive: None,
            compile_cmd: None,
            run_cmd: None,
            timeout_seconds: None,
        }
    }

    /// Reference devices: GPU cheapest, FPGA dearest, matching the usual
    /// market price ordering.
    pub fn default_for(kind: DeviceKind) -> Self {
        match kind {
            DeviceKind::ManyCoreCpu => DeviceSpec {
                name: "many-core CPU".into(),
                cores: 32,
                ..DeviceSpec::new(kind, 2500.0)
            },
            DeviceKind::Gpu => DeviceSpec {
                name: "GPU".into(),
                cores: 4352,
                transfer_cost_per_byte: 1e-10,
                ..DeviceSpec::new(kind, 1200.0)
            },
            DeviceKind::Fpga => DeviceSpec {
                name: "FPGA".into(),
                pipeline_depth: 10,
                resource_capacity: 100.0,
                invocation_latency_seconds: 0.02,
                ..DeviceSpec::new(kind, 5000.0)
            },
        }
    }

    pub fn verification_time_class(&self) -> VerificationTimeClass {
        match self.kind {
            DeviceKind::ManyCoreCpu => VerificationTimeClass::Short,
            DeviceKind::Gpu => VerificationTimeClass::Medium,
            DeviceKind::Fpga => VerificationTimeClass::Long,
        }
    }

    pub fn build_cost(&self) -> f64 {
        self.build_cost_seconds.unwrap_or(match self.kind {
            DeviceKind::Fpga => DEFAULT_FPGA_BUILD_SECONDS,
            _ => 0.0,
        })
    }

    pub fn dialect(&self) -> Dialect {
        match (self.kind, &self.directive) {
            (DeviceKind::ManyCoreCpu, None) => Dialect::many_core_cpu(),
            (DeviceKind::ManyCoreCpu, Some(d)) => Dialect::ManyCoreCpu(d.clone()),
            (_, None) => Dialect::gpu(),
            (_, Some(d)) => Dialect::Gpu(d.clone()),
        }
    }

    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.kind.to_string()
        } else {
            self.name.clone()
        }
    }

    /// Every violated invariant, prefixed with the device label.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let who = format!("device `{}`", self.label());
        if !(self.price > 0.0) {
            errs.push(format!("{who}: price must be > 0"));
        }
        if self.cores < 1 {
            errs.push(format!("{who}: cores must be >= 1"));
        }
        if self.pipeline_depth < 1 {
            errs.push(format!("{who}: pipeline_depth must be >= 1"));
        }
        if self.transfer_cost_per_byte < 0.0 || self.invocation_latency_seconds < 0.0 {
            errs.push(format!("{who}: costs must be non-negative"));
        }
        if !(self.resource_capacity > 0.0) {
            errs.push(format!("{who}: resource_capacity must be > 0"));
        }
        if let Some(t) = self.timeout_seconds {
            if !(t > 0.0) {
                errs.push(format!("{who}: timeout_seconds must be > 0"));
            }
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Timeout,
    WrongResult,
    CompileFail,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::WrongResult => "wrong-result",
            Status::CompileFail => "compile-fail",
        })
    }
}

/// Program output kept for correctness comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputDigest {
    Numeric(Vec<f64>),
    Bytes(String),
}

impl OutputDigest {
    /// Whitespace-separated numbers become `Numeric`, anything else is kept
    /// verbatim.
    pub fn from_output(stdout: &str) -> Self {
        let nums: Option<Vec<f64>> = stdout.split_whitespace().map(|w| w.parse().ok()).collect();
        match nums {
            Some(v) if !v.is_empty() => OutputDigest::Numeric(v),
            _ => OutputDigest::Bytes(stdout.to_string()),
        }
    }

    /// Element-wise relative comparison for numbers, exact for bytes.
    pub fn matches(&self, other: &OutputDigest, tolerance: f64) -> bool {
        match (self, other) {
            (OutputDigest::Numeric(a), OutputDigest::Numeric(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        let scale = x.abs().max(y.abs());
                        x == y || (x - y).abs() <= tolerance * scale
                    })
            }
            (OutputDigest::Bytes(a), OutputDigest::Bytes(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub time_seconds: f64,
    pub status: Status,
    pub output_digest: Option<OutputDigest>,
    pub resources_used: f64,
    /// Time spent obtaining the measurement, build time included.
    pub wall_cost_seconds: f64,
}

impl Measurement {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Processing time the search ranks by: measured time when ok, the
    /// penalty otherwise.
    pub fn effective_seconds(&self, penalty_seconds: f64) -> f64 {
        if self.is_ok() {
            self.time_seconds
        } else {
            penalty_seconds
        }
    }
}

/// Single-core run of the unmodified application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineResult {
    pub time_seconds: f64,
    pub output_digest: Option<OutputDigest>,
}

/// Speed-up of an ok measurement over the baseline; `None` otherwise.
pub fn improvement_factor(baseline: &BaselineResult, measurement: &Measurement) -> Option<f64> {
    measurement
        .is_ok()
        .then(|| baseline.time_seconds / measurement.time_seconds)
}

/// Everything an evaluator needs to measure one pattern.
#[derive(Debug, Clone, Copy)]
pub struct EvalJob<'a> {
    pub pattern: &'a OffloadPattern,
    /// Inventory whose candidates `pattern.loops` indexes; its unit is the
    /// code under test.
    pub inventory: &'a LoopInventory,
    pub device: &'a DeviceSpec,
    pub baseline: &'a BaselineResult,
    pub tolerance: f64,
    pub timeout_seconds: f64,
}

pub trait Evaluator: Sync {
    fn backend_name(&self) -> &'static str;

    fn measure_baseline(&self, inventory: &LoopInventory, device: &DeviceSpec) -> Result<BaselineResult, Error>;

    /// Per-pattern failures are statuses; `Err` means the evaluation
    /// infrastructure itself failed and the search should stop.
    fn evaluate(&self, job: &EvalJob<'_>) -> Result<Measurement, Error>;

    /// FPGA resource cost of offloading one loop, when the backend knows it.
    fn resource_estimate(&self, _loop_id: usize) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(t: f64) -> Measurement {
        Measurement {
            time_seconds: t,
            status: Status::Ok,
            output_digest: None,
            resources_used: 0.0,
            wall_cost_seconds: t,
        }
    }

    fn base(t: f64) -> BaselineResult {
        BaselineResult {
            time_seconds: t,
            output_digest: None,
        }
    }

    #[test]
    fn improvement_examples() {
        let f = improvement_factor(&base(51.3), &ok(0.046)).unwrap();
        assert!((f - 1115.2173913043478).abs() < 1e-9);
        assert!((f / 1120.0 - 1.0).abs() < 0.01);
        let f = improvement_factor(&base(130.0), &ok(24.1)).unwrap();
        assert!((f - 5.394190871369295).abs() < 1e-9);
        let f = improvement_factor(&base(0.298), &ok(0.0142)).unwrap();
        assert!((f - 20.985915492957748).abs() < 1e-9);
        let mut m = ok(1.0);
        m.status = Status::Timeout;
        assert_eq!(improvement_factor(&base(1.0), &m), None);
    }

    #[test]
    fn digest_comparison() {
        let a = OutputDigest::from_output("1.0 2.0\n3.0");
        let b = OutputDigest::from_output("1.00005 2.0 3.0");
        assert_eq!(a, OutputDigest::Numeric(vec![1.0, 2.0, 3.0]));
        assert!(a.matches(&b, 1e-4));
        assert!(!a.matches(&b, 1e-6));
        assert!(!a.matches(&OutputDigest::from_output("1 2"), 1e-4));
        let s = OutputDigest::from_output("done\n");
        assert_eq!(s, OutputDigest::Bytes("done\n".into()));
        assert!(!s.matches(&OutputDigest::from_output("done"), 1e-4));
    }

    #[test]
    fn default_devices_follow_price_and_time_order() {
        let cpu = DeviceSpec::default_for(DeviceKind::ManyCoreCpu);
        let gpu = DeviceSpec::default_for(DeviceKind::Gpu);
        let fpga = DeviceSpec::default_for(DeviceKind::Fpga);
        assert!(gpu.price < cpu.price && cpu.price < fpga.price);
        assert!(cpu.verification_time_class() <= gpu.verification_time_class());
        assert!(gpu.verification_time_class() <= fpga.verification_time_class());
        assert_eq!(fpga.build_cost(), 10800.0);
        assert!(cpu.validate().is_empty() && gpu.validate().is_empty() && fpga.validate().is_empty());
    }

    #[test]
    fn validation_collects_every_violation() {
        let mut d = DeviceSpec::new(DeviceKind::Gpu, 0.0);
        d.cores = 0;
        d.timeout_seconds = Some(-1.0);
        assert_eq!(d.validate().len(), 3);
    }
}
