//! Deterministic device cost models standing in for real measurements.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{BaselineResult, DeviceSpec, EvalJob, Evaluator, Measurement, Status};
use crate::code_model::LoopInventory;
use crate::error::Error;
use crate::pattern::{DeviceKind, OffloadPattern};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopProfile {
    /// Exclusive single-core time of the loop, nested loops not included.
    pub serial_seconds: f64,
    pub parallel_fraction: f64,
    /// Bytes moved to and from the GPU per transfer.
    pub bytes_transferred: f64,
    /// False when running iterations concurrently changes the result.
    pub parallel_safe: bool,
    /// Transfers can be hoisted out of the loop: charged once instead of once
    /// per iteration.
    pub hoistable: bool,
    pub resource_cost: f64,
}

impl Default for LoopProfile {
    fn default() -> Self {
        LoopProfile {
            serial_seconds: 0.0,
            parallel_fraction: 0.0,
            bytes_transferred: 0.0,
            parallel_safe: true,
            hoistable: true,
            resource_cost: 1.0,
        }
    }
}

/// Cost profile of one application.
///
/// Text format, one record per line, `#` comments:
///
/// ```text
/// base <seconds>
/// loop <id> <serial_s> <parallel_fraction> <bytes> <safe 0|1> <hoistable 0|1> <resource_cost>
/// block <callee> <device> <seconds>
/// ```
///
/// `base` is time spent outside every loop. A `block` record gives the time
/// of the accelerated replacement of `callee` on `device`; a missing record
/// means no implementation exists there.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimProfile {
    pub base_seconds: f64,
    pub loops: BTreeMap<usize, LoopProfile>,
    pub blocks: BTreeMap<(String, DeviceKind), f64>,
}

impl SimProfile {
    pub fn loop_profile(&self, id: usize) -> LoopProfile {
        self.loops.get(&id).copied().unwrap_or_default()
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(path: &str, text: &str) -> Result<Self, Error> {
        let mut profile = SimProfile::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Profile {
                path: path.to_string(),
                line: n + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64, Error> {
                f.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| bad(format!("field {} must be a non-negative number", i + 1)))
            };
            let flag = |i: usize| -> Result<bool, Error> {
                match f.get(i) {
                    Some(&"1") => Ok(true),
                    Some(&"0") => Ok(false),
                    _ => Err(bad(format!("field {} must be 0 or 1", i + 1))),
                }
            };
            match f[0] {
                "base" if f.len() == 2 => profile.base_seconds = num(1)?,
                "loop" if f.len() == 8 => {
                    let id = f[1].parse::<usize>().map_err(|_| bad("bad loop id".into()))?;
                    let lp = LoopProfile {
                        serial_seconds: num(2)?,
                        parallel_fraction: num(3)?,
                        bytes_transferred: num(4)?,
                        parallel_safe: flag(5)?,
                        hoistable: flag(6)?,
                        resource_cost: num(7)?,
                    };
                    if lp.parallel_fraction > 1.0 {
                        return Err(bad("parallel_fraction must be within [0, 1]".into()));
                    }
                    if profile.loops.insert(id, lp).is_some() {
                        return Err(bad(format!("duplicate loop {id}")));
                    }
                }
                "block" if f.len() == 4 => {
                    let device: DeviceKind = f[2].parse().map_err(bad)?;
                    profile.blocks.insert((f[1].to_string(), device), num(3)?);
                }
                other => return Err(bad(format!("unrecognized record `{other}` with {} fields", f.len()))),
            }
        }
        Ok(profile)
    }

    /// Serial time of every loop in `inventory` plus the base time.
    pub fn baseline_seconds(&self, inventory: &LoopInventory) -> f64 {
        inventory
            .loops
            .iter()
            .fold(self.base_seconds, |t, l| t + self.loop_profile(l.id).serial_seconds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub seconds: f64,
    pub status: Status,
    pub resources_used: f64,
}

/// Modeled run time of `pattern` on `device`.
///
/// Loops with a clear bit cost their serial time. Offloaded loops cost
/// `serial·(1−pf) + serial·pf/cores` on CPU and GPU, plus on GPU the transfer
/// `cost_per_byte·bytes`, charged once for hoistable loops and once per
/// iteration otherwise. FPGA loops cost `serial/pipeline_depth + latency` and
/// consume their resource cost. Loops of a substituted callee are replaced by
/// the block's profiled time.
pub fn simulate_time(pattern: &OffloadPattern, inventory: &LoopInventory, profile: &SimProfile, device: &DeviceSpec) -> SimOutcome {
    let offloaded: BTreeSet<usize> = inventory.offloaded_ids(&pattern.loops).into_iter().collect();
    let replaced = pattern.block.as_ref().map(|b| b.callee.as_str());
    let cores = f64::from(device.cores.max(1));

    let mut seconds = profile.base_seconds;
    let mut resources = 0.0;
    let mut unsafe_offload = false;
    for l in &inventory.loops {
        if Some(l.function.as_str()) == replaced {
            continue;
        }
        let p = profile.loop_profile(l.id);
        let serial = p.serial_seconds;
        if !offloaded.contains(&l.id) {
            seconds += serial;
            continue;
        }
        unsafe_offload |= !p.parallel_safe;
        let parallel = serial * (1.0 - p.parallel_fraction) + serial * p.parallel_fraction / cores;
        seconds += match device.kind {
            DeviceKind::ManyCoreCpu => parallel,
            DeviceKind::Gpu => {
                let transfers = if p.hoistable { 1.0 } else { l.trip_count.max(1) as f64 };
                parallel + device.transfer_cost_per_byte * p.bytes_transferred * transfers
            }
            DeviceKind::Fpga => {
                resources += p.resource_cost;
                serial / f64::from(device.pipeline_depth.max(1)) + device.invocation_latency_seconds
            }
        };
    }

    let mut missing_block = false;
    if let Some(b) = &pattern.block {
        match profile.blocks.get(&(b.callee.clone(), b.device)) {
            Some(t) => seconds += t,
            None => missing_block = true,
        }
    }

    let status = if missing_block || (device.kind == DeviceKind::Fpga && resources > device.resource_capacity) {
        Status::CompileFail
    } else if unsafe_offload {
        Status::WrongResult
    } else {
        Status::Ok
    };
    SimOutcome {
        seconds,
        status,
        resources_used: resources,
    }
}

/// Evaluator backed by a [`SimProfile`]; pure and freely shareable.
#[derive(Debug, Clone)]
pub struct SimulatedEvaluator {
    pub profile: SimProfile,
}

impl SimulatedEvaluator {
    pub fn new(profile: SimProfile) -> Self {
        SimulatedEvaluator { profile }
    }
}

impl Evaluator for SimulatedEvaluator {
    fn backend_name(&self) -> &'static str {
        "simulated"
    }

    fn measure_baseline(&self, inventory: &LoopInventory, _device: &DeviceSpec) -> Result<BaselineResult, Error> {
        Ok(BaselineResult {
            time_seconds: self.profile.baseline_seconds(inventory),
            output_digest: None,
        })
    }

    fn evaluate(&self, job: &EvalJob<'_>) -> Result<Measurement, Error> {
        let out = simulate_time(job.pattern, job.inventory, &self.profile, job.device);
        let (time_seconds, status) = match out.status {
            Status::CompileFail => (0.0, Status::CompileFail),
            // The run is killed at the limit before any result is checked.
            _ if out.seconds >= job.timeout_seconds => (job.timeout_seconds, Status::Timeout),
            s => (out.seconds, s),
        };
        Ok(Measurement {
            time_seconds,
            status,
            output_digest: None,
            resources_used: out.resources_used,
            wall_cost_seconds: time_seconds + job.device.build_cost(),
        })
    }

    fn resource_estimate(&self, loop_id: usize) -> Option<f64> {
        self.profile.loops.get(&loop_id).map(|p| p.resource_cost)
    }
}
