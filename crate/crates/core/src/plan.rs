//! The six-stage verification plan.
//!
//! Function-block replacement is tried on every device before any loop
//! search, cheapest verification first: many-core CPU, GPU, then FPGA. The
//! best profitable block substitution is adopted, and loop stages then search
//! the code that remains. The plan stops early once a stage meets every user
//! target, and finally picks the fastest pattern seen within budget.

use std::collections::BTreeMap;

use crate::blocks::{match_by_name, match_by_similarity, propose_block_patterns, Registry, DEFAULT_SIMILARITY_THRESHOLD};
use crate::code_model::{scan_function_blocks, substitute_function_block, LoopInventory, ScanOptions};
use crate::error::Error;
use crate::eval::{BaselineResult, DeviceSpec, EvalJob, Evaluator, DEFAULT_TIMEOUT_SECONDS, DEFAULT_TOLERANCE};
use crate::exec::{map_ordered, Parallelism};
use crate::fpga::{run_fpga_stage, NarrowingLog, NarrowingParams};
use crate::ga::{run_ga, GaParams, SearchContext, DEFAULT_CROSSOVER_RATE, DEFAULT_MUTATION_RATE, DEFAULT_PENALTY_SECONDS, DEFAULT_POPULATION_CAP};
use crate::pattern::{BlockSubstitution, DeviceKind, OffloadMethod};
use crate::report::{Choice, PatternRecord, SearchReport, SkipReason, Stage, StageOutcome, UserTargets, SCHEMA_VERSION};

pub const STAGE_PLAN: [Stage; 6] = [
    Stage { device: DeviceKind::ManyCoreCpu, method: OffloadMethod::FunctionBlock },
    Stage { device: DeviceKind::Gpu, method: OffloadMethod::FunctionBlock },
    Stage { device: DeviceKind::Fpga, method: OffloadMethod::FunctionBlock },
    Stage { device: DeviceKind::ManyCoreCpu, method: OffloadMethod::Loops },
    Stage { device: DeviceKind::Gpu, method: OffloadMethod::Loops },
    Stage { device: DeviceKind::Fpga, method: OffloadMethod::Loops },
];

/// GA settings before they are fitted to a stage's gene length.
#[derive(Debug, Clone, PartialEq)]
pub struct GaSettings {
    /// Explicit population; otherwise `min(cap, gene_length)`.
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub cap: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub timeout_seconds: f64,
    pub penalty_seconds: f64,
}

impl Default for GaSettings {
    fn default() -> Self {
        GaSettings {
            population: None,
            generations: None,
            cap: DEFAULT_POPULATION_CAP,
            crossover_rate: DEFAULT_CROSSOVER_RATE,
            mutation_rate: DEFAULT_MUTATION_RATE,
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            penalty_seconds: DEFAULT_PENALTY_SECONDS,
        }
    }
}

impl GaSettings {
    /// Parameters for one search; population never exceeds the gene length.
    pub fn params(&self, gene_length: usize, seed: u64, timeout_seconds: f64) -> GaParams {
        let base = GaParams::for_gene_length(gene_length, self.cap, seed);
        let population = self
            .population
            .map_or(base.population, |p| p.min(gene_length.max(2)));
        GaParams {
            population,
            generations: self.generations.unwrap_or(base.generations),
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            timeout_seconds,
            penalty_seconds: self.penalty_seconds,
            ..base
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub seed: u64,
    pub ga: GaSettings,
    pub narrowing: NarrowingParams,
    pub tolerance: f64,
    pub similarity_threshold: f64,
    /// When false the three function-block stages are skipped.
    pub function_blocks: bool,
    pub parallelism: Parallelism,
    pub scan_options: ScanOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            seed: 0,
            ga: GaSettings::default(),
            narrowing: NarrowingParams::default(),
            tolerance: DEFAULT_TOLERANCE,
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            function_blocks: true,
            parallelism: Parallelism::default(),
            scan_options: ScanOptions::default(),
        }
    }
}

/// Whether `outcome` is fast and cheap enough to stop searching. Never true
/// without targets, nor for a stage with no pattern beating the baseline.
pub fn satisfied(targets: &UserTargets, outcome: &StageOutcome) -> bool {
    if targets.is_empty() || !outcome.useful() {
        return false;
    }
    let (Some(best), Some(improvement)) = (&outcome.best, outcome.improvement) else {
        return false;
    };
    targets.target_time_seconds.is_none_or(|t| best.time_seconds <= t)
        && targets.target_improvement.is_none_or(|t| improvement >= t)
        && outcome.price.is_some_and(|p| targets.within_budget(p))
}

/// Highest improvement among useful outcomes within budget, ties to the
/// earlier stage; no offload when nothing beats the baseline.
pub fn select_final(outcomes: &[StageOutcome], baseline_seconds: f64, targets: &UserTargets) -> Choice {
    let mut chosen: Option<(usize, &StageOutcome, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if !o.useful() || !o.price.is_some_and(|p| targets.within_budget(p)) {
            continue;
        }
        let Some(imp) = o.improvement else { continue };
        if chosen.is_none_or(|(_, _, best)| imp > best) {
            chosen = Some((i, o, imp));
        }
    }
    match chosen {
        Some((i, o, imp)) if imp > 1.0 => {
            let best = o.best.as_ref().expect("useful outcomes have a best pattern");
            Choice {
                stage: Some(i),
                pattern: Some(best.pattern.clone()),
                device: Some(o.stage.device),
                device_name: o.device_name.clone(),
                time_seconds: best.time_seconds,
                improvement: imp,
            }
        }
        _ => Choice {
            stage: None,
            pattern: None,
            device: None,
            device_name: None,
            time_seconds: baseline_seconds,
            improvement: 1.0,
        },
    }
}

fn finish(
    stage: Stage,
    device: &DeviceSpec,
    baseline: &BaselineResult,
    gene_length: usize,
    measurements: Vec<PatternRecord>,
    narrowing: Option<NarrowingLog>,
    notes: Vec<String>,
) -> StageOutcome {
    let best = measurements
        .iter()
        .filter(|r| r.is_ok())
        .min_by(|a, b| a.time_seconds.total_cmp(&b.time_seconds).then_with(|| a.pattern.loops.cmp(&b.pattern.loops)))
        .cloned();
    let improvement = best.as_ref().map(|b| baseline.time_seconds / b.time_seconds);
    StageOutcome {
        stage,
        device_name: Some(device.label()),
        price: Some(device.price),
        skipped: None,
        baseline_seconds: Some(baseline.time_seconds),
        gene_length,
        fallback_to_baseline: best.as_ref().is_some_and(|b| b.time_seconds >= baseline.time_seconds),
        wall_cost_seconds: measurements.iter().map(|r| r.wall_cost_seconds).sum(),
        best,
        improvement,
        measurements,
        narrowing,
        notes,
    }
}

struct Planner<'a> {
    original: &'a LoopInventory,
    registry: &'a Registry,
    evaluator: &'a dyn Evaluator,
    options: &'a PlanOptions,
    baselines: BTreeMap<DeviceKind, BaselineResult>,
}

impl Planner<'_> {
    fn baseline(&mut self, device: &DeviceSpec) -> Result<BaselineResult, Error> {
        if let Some(b) = self.baselines.get(&device.kind) {
            return Ok(b.clone());
        }
        let b = self.evaluator.measure_baseline(self.original, device)?;
        self.baselines.insert(device.kind, b.clone());
        Ok(b)
    }

    fn timeout(&self, device: &DeviceSpec) -> f64 {
        device.timeout_seconds.unwrap_or(self.options.ga.timeout_seconds)
    }

    fn block_stage(&mut self, stage: Stage, device: &DeviceSpec) -> Result<StageOutcome, Error> {
        let baseline = self.baseline(device)?;
        let inv = self.original;
        let sites = scan_function_blocks(&inv.unit, &self.registry.interest_names())?;
        let mut matches = match_by_name(&sites, self.registry);
        matches.extend(match_by_similarity(&sites, self.registry, self.options.similarity_threshold));
        let proposal = propose_block_patterns(&matches, device.kind, inv.gene_length());
        let mut notes = proposal.dropped;
        if proposal.patterns.is_empty() {
            notes.push("no candidates".into());
        }
        let timeout = self.timeout(device);
        let results = map_ordered(&proposal.patterns, self.options.parallelism, |p| {
            self.evaluator.evaluate(&EvalJob {
                pattern: p,
                inventory: inv,
                device,
                baseline: &baseline,
                tolerance: self.options.tolerance,
                timeout_seconds: timeout,
            })
        });
        let mut records = Vec::with_capacity(results.len());
        for (p, m) in proposal.patterns.into_iter().zip(results) {
            records.push(PatternRecord::new(p, None, &m?, self.options.ga.penalty_seconds));
        }
        Ok(finish(stage, device, &baseline, inv.gene_length(), records, None, notes))
    }

    fn loop_stage(
        &mut self,
        index: usize,
        stage: Stage,
        device: &DeviceSpec,
        inventory: &LoopInventory,
        carried: Option<&BlockSubstitution>,
    ) -> Result<StageOutcome, Error> {
        let baseline = self.baseline(device)?;
        let gene_length = inventory.gene_length();
        let mut notes = Vec::new();
        if let Some(b) = carried {
            notes.push(format!("searching code with `{}` replaced by `{}` ({})", b.callee, b.entry_point, b.device));
        }
        if gene_length == 0 {
            notes.push("no candidate loops".into());
            return Ok(finish(stage, device, &baseline, 0, Vec::new(), None, notes));
        }
        let ctx = SearchContext {
            device,
            baseline: &baseline,
            tolerance: self.options.tolerance,
            carried,
            parallelism: self.options.parallelism,
        };
        let timeout = self.timeout(device);
        if device.kind == DeviceKind::Fpga {
            let params = NarrowingParams {
                timeout_seconds: timeout,
                penalty_seconds: self.options.ga.penalty_seconds,
                ..self.options.narrowing
            };
            let out = run_fpga_stage(inventory, self.evaluator, &params, &ctx)?;
            return Ok(finish(stage, device, &baseline, gene_length, out.records, Some(out.log), notes));
        }
        // Each stage draws from its own stream so stage results do not depend
        // on which earlier stages ran.
        let seed = self.options.seed.wrapping_add(index as u64);
        let params = self.options.ga.params(gene_length, seed, timeout);
        let out = run_ga(inventory, self.evaluator, &params, &ctx)?;
        notes.push(format!(
            "GA M={} T={}: {} distinct patterns measured",
            params.population,
            params.generations,
            out.evaluations()
        ));
        Ok(finish(stage, device, &baseline, gene_length, out.log, None, notes))
    }
}

/// Runs the verification plan over `inventory`'s application.
pub fn run_plan(
    inventory: &LoopInventory,
    devices: &[DeviceSpec],
    registry: &Registry,
    targets: &UserTargets,
    evaluator: &dyn Evaluator,
    options: &PlanOptions,
) -> Result<SearchReport, Error> {
    if devices.is_empty() {
        return Err(Error::NoDevices);
    }
    let device_for = |kind: DeviceKind| devices.iter().find(|d| d.kind == kind);
    let mut planner = Planner {
        original: inventory,
        registry,
        evaluator,
        options,
        baselines: BTreeMap::new(),
    };

    let mut stages: Vec<StageOutcome> = Vec::with_capacity(STAGE_PLAN.len());
    let mut stopped = false;
    let mut residual: Option<(LoopInventory, BlockSubstitution)> = None;
    for (index, &stage) in STAGE_PLAN.iter().enumerate() {
        if index == 3 && !stopped {
            residual = adopt_block(inventory, &stages, options)?;
        }
        let outcome = if stopped {
            StageOutcome::skipped(stage, SkipReason::EarlyStop)
        } else if let Some(device) = device_for(stage.device) {
            match stage.method {
                OffloadMethod::FunctionBlock if !options.function_blocks => StageOutcome::skipped(stage, SkipReason::Disabled),
                OffloadMethod::FunctionBlock => planner.block_stage(stage, device)?,
                OffloadMethod::Loops => {
                    let (inv, carried) = match &residual {
                        Some((inv, b)) => (inv, Some(b)),
                        None => (inventory, None),
                    };
                    planner.loop_stage(index, stage, device, inv, carried)?
                }
            }
        } else {
            StageOutcome::skipped(stage, SkipReason::DeviceUnavailable)
        };
        stopped = stopped || (outcome.executed() && satisfied(targets, &outcome));
        stages.push(outcome);
    }

    let first = stages
        .iter()
        .find(|s| s.executed())
        .expect("the first stage of an available device always runs");
    let baseline_seconds = first.baseline_seconds.expect("executed stages record their baseline");
    let chosen = select_final(&stages, baseline_seconds, targets);
    Ok(SearchReport {
        schema_version: SCHEMA_VERSION,
        application: inventory.unit.file_name().to_string(),
        source_checksum: inventory.unit.checksum.clone(),
        backend: evaluator.backend_name().to_string(),
        seed: options.seed,
        loops: inventory.loops.len(),
        candidates: inventory.gene_length(),
        baseline_seconds,
        targets: targets.clone(),
        total_wall_cost_seconds: stages.iter().map(|s| s.wall_cost_seconds).sum(),
        stages,
        chosen,
    })
}

/// The single most profitable block substitution, applied to the original
/// code, with the inventory of what remains.
fn adopt_block(
    inventory: &LoopInventory,
    block_stages: &[StageOutcome],
    options: &PlanOptions,
) -> Result<Option<(LoopInventory, BlockSubstitution)>, Error> {
    let mut best: Option<(&StageOutcome, f64)> = None;
    for o in block_stages.iter().filter(|o| o.useful()) {
        let imp = o.improvement.unwrap_or(0.0);
        if imp > 1.0 && best.is_none_or(|(_, b)| imp > b) {
            best = Some((o, imp));
        }
    }
    let Some((outcome, _)) = best else {
        return Ok(None);
    };
    let block = outcome
        .best
        .as_ref()
        .and_then(|r| r.pattern.block.clone())
        .expect("block stages measure block patterns");
    let interest = vec![block.callee.clone()];
    let sites = scan_function_blocks(&inventory.unit, &interest)?;
    let site = sites
        .iter()
        .find(|s| s.id == block.site_id)
        .ok_or(Error::SiteMismatch { site: block.site_id })?;
    let (_, residual) = substitute_function_block(inventory, site, &block.entry_point, &options.scan_options)?;
    Ok(Some((residual, block)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Measurement, Status};
    use crate::pattern::{Gene, OffloadPattern};

    fn outcome(stage: usize, price: f64, time: Option<f64>, baseline: f64) -> StageOutcome {
        let s = STAGE_PLAN[stage];
        let records: Vec<PatternRecord> = time
            .map(|t| {
                let m = Measurement {
                    time_seconds: t,
                    status: Status::Ok,
                    output_digest: None,
                    resources_used: 0.0,
                    wall_cost_seconds: t,
                };
                PatternRecord::new(OffloadPattern::loops(s.device, Gene::ones(2), None), Some(0), &m, 1000.0)
            })
            .into_iter()
            .collect();
        let device = DeviceSpec::new(s.device, price);
        let base = BaselineResult {
            time_seconds: baseline,
            output_digest: None,
        };
        finish(s, &device, &base, 2, records, None, Vec::new())
    }

    #[test]
    fn satisfied_is_a_conjunction() {
        let o = outcome(2, 5000.0, Some(0.298 / 21.0), 0.298);
        let mut t = UserTargets {
            target_improvement: Some(20.0),
            price_budget: Some(6000.0),
            ..UserTargets::default()
        };
        assert!(satisfied(&t, &o));
        t.price_budget = Some(4000.0);
        assert!(!satisfied(&t, &o));
        assert!(!satisfied(&UserTargets::default(), &o));
    }

    #[test]
    fn final_selection_prefers_improvement_then_earlier_stage() {
        let stages = vec![
            outcome(3, 2500.0, Some(51.3 / 44.5), 51.3),
            outcome(4, 1200.0, Some(0.046), 51.3),
        ];
        let c = select_final(&stages, 51.3, &UserTargets::default());
        assert_eq!(c.device, Some(DeviceKind::Gpu));

        let slow_gpu = outcome(4, 1200.0, Some(131.0), 130.0);
        assert!(slow_gpu.fallback_to_baseline);
        let stages = vec![outcome(3, 2500.0, Some(24.1), 130.0), slow_gpu];
        let c = select_final(&stages, 130.0, &UserTargets::default());
        assert_eq!(c.device, Some(DeviceKind::ManyCoreCpu));
        assert!((c.improvement - 5.39).abs() < 0.01);

        let tie = vec![outcome(2, 5000.0, Some(1.0), 2.0), outcome(3, 2500.0, Some(1.0), 2.0)];
        assert_eq!(select_final(&tie, 2.0, &UserTargets::default()).stage, Some(0));
    }

    #[test]
    fn nothing_profitable_means_no_offload() {
        let stages = vec![outcome(3, 1.0, None, 3.0), outcome(4, 1.0, Some(3.0), 3.0)];
        let c = select_final(&stages, 3.0, &UserTargets::default());
        assert_eq!((c.stage, c.improvement, c.time_seconds), (None, 1.0, 3.0));
    }

    #[test]
    fn settings_clamp_population() {
        let s = GaSettings {
            population: Some(16),
            generations: Some(16),
            ..GaSettings::default()
        };
        let p = s.params(18, 1, 180.0);
        assert_eq!((p.population, p.generations), (16, 16));
        let p = s.params(6, 1, 180.0);
        assert_eq!(p.population, 6);
        let p = GaSettings::default().params(120, 1, 180.0);
        assert_eq!((p.population, p.generations), (20, 20));
    }
}
