//! Run configuration: one TOML file naming the application, its profile
//! data, the devices and the search settings.
//!
//! ```toml
//! backend = "simulated"
//! seed = 7
//! sources = ["tdfir.c"]
//! counts = "tdfir.counts"
//! profile = "tdfir.sim"
//! registry = "registry.txt"
//!
//! [targets]
//! target_improvement = 20.0
//!
//! [[device]]
//! kind = "fpga"
//! price = 5000.0
//! ```
//!
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blocks::{Registry, DEFAULT_SIMILARITY_THRESHOLD};
use crate::code_model::{scan_loops, LoopInventory, ScanOptions, SourceUnit, TripCounts};
use crate::error::Error;
use crate::eval::{DeviceSpec, Evaluator, ExternalEvaluator, SimProfile, SimulatedEvaluator, DEFAULT_TOLERANCE};
use crate::exec::Parallelism;
use crate::fpga::{NarrowingParams, DEFAULT_EFFICIENCY_KEEP, DEFAULT_INTENSITY_KEEP};
use crate::plan::{GaSettings, PlanOptions};
use crate::report::UserTargets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Simulated,
    External,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulated" => Ok(Backend::Simulated),
            "external" => Ok(Backend::External),
            other => Err(format!("unknown backend `{other}` (expected simulated or external)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    /// Upper bound for population and generations when they are not given.
    pub cap: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub timeout_seconds: f64,
    pub penalty_seconds: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaSettings::default();
        GaSection {
            population: d.population,
            generations: d.generations,
            cap: d.cap,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            timeout_seconds: d.timeout_seconds,
            penalty_seconds: d.penalty_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpgaSection {
    pub k1: usize,
    pub k2: usize,
}

impl Default for FpgaSection {
    fn default() -> Self {
        FpgaSection {
            k1: DEFAULT_INTENSITY_KEEP,
            k2: DEFAULT_EFFICIENCY_KEEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub backend: Backend,
    pub seed: Option<u64>,
    #[serde(default)]
    pub sources: Vec<PathBuf>,
    /// Per-loop trip counts for the first source.
    pub counts: Option<PathBuf>,
    /// Simulator cost profile; required by the simulated backend.
    pub profile: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for concurrent measurements; 0 lets the pool decide.
    #[serde(default)]
    pub parallel_workers: usize,
    #[serde(default = "yes")]
    pub function_blocks: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_threshold")]
    pub similarity_threshold: f64,
    /// Added to the built-in list of calls that keep a loop a candidate.
    #[serde(default)]
    pub pure_functions: Vec<String>,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub fpga: FpgaSection,
    #[serde(default)]
    pub targets: UserTargets,
    #[serde(default, rename = "device")]
    pub devices: Vec<DeviceSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("offload-out")
}

fn yes() -> bool {
    true
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_threshold() -> f64 {
    DEFAULT_SIMILARITY_THRESHOLD
}

fn resolve(dir: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = dir.join(&*p);
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    /// Reads `path` and resolves every relative path against its directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in &mut cfg.sources {
            resolve(dir, p);
        }
        for p in [&mut cfg.counts, &mut cfg.profile, &mut cfg.registry].into_iter().flatten() {
            resolve(dir, p);
        }
        resolve(dir, &mut cfg.output_dir);
        Ok(cfg)
    }

    /// Every violated rule, not just the first.
    pub fn validate(&self) -> Result<(), Error> {
        let mut errs = Vec::new();
        if self.devices.is_empty() {
            errs.push("no devices".to_string());
        }
        for (i, d) in self.devices.iter().enumerate() {
            errs.extend(d.validate());
            if self.devices[..i].iter().any(|e| e.kind == d.kind) {
                errs.push(format!("device kind {} configured more than once", d.kind));
            }
            if self.backend == Backend::External && (d.compile_cmd.is_none() || d.run_cmd.is_none()) {
                errs.push(format!("device `{}`: external backend needs compile_cmd and run_cmd", d.label()));
            }
        }
        if self.seed.is_none() {
            errs.push("seed is required for reproducible runs".into());
        }
        if self.sources.is_empty() {
            errs.push("no sources".into());
        }
        if self.backend == Backend::Simulated && self.profile.is_none() {
            errs.push("simulated backend needs a profile".into());
        }
        if !(self.tolerance >= 0.0) {
            errs.push("tolerance must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            errs.push("similarity_threshold must be within [0, 1]".into());
        }
        let ga = &self.ga;
        if ga.population.is_some_and(|p| p < 2) {
            errs.push("ga.population must be >= 2".into());
        }
        if ga.generations == Some(0) || ga.cap == 0 {
            errs.push("ga.generations and ga.cap must be >= 1".into());
        }
        for (name, v) in [("ga.crossover_rate", ga.crossover_rate), ("ga.mutation_rate", ga.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} must be within [0, 1]"));
            }
        }
        if !(ga.timeout_seconds > 0.0) {
            errs.push("ga.timeout_seconds must be > 0".into());
        }
        let longest = self
            .devices
            .iter()
            .filter_map(|d| d.timeout_seconds)
            .fold(ga.timeout_seconds, f64::max);
        if !(ga.penalty_seconds > longest) {
            errs.push("ga.penalty_seconds must exceed every timeout".into());
        }
        if self.fpga.k1 == 0 || self.fpga.k2 == 0 {
            errs.push("fpga.k1 and fpga.k2 must be >= 1".into());
        }
        let t = &self.targets;
        for (name, v) in [
            ("targets.target_time_seconds", t.target_time_seconds),
            ("targets.target_improvement", t.target_improvement),
            ("targets.price_budget", t.price_budget),
        ] {
            if v.is_some_and(|v| !(v > 0.0)) {
                errs.push(format!("{name} must be > 0"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        let mut options = ScanOptions::default();
        options.pure_functions.extend(self.pure_functions.iter().cloned());
        options
    }

    pub fn plan_options(&self, parallelism: Parallelism) -> PlanOptions {
        let ga = &self.ga;
        PlanOptions {
            seed: self.seed.unwrap_or_default(),
            ga: GaSettings {
                population: ga.population,
                generations: ga.generations,
                cap: ga.cap,
                crossover_rate: ga.crossover_rate,
                mutation_rate: ga.mutation_rate,
                timeout_seconds: ga.timeout_seconds,
                penalty_seconds: ga.penalty_seconds,
            },
            narrowing: NarrowingParams {
                k1: self.fpga.k1,
                k2: self.fpga.k2,
                timeout_seconds: ga.timeout_seconds,
                penalty_seconds: ga.penalty_seconds,
            },
            tolerance: self.tolerance,
            similarity_threshold: self.similarity_threshold,
            function_blocks: self.function_blocks,
            parallelism,
            scan_options: self.scan_options(),
        }
    }

    /// Scans one source, attaching trip counts when it is the first source.
    pub fn load_inventory(&self, index: usize) -> Result<LoopInventory, Error> {
        let unit = Arc::new(SourceUnit::load(&self.sources[index])?);
        let inventory = scan_loops(&unit, &self.scan_options())?;
        match (&self.counts, index) {
            (Some(path), 0) => Ok(inventory.with_trip_counts(&TripCounts::load(path)?)),
            _ => Ok(inventory),
        }
    }

    pub fn load_registry(&self) -> Result<Registry, Error> {
        match &self.registry {
            Some(path) => Registry::load(path),
            None => Ok(Registry::default()),
        }
    }

    pub fn evaluator(&self) -> Result<Box<dyn Evaluator>, Error> {
        match self.backend {
            Backend::Simulated => {
                let path = self
                    .profile
                    .as_ref()
                    .ok_or_else(|| Error::Config(vec!["simulated backend needs a profile".into()]))?;
                Ok(Box::new(SimulatedEvaluator::new(SimProfile::load(path)?)))
            }
            Backend::External => Ok(Box::new(
                ExternalEvaluator::new(self.output_dir.join("work")).with_scan_options(self.scan_options()),
            )),
        }
    }
}
