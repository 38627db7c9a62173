use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use offload_core::blocks::{match_by_name, match_by_similarity, MatchKind};
use offload_core::code_model::{scan_function_blocks, scan_loops, ScanOptions, SourceUnit};
use offload_core::config::{Backend, RunConfig};
use offload_core::exec::{with_workers, Parallelism};
use offload_core::fpga::run_fpga_stage;
use offload_core::ga::{run_ga, SearchContext};
use offload_core::plan::run_plan;
use offload_core::DeviceKind;

/// Search offload patterns for a C application across many-core CPU, GPU
/// and FPGA devices.
#[derive(Parser, Debug)]
#[command(name = "offload", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Measurement backend: simulated or external.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and work files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "SECONDS")]
    target_time: Option<f64>,
    #[arg(long, global = true, value_name = "FACTOR")]
    target_improvement: Option<f64>,
    #[arg(long, global = true)]
    price_budget: Option<f64>,
    /// Worker threads for concurrent measurements (1 = sequential).
    #[arg(long, global = true)]
    parallel_workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full six-stage search and write report.txt / report.json.
    Run,
    /// List loops and function-call sites.
    Scan {
        /// Sources to scan instead of the configured ones.
        files: Vec<PathBuf>,
    },
    /// Run only the GA loop search on one device.
    Ga {
        #[arg(long, default_value = "many-core-cpu")]
        device: DeviceKind,
    },
    /// Run only the FPGA narrowing and its measurements.
    Narrow,
    /// Show function-block matches against the registry.
    Match,
}

impl Global {
    fn config(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().context("--config is required for this command")?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.parallel_workers {
            cfg.parallel_workers = w;
        }
        let t = &mut cfg.targets;
        t.target_time_seconds = self.target_time.or(t.target_time_seconds);
        t.target_improvement = self.target_improvement.or(t.target_improvement);
        t.price_budget = self.price_budget.or(t.price_budget);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parallelism(cfg: &RunConfig) -> Parallelism {
    if cfg.parallel_workers == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn single_source(cfg: &RunConfig) -> Result<()> {
    if cfg.sources.len() > 1 {
        bail!("the search takes one source file; {} configured", cfg.sources.len());
    }
    Ok(())
}

fn cmd_run(global: &Global) -> Result<()> {
    let cfg = global.config()?;
    single_source(&cfg)?;
    let inventory = cfg.load_inventory(0)?;
    let registry = cfg.load_registry()?;
    let evaluator = cfg.evaluator()?;
    let options = cfg.plan_options(parallelism(&cfg));
    let report = with_workers(cfg.parallel_workers, || {
        run_plan(&inventory, &cfg.devices, &registry, &cfg.targets, evaluator.as_ref(), &options)
    })?;
    let (json, text) = report.write_to(&cfg.output_dir)?;
    print!("{}", report.to_text());
    println!("\nwrote {} and {}", text.display(), json.display());
    Ok(())
}

fn cmd_scan(global: &Global, files: &[PathBuf]) -> Result<()> {
    let (sources, options, counts) = if files.is_empty() {
        let cfg = global.config()?;
        (cfg.sources.clone(), cfg.scan_options(), Some(cfg))
    } else {
        (files.to_vec(), ScanOptions::default(), None)
    };
    for (i, path) in sources.iter().enumerate() {
        let inventory = match &counts {
            Some(cfg) => cfg.load_inventory(i)?,
            None => scan_loops(&Arc::new(SourceUnit::load(path)?), &options)?,
        };
        println!("{}: {} loops, {} candidates", path.display(), inventory.loops.len(), inventory.gene_length());
        for l in &inventory.loops {
            println!(
                "  loop {:>3}  depth {}  {:<12} {:<5} ops {:>3} bytes {:>4} intensity {:>6.3} trips {:>10}  {}{}",
                l.id,
                l.nest_depth,
                l.function,
                if l.parallel_candidate { "cand" } else { "-" },
                l.static_op_count,
                l.static_mem_bytes,
                l.arithmetic_intensity(),
                l.trip_count,
                l.header_text,
                l.reject_reason.as_deref().map(|r| format!("  [{r}]")).unwrap_or_default()
            );
        }
        for s in scan_function_blocks(&inventory.unit, &[])? {
            println!("  call site {:>3}  {} -> {}", s.id, s.caller, s.callee_name);
        }
    }
    Ok(())
}

fn cmd_ga(global: &Global, kind: DeviceKind) -> Result<()> {
    let cfg = global.config()?;
    single_source(&cfg)?;
    if kind == DeviceKind::Fpga {
        bail!("FPGA loops are searched by narrowing; use `offload narrow`");
    }
    let device = cfg
        .devices
        .iter()
        .find(|d| d.kind == kind)
        .with_context(|| format!("no {kind} device configured"))?;
    let inventory = cfg.load_inventory(0)?;
    if inventory.gene_length() == 0 {
        bail!("no candidate loops");
    }
    let evaluator = cfg.evaluator()?;
    let baseline = evaluator.measure_baseline(&inventory, device)?;
    let options = cfg.plan_options(parallelism(&cfg));
    let params = options
        .ga
        .params(inventory.gene_length(), options.seed, device.timeout_seconds.unwrap_or(options.ga.timeout_seconds));
    let ctx = SearchContext {
        device,
        baseline: &baseline,
        tolerance: options.tolerance,
        carried: None,
        parallelism: options.parallelism,
    };
    let out = with_workers(cfg.parallel_workers, || run_ga(&inventory, evaluator.as_ref(), &params, &ctx))?;
    println!(
        "gene length {}, M={} T={}, baseline {:.6} s",
        params.gene_length, params.population, params.generations, baseline.time_seconds
    );
    for r in &out.log {
        println!(
            "  gen {:>2}  {}  {:>12.6} s  {:<12} fitness {:.6}",
            r.generation.unwrap_or(0),
            r.pattern.loops,
            r.time_seconds,
            r.status.to_string(),
            r.fitness
        );
    }
    let best = &out.best;
    println!(
        "best {}  {:.6} s ({}), improvement x{:.2}",
        best.gene,
        best.measurement.time_seconds,
        best.measurement.status,
        baseline.time_seconds / best.measurement.time_seconds
    );
    Ok(())
}

fn cmd_narrow(global: &Global) -> Result<()> {
    let cfg = global.config()?;
    single_source(&cfg)?;
    let device = cfg
        .devices
        .iter()
        .find(|d| d.kind == DeviceKind::Fpga)
        .context("no fpga device configured")?;
    let inventory = cfg.load_inventory(0)?;
    let evaluator = cfg.evaluator()?;
    let baseline = evaluator.measure_baseline(&inventory, device)?;
    let options = cfg.plan_options(parallelism(&cfg));
    let ctx = SearchContext {
        device,
        baseline: &baseline,
        tolerance: options.tolerance,
        carried: None,
        parallelism: options.parallelism,
    };
    let mut params = options.narrowing;
    params.timeout_seconds = device.timeout_seconds.unwrap_or(params.timeout_seconds);
    let out = run_fpga_stage(&inventory, evaluator.as_ref(), &params, &ctx)?;
    for e in &out.log.entries {
        println!(
            "  loop {:>3}  intensity {:>8.3}  count {:>10}  cost {:>6.1}  score {:>12.1} (#{})  efficiency {:>8.4}{}",
            e.metrics.loop_id,
            e.metrics.arithmetic_intensity,
            e.metrics.loop_count,
            e.metrics.resource_cost,
            e.intensity_score,
            e.intensity_rank,
            e.efficiency_score,
            e.efficiency_rank.map(|r| format!(" (#{r})")).unwrap_or_default()
        );
    }
    println!("shortlist {:?} -> top {:?}", out.log.shortlist, out.log.top);
    for r in &out.records {
        println!(
            "  {}  {:.6} s  {}  x{:.2}",
            r.pattern.loops,
            r.time_seconds,
            r.status,
            baseline.time_seconds / r.time_seconds
        );
    }
    Ok(())
}

fn cmd_match(global: &Global) -> Result<()> {
    let cfg = global.config()?;
    let registry = cfg.load_registry()?;
    for (i, path) in cfg.sources.iter().enumerate() {
        let inventory = cfg.load_inventory(i)?;
        let sites = scan_function_blocks(&inventory.unit, &registry.interest_names())?;
        let mut matches = match_by_name(&sites, &registry);
        matches.extend(match_by_similarity(&sites, &registry, cfg.similarity_threshold));
        println!("{}: {} call sites, {} matches", path.display(), sites.len(), matches.len());
        for m in &matches {
            println!(
                "  site {:>3} {:<12} -> {:<12} {:<14} {:<5} similarity {:.3}  entry {}",
                m.site.id,
                m.site.callee_name,
                m.entry.block_name,
                m.entry.device_kind.to_string(),
                match m.match_kind {
                    MatchKind::Name => "name",
                    MatchKind::Similarity => "clone",
                },
                m.similarity,
                m.entry.entry_point
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run => cmd_run(&cli.global),
        Command::Scan { files } => cmd_scan(&cli.global, files),
        Command::Ga { device } => cmd_ga(&cli.global, *device),
        Command::Narrow => cmd_narrow(&cli.global),
        Command::Match => cmd_match(&cli.global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
