use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use proptest::prelude::*;

use offload_core::blocks::{normalize_name, trigram_jaccard};
use offload_core::code_model::{
    insert_parallel_directives, scan_function_blocks, scan_loops, substitute_function_block, LoopInventory, ScanOptions,
    SourceUnit,
};
use offload_core::config::RunConfig;
use offload_core::eval::{
    simulate_time, BaselineResult, DeviceSpec, EvalJob, Evaluator, LoopProfile, Measurement, SimProfile,
    SimulatedEvaluator, Status,
};
use offload_core::exec::Parallelism;
use offload_core::fpga::{run_fpga_stage, NarrowingParams};
use offload_core::ga::{goodness_of_fit, run_ga, GaParams, SearchContext};
use offload_core::plan::run_plan;
use offload_core::report::{SearchReport, UserTargets};
use offload_core::{DeviceKind, Gene, OffloadPattern};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn inventory(src: &str) -> LoopInventory {
    scan_loops(&Arc::new(SourceUnit::new("gen.c", src)), &ScanOptions::default()).unwrap()
}

/// C text with `shape.len()` top-level loops; a `true` entry adds an inner
/// loop. Indentation varies per loop.
fn source(shape: &[(bool, usize)]) -> String {
    let mut s = String::from("void f(double *a, double *b, int n) {\n  int i, j;\n");
    for &(nested, indent) in shape {
        let pad = " ".repeat(indent);
        if nested {
            s.push_str(&format!("{pad}for (i = 0; i < n; i++) {{\n{pad}  for (j = 0; j < n; j++)\n{pad}    a[i * n + j] = b[j] * 2.0;\n{pad}}}\n"));
        } else {
            s.push_str(&format!("{pad}for (i = 0; i < n; i++)\n{pad}  a[i] = a[i] + b[i];\n"));
        }
    }
    s.push_str("}\n");
    s
}

fn shape() -> impl Strategy<Value = Vec<(bool, usize)>> {
    prop::collection::vec((any::<bool>(), 0usize..7), 1..8)
}

fn with_profile(n: usize, loops: Vec<LoopProfile>) -> SimulatedEvaluator {
    assert_eq!(loops.len(), n);
    SimulatedEvaluator::new(SimProfile {
        base_seconds: 0.5,
        loops: loops.into_iter().enumerate().collect(),
        ..SimProfile::default()
    })
}

fn measure(ev: &dyn Evaluator, inv: &LoopInventory, device: &DeviceSpec, gene: Gene) -> Measurement {
    let baseline = ev.measure_baseline(inv, device).unwrap();
    let pattern = OffloadPattern::loops(device.kind, gene, None);
    ev.evaluate(&EvalJob {
        pattern: &pattern,
        inventory: inv,
        device,
        baseline: &baseline,
        tolerance: 1e-4,
        timeout_seconds: 180.0,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn directives_add_one_line_per_bit(shape in shape(), seed in any::<u64>()) {
        let src = source(&shape);
        let inv = inventory(&src);
        let n = inv.gene_length();
        let dialect = DeviceSpec::default_for(DeviceKind::Gpu).dialect();
        let same = insert_parallel_directives(&inv, &Gene::zeros(n), &dialect).unwrap();
        prop_assert_eq!(&same.text, &src);
        let gene = Gene::from_index(n, seed % (1u64 << n));
        let out = insert_parallel_directives(&inv, &gene, &dialect).unwrap();
        prop_assert_eq!(out.text.lines().count(), src.lines().count() + gene.count_ones());
    }

    #[test]
    fn scanning_is_stable(shape in shape()) {
        let src = source(&shape);
        prop_assert_eq!(inventory(&src), inventory(&src));
    }

    #[test]
    fn cpu_time_never_grows_with_more_bits(
        loops in prop::collection::vec((0.0f64..5.0, 0.01f64..1.0), 6),
        gene in prop::collection::vec(any::<bool>(), 6),
        extra in 0usize..6,
    ) {
        let src = source(&[(false, 2); 6]);
        let inv = inventory(&src);
        let ev = with_profile(6, loops.iter().map(|&(s, pf)| LoopProfile {
            serial_seconds: s,
            parallel_fraction: pf,
            ..LoopProfile::default()
        }).collect());
        let cpu = DeviceSpec::default_for(DeviceKind::ManyCoreCpu);
        let mut more = gene.clone();
        more[extra] = true;
        let before = measure(&ev, &inv, &cpu, Gene::from_bits(gene));
        let after = measure(&ev, &inv, &cpu, Gene::from_bits(more));
        prop_assert!(after.time_seconds <= before.time_seconds);
    }

    #[test]
    fn penalized_patterns_rank_below_ok(t in 1e-6f64..999.0, penalty in 1000.0f64..5000.0) {
        let m = |status| Measurement {
            time_seconds: t,
            status,
            output_digest: None,
            resources_used: 0.0,
            wall_cost_seconds: t,
        };
        let ok = goodness_of_fit(&m(Status::Ok), penalty);
        for status in [Status::Timeout, Status::WrongResult, Status::CompileFail] {
            prop_assert!(goodness_of_fit(&m(status), penalty) < ok);
        }
    }

    #[test]
    fn fitness_decreases_with_time(a in 1e-6f64..1e4, b in 1e-6f64..1e4) {
        prop_assume!(a < b);
        let m = |t| Measurement {
            time_seconds: t,
            status: Status::Ok,
            output_digest: None,
            resources_used: 0.0,
            wall_cost_seconds: t,
        };
        prop_assert!(goodness_of_fit(&m(a), 1000.0) > goodness_of_fit(&m(b), 1000.0));
    }

    #[test]
    fn name_match_is_symmetric(a in "[a-zA-Z_-]{1,8}", b in "[a-zA-Z_-]{1,8}") {
        let ab = normalize_name(&a) == normalize_name(&b);
        let ba = normalize_name(&b) == normalize_name(&a);
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn similarity_is_symmetric(
        a in prop::collection::vec("[a-d]", 0..12),
        b in prop::collection::vec("[a-d]", 0..12),
    ) {
        let ab = trigram_jaccard(&a, &b);
        prop_assert_eq!(ab, trigram_jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(trigram_jaccard(&a, &a), 1.0);
    }
}

#[test]
fn baseline_equals_zero_pattern() {
    let cfg = RunConfig::load(&fixture("threemm.toml")).unwrap();
    let inv = cfg.load_inventory(0).unwrap();
    let ev = cfg.evaluator().unwrap();
    for device in &cfg.devices {
        let base = ev.measure_baseline(&inv, device).unwrap();
        let zero = measure(ev.as_ref(), &inv, device, Gene::zeros(inv.gene_length()));
        assert_eq!(zero.time_seconds, base.time_seconds, "{}", device.kind);
    }
}

#[test]
fn gpu_transfers_can_make_offloading_slower() {
    // One NAS.BT-like candidate whose per-iteration transfers dominate.
    let cfg = RunConfig::load(&fixture("nasbt.toml")).unwrap();
    let inv = cfg.load_inventory(0).unwrap();
    let ev = cfg.evaluator().unwrap();
    let gpu = cfg.devices.iter().find(|d| d.kind == DeviceKind::Gpu).unwrap();
    let n = inv.gene_length();
    let off = measure(ev.as_ref(), &inv, gpu, Gene::zeros(n));
    let on = measure(ev.as_ref(), &inv, gpu, Gene::with_set(n, &[50]));
    assert!(on.time_seconds > off.time_seconds, "{} <= {}", on.time_seconds, off.time_seconds);
}

/// Counts evaluator calls per pattern.
struct Counting<'a> {
    inner: &'a dyn Evaluator,
    calls: Mutex<HashMap<String, usize>>,
}

impl Evaluator for Counting<'_> {
    fn backend_name(&self) -> &'static str {
        "counting"
    }

    fn measure_baseline(&self, inventory: &LoopInventory, device: &DeviceSpec) -> offload_core::Result<BaselineResult> {
        self.inner.measure_baseline(inventory, device)
    }

    fn evaluate(&self, job: &EvalJob<'_>) -> offload_core::Result<Measurement> {
        *self.calls.lock().unwrap().entry(job.pattern.label()).or_default() += 1;
        self.inner.evaluate(job)
    }
}

fn ga_fixture() -> (LoopInventory, SimulatedEvaluator) {
    let inv = inventory(&source(&[(false, 2); 8]));
    let loops = (0..8)
        .map(|i| LoopProfile {
            serial_seconds: 1.0 + i as f64,
            parallel_fraction: 0.9,
            bytes_transferred: (8 - i) as f64 * 1e8,
            ..LoopProfile::default()
        })
        .collect();
    (inv, with_profile(8, loops))
}

#[test]
fn ga_never_measures_a_pattern_twice() {
    let (inv, sim) = ga_fixture();
    let counting = Counting {
        inner: &sim,
        calls: Mutex::new(HashMap::new()),
    };
    let gpu = DeviceSpec::default_for(DeviceKind::Gpu);
    let baseline = sim.measure_baseline(&inv, &gpu).unwrap();
    let ctx = SearchContext {
        device: &gpu,
        baseline: &baseline,
        tolerance: 1e-4,
        carried: None,
        parallelism: Parallelism::Parallel,
    };
    for seed in 0..10 {
        counting.calls.lock().unwrap().clear();
        let out = run_ga(&inv, &counting, &GaParams::for_gene_length(8, 20, seed), &ctx).unwrap();
        let calls = counting.calls.lock().unwrap();
        assert!(calls.values().all(|&c| c == 1), "seed {seed}: repeated measurement");
        assert_eq!(calls.len(), out.evaluations());
    }
}

#[test]
fn ga_history_is_reproducible() {
    let (inv, sim) = ga_fixture();
    let cpu = DeviceSpec::default_for(DeviceKind::ManyCoreCpu);
    let baseline = sim.measure_baseline(&inv, &cpu).unwrap();
    let run = |parallelism| {
        let ctx = SearchContext {
            device: &cpu,
            baseline: &baseline,
            tolerance: 1e-4,
            carried: None,
            parallelism,
        };
        run_ga(&inv, &sim, &GaParams::for_gene_length(8, 20, 77), &ctx).unwrap()
    };
    let a = run(Parallelism::Parallel);
    let b = run(Parallelism::Sequential);
    assert_eq!(a.history, b.history);
    assert_eq!(a.log, b.log);
}

#[test]
fn narrowing_is_bounded_and_repeatable() {
    let cfg = RunConfig::load(&fixture("threemm.toml")).unwrap();
    let inv = cfg.load_inventory(0).unwrap();
    let ev = cfg.evaluator().unwrap();
    let fpga = DeviceSpec::default_for(DeviceKind::Fpga);
    let baseline = ev.measure_baseline(&inv, &fpga).unwrap();
    let ctx = SearchContext {
        device: &fpga,
        baseline: &baseline,
        tolerance: 1e-4,
        carried: None,
        parallelism: Parallelism::Parallel,
    };
    let a = run_fpga_stage(&inv, ev.as_ref(), &NarrowingParams::default(), &ctx).unwrap();
    let b = run_fpga_stage(&inv, ev.as_ref(), &NarrowingParams::default(), &ctx).unwrap();
    assert!(a.log.shortlist.len() <= 5 && a.log.top.len() <= 3 && a.records.len() <= 4);
    assert_eq!(a.log, b.log);
    assert_eq!(a.records, b.records);
}

#[test]
fn substitution_drops_the_callee_loops() {
    let cfg = RunConfig::load(&fixture("tdfir.toml")).unwrap();
    let inv = cfg.load_inventory(0).unwrap();
    let sites = scan_function_blocks(&inv.unit, &["tdFir".to_string()]).unwrap();
    let site = sites.iter().find(|s| s.callee_name == "tdFir").unwrap();
    let (unit, residual) = substitute_function_block(&inv, site, "tdFir_opencl", &ScanOptions::default()).unwrap();
    assert!(unit.text.contains("tdFir_opencl("));
    let replaced: Vec<usize> = inv.loops.iter().filter(|l| l.function == "tdFir").map(|l| l.id).collect();
    assert!(!replaced.is_empty());
    assert!(residual.candidates.iter().all(|id| !replaced.contains(id)));
    assert!(residual.candidate_loops().all(|l| l.function != "tdFir"));
    assert_eq!(residual.gene_length(), inv.gene_length() - replaced.len());
}

#[test]
fn report_round_trips_and_rejects_unknown_keys() {
    let cfg = RunConfig::load(&fixture("tdfir.toml")).unwrap();
    let inv = cfg.load_inventory(0).unwrap();
    let ev = cfg.evaluator().unwrap();
    let report = run_plan(
        &inv,
        &cfg.devices,
        &cfg.load_registry().unwrap(),
        &UserTargets::default(),
        ev.as_ref(),
        &cfg.plan_options(Parallelism::Parallel),
    )
    .unwrap();
    let json = report.to_json();
    assert_eq!(SearchReport::from_json(&json).unwrap(), report);

    let total: f64 = report.stages.iter().map(|s| s.wall_cost_seconds).sum();
    assert_eq!(report.total_wall_cost_seconds, total);

    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value["chosen"]["surprise"] = serde_json::json!(1);
    assert!(SearchReport::from_json(&value.to_string()).is_err());
    value["chosen"].as_object_mut().unwrap().remove("surprise");
    value["schema_version"] = serde_json::json!(99);
    assert!(SearchReport::from_json(&value.to_string()).is_err());
}

#[test]
fn default_devices_verify_fastest_first() {
    let class = |k| DeviceSpec::default_for(k).verification_time_class();
    assert!(class(DeviceKind::ManyCoreCpu) <= class(DeviceKind::Gpu));
    assert!(class(DeviceKind::Gpu) <= class(DeviceKind::Fpga));
}

#[test]
fn unprofitable_search_keeps_the_original() {
    // Every offload only adds transfer time.
    let inv = inventory(&source(&[(false, 2); 3]));
    let sim = with_profile(
        3,
        (0..3)
            .map(|_| LoopProfile {
                serial_seconds: 1.0,
                parallel_fraction: 0.0,
                bytes_transferred: 1e10,
                ..LoopProfile::default()
            })
            .collect(),
    );
    let gpu = DeviceSpec::default_for(DeviceKind::Gpu);
    let report = run_plan(
        &inv,
        std::slice::from_ref(&gpu),
        &Default::default(),
        &UserTargets::default(),
        &sim,
        &Default::default(),
    )
    .unwrap();
    assert_eq!(report.chosen.stage, None);
    assert_eq!(report.chosen.improvement, 1.0);
    assert_eq!(report.chosen.time_seconds, report.baseline_seconds);
    let full = simulate_time(&OffloadPattern::loops(DeviceKind::Gpu, Gene::ones(3), None), &inv, &sim.profile, &gpu);
    assert!(full.seconds > report.baseline_seconds);
}
