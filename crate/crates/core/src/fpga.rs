//! FPGA loop stage: rank candidates instead of breeding them.
//!
//! Building one FPGA pattern takes hours, so a GA is out of reach. Candidates
//! are shortlisted by `arithmetic_intensity · trip_count`, the shortlist is
//! re-ranked by intensity per resource unit, each of the top loops is measured
//! alone, and finally the two fastest singles are measured together.

use serde::{Deserialize, Serialize};

use crate::code_model::LoopInventory;
use crate::error::Error;
use crate::eval::{EvalJob, Evaluator, Measurement};
use crate::exec::map_ordered;
use crate::ga::SearchContext;
use crate::pattern::{Gene, OffloadPattern};
use crate::report::PatternRecord;

pub const DEFAULT_INTENSITY_KEEP: usize = 5;
pub const DEFAULT_EFFICIENCY_KEEP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarrowingParams {
    /// Shortlist size after the intensity ranking.
    pub k1: usize,
    /// Loops measured alone after the resource-efficiency ranking.
    pub k2: usize,
    pub timeout_seconds: f64,
    pub penalty_seconds: f64,
}

impl Default for NarrowingParams {
    fn default() -> Self {
        NarrowingParams {
            k1: DEFAULT_INTENSITY_KEEP,
            k2: DEFAULT_EFFICIENCY_KEEP,
            timeout_seconds: crate::eval::DEFAULT_TIMEOUT_SECONDS,
            penalty_seconds: crate::ga::DEFAULT_PENALTY_SECONDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopMetrics {
    pub loop_id: usize,
    pub arithmetic_intensity: f64,
    pub loop_count: u64,
    pub resource_cost: f64,
}

impl LoopMetrics {
    pub fn intensity_score(&self) -> f64 {
        self.arithmetic_intensity * self.loop_count as f64
    }

    /// Intensity per resource unit; a zero cost counts as one unit.
    pub fn efficiency_score(&self) -> f64 {
        let cost = if self.resource_cost > 0.0 { self.resource_cost } else { 1.0 };
        self.arithmetic_intensity / cost
    }
}

/// Metrics of every candidate loop. Resource costs come from the evaluator
/// when it knows them, one unit otherwise.
pub fn loop_metrics(inventory: &LoopInventory, evaluator: &dyn Evaluator) -> Vec<LoopMetrics> {
    inventory
        .candidate_loops()
        .map(|l| LoopMetrics {
            loop_id: l.id,
            arithmetic_intensity: l.arithmetic_intensity(),
            loop_count: l.trip_count,
            resource_cost: evaluator.resource_estimate(l.id).unwrap_or(1.0),
        })
        .collect()
}

fn top_by(metrics: &[&LoopMetrics], k: usize, score: impl Fn(&LoopMetrics) -> f64) -> Vec<usize> {
    let mut ranked: Vec<&LoopMetrics> = metrics.to_vec();
    ranked.sort_by(|a, b| score(b).total_cmp(&score(a)).then(a.loop_id.cmp(&b.loop_id)));
    ranked.into_iter().take(k).map(|m| m.loop_id).collect()
}

/// Top `k1` loops by `intensity · loop_count`, ties to the smaller id.
pub fn narrow_by_intensity(metrics: &[LoopMetrics], k1: usize) -> Vec<usize> {
    top_by(&metrics.iter().collect::<Vec<_>>(), k1, LoopMetrics::intensity_score)
}

/// Top `k2` of `shortlist` by intensity per resource unit.
pub fn narrow_by_resource_efficiency(shortlist: &[usize], metrics: &[LoopMetrics], k2: usize) -> Vec<usize> {
    let picked: Vec<&LoopMetrics> = metrics.iter().filter(|m| shortlist.contains(&m.loop_id)).collect();
    top_by(&picked, k2, LoopMetrics::efficiency_score)
}

/// The two fastest ok singles, in ascending loop id; `None` with fewer than
/// two ok.
pub fn combination_pair(singles: &[(usize, Measurement)]) -> Option<(usize, usize)> {
    let mut ok: Vec<&(usize, Measurement)> = singles.iter().filter(|(_, m)| m.is_ok()).collect();
    ok.sort_by(|a, b| a.1.time_seconds.total_cmp(&b.1.time_seconds).then(a.0.cmp(&b.0)));
    match ok.as_slice() {
        [a, b, ..] => Some((a.0.min(b.0), a.0.max(b.0))),
        _ => None,
    }
}

/// Loop sets to measure: one per top loop, then the pair of the two fastest
/// ok singles when `singles` (the phase-1 results) has two of them.
pub fn fpga_measurement_plan(top: &[usize], singles: &[(usize, Measurement)]) -> Vec<Vec<usize>> {
    let mut plan: Vec<Vec<usize>> = top.iter().map(|&id| vec![id]).collect();
    if let Some((a, b)) = combination_pair(singles) {
        plan.push(vec![a, b]);
    }
    plan
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrowingEntry {
    pub metrics: LoopMetrics,
    pub intensity_score: f64,
    /// 1-based rank in the intensity ordering.
    pub intensity_rank: usize,
    pub efficiency_score: f64,
    /// 1-based rank within the shortlist, when shortlisted.
    pub efficiency_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrowingLog {
    pub shortlist: Vec<usize>,
    pub top: Vec<usize>,
    pub combination: Option<(usize, usize)>,
    pub entries: Vec<NarrowingEntry>,
}

#[derive(Debug, Clone)]
pub struct FpgaOutcome {
    pub log: NarrowingLog,
    pub records: Vec<PatternRecord>,
}

fn gene_for(inventory: &LoopInventory, ids: &[usize]) -> Gene {
    let positions: Vec<usize> = ids
        .iter()
        .filter_map(|id| inventory.candidates.iter().position(|c| c == id))
        .collect();
    Gene::with_set(inventory.gene_length(), &positions)
}

pub fn run_fpga_stage(
    inventory: &LoopInventory,
    evaluator: &dyn Evaluator,
    params: &NarrowingParams,
    ctx: &SearchContext<'_>,
) -> Result<FpgaOutcome, Error> {
    let metrics = loop_metrics(inventory, evaluator);
    let shortlist = narrow_by_intensity(&metrics, params.k1);
    let top = narrow_by_resource_efficiency(&shortlist, &metrics, params.k2);

    let measure = |ids: &Vec<usize>| -> Result<(OffloadPattern, Measurement), Error> {
        let pattern = OffloadPattern::loops(ctx.device.kind, gene_for(inventory, ids), ctx.carried.cloned());
        let m = evaluator.evaluate(&EvalJob {
            pattern: &pattern,
            inventory,
            device: ctx.device,
            baseline: ctx.baseline,
            tolerance: ctx.tolerance,
            timeout_seconds: params.timeout_seconds,
        })?;
        Ok((pattern, m))
    };

    let mut records = Vec::new();
    let mut singles = Vec::new();
    let phase1: Vec<Vec<usize>> = top.iter().map(|&id| vec![id]).collect();
    for (ids, result) in phase1.iter().zip(map_ordered(&phase1, ctx.parallelism, measure)) {
        let (pattern, m) = result?;
        records.push(PatternRecord::new(pattern, Some(0), &m, params.penalty_seconds));
        singles.push((ids[0], m));
    }
    let combination = combination_pair(&singles);
    if let Some((a, b)) = combination {
        let (pattern, m) = measure(&vec![a, b])?;
        records.push(PatternRecord::new(pattern, Some(1), &m, params.penalty_seconds));
    }

    let mut by_intensity = metrics.clone();
    by_intensity.sort_by(|a, b| b.intensity_score().total_cmp(&a.intensity_score()).then(a.loop_id.cmp(&b.loop_id)));
    let entries = by_intensity
        .into_iter()
        .enumerate()
        .map(|(i, m)| NarrowingEntry {
            intensity_score: m.intensity_score(),
            intensity_rank: i + 1,
            efficiency_score: m.efficiency_score(),
            efficiency_rank: top.iter().position(|&id| id == m.loop_id).map(|r| r + 1),
            metrics: m,
        })
        .collect();

    Ok(FpgaOutcome {
        log: NarrowingLog {
            shortlist,
            top,
            combination,
            entries,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Status;

    fn m(id: usize, ai: f64, count: u64, cost: f64) -> LoopMetrics {
        LoopMetrics {
            loop_id: id,
            arithmetic_intensity: ai,
            loop_count: count,
            resource_cost: cost,
        }
    }

    fn timed(t: f64, status: Status) -> Measurement {
        Measurement {
            time_seconds: t,
            status,
            output_digest: None,
            resources_used: 0.0,
            wall_cost_seconds: t,
        }
    }

    #[test]
    fn intensity_keeps_top_five() {
        let metrics: Vec<_> = (0..10).map(|i| m(i, 1.0 + i as f64, 10, 1.0)).collect();
        assert_eq!(narrow_by_intensity(&metrics, 5), vec![9, 8, 7, 6, 5]);
        assert_eq!(narrow_by_intensity(&metrics[..3], 5), vec![2, 1, 0]);
        let tied = vec![m(4, 2.0, 1, 1.0), m(1, 2.0, 1, 1.0)];
        assert_eq!(narrow_by_intensity(&tied, 5), vec![1, 4]);
    }

    #[test]
    fn efficiency_prefers_cheap_loops() {
        let metrics = vec![m(0, 6.0, 1, 3.0), m(1, 6.0, 1, 1.0), m(2, 6.0, 1, 2.0), m(3, 1.0, 1, 1.0), m(4, 0.5, 1, 0.0)];
        assert_eq!(narrow_by_resource_efficiency(&[0, 1, 2, 3, 4], &metrics, 3), vec![1, 2, 0]);
        assert_eq!(narrow_by_resource_efficiency(&[3, 4], &metrics, 3), vec![3, 4]);
        assert_eq!(metrics[4].efficiency_score(), 0.5);
    }

    #[test]
    fn plan_combines_two_fastest() {
        let singles = vec![(7, timed(5.0, Status::Ok)), (3, timed(2.0, Status::Ok)), (9, timed(9.0, Status::Ok))];
        let plan = fpga_measurement_plan(&[7, 3, 9], &singles);
        assert_eq!(plan, vec![vec![7], vec![3], vec![9], vec![3, 7]]);

        let one_ok = vec![(7, timed(5.0, Status::Ok)), (3, timed(1.0, Status::CompileFail))];
        assert_eq!(fpga_measurement_plan(&[7, 3], &one_ok).len(), 2);
    }
}
