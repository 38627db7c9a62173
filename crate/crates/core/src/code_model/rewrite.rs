use std::sync::Arc;

use super::scan::{function_bodies, scan_loops};
use super::{AppliedSubstitution, Dialect, FunctionBlockSite, LoopInventory, ScanOptions, SourceUnit, Span};
use crate::error::Error;
use crate::Gene;

/// Inserts the dialect's directive on its own line before every candidate
/// loop whose bit is set. Unset bits leave the text untouched.
///
/// The directive takes the indentation of the loop's line. A loop that does
/// not start its line is split onto a new line first, so the line count grows
/// by one per offloaded loop only when loop headers begin their lines.
pub fn insert_parallel_directives(
    inventory: &LoopInventory,
    bits: &Gene,
    dialect: &Dialect,
) -> Result<SourceUnit, Error> {
    if bits.len() != inventory.gene_length() {
        return Err(Error::LengthMismatch {
            expected: inventory.gene_length(),
            actual: bits.len(),
        });
    }
    let unit = &inventory.unit;
    let text = &unit.text;
    let mut offsets: Vec<usize> = inventory
        .offloaded_ids(bits)
        .into_iter()
        .filter_map(|id| inventory.loop_by_id(id))
        .map(|l| l.span.start)
        .collect();
    offsets.sort_unstable();

    let mut out = String::with_capacity(text.len() + offsets.len() * (dialect.directive().len() + 8));
    let mut cursor = 0;
    for at in offsets {
        let line_start = text[..at].rfind('\n').map_or(0, |p| p + 1);
        let prefix = &text[line_start..at];
        let indent: String = text[line_start..]
            .chars()
            .take_while(|c| *c == ' ' || *c == '\t')
            .collect();
        if prefix.trim().is_empty() {
            out.push_str(&text[cursor..line_start]);
            out.push_str(&indent);
            out.push_str(dialect.directive());
            out.push('\n');
            cursor = line_start;
        } else {
            out.push_str(&text[cursor..at]);
            out.push('\n');
            out.push_str(&indent);
            out.push_str(dialect.directive());
            out.push('\n');
            out.push_str(&indent);
            cursor = at;
        }
    }
    out.push_str(&text[cursor..]);

    let mut rewritten = SourceUnit::new(unit.path.clone(), out);
    rewritten.substitutions = unit.substitutions.clone();
    Ok(rewritten)
}

/// Redirects one call site to `entry_point` and returns the new unit with
/// the residual inventory: every loop inside the body of a substituted
/// callee is dropped, the rest keep their ids and trip counts.
pub fn substitute_function_block(
    inventory: &LoopInventory,
    site: &FunctionBlockSite,
    entry_point: &str,
    options: &ScanOptions,
) -> Result<(Arc<SourceUnit>, LoopInventory), Error> {
    let unit = &inventory.unit;
    let name_end = site.span.start + site.callee_name.len();
    let belongs = site.span.end <= unit.text.len()
        && unit.text.get(site.span.start..name_end) == Some(site.callee_name.as_str());
    if !belongs {
        return Err(Error::SiteMismatch { site: site.id });
    }
    if unit.substitutions.iter().any(|s| s.span.overlaps(&site.span)) {
        return Err(Error::SpanConflict { site: site.id });
    }

    let mut text = String::with_capacity(unit.text.len() + entry_point.len());
    text.push_str(&unit.text[..site.span.start]);
    text.push_str(entry_point);
    text.push_str(&unit.text[name_end..]);
    let delta = entry_point.len() as isize - site.callee_name.len() as isize;
    let shift = |p: usize| (p as isize + delta) as usize;

    let mut new_unit = SourceUnit::new(unit.path.clone(), text);
    new_unit.substitutions = unit
        .substitutions
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if s.span.start >= site.span.end {
                s.span = Span::new(shift(s.span.start), shift(s.span.end));
            }
            s
        })
        .collect();
    new_unit.substitutions.push(AppliedSubstitution {
        span: Span::new(site.span.start, shift(site.span.end)),
        callee: site.callee_name.clone(),
        entry_point: entry_point.to_string(),
    });
    let new_unit = Arc::new(new_unit);

    let replaced: Vec<Span> = function_bodies(&new_unit)?
        .into_iter()
        .filter(|(name, _)| new_unit.substitutions.iter().any(|s| &s.callee == name))
        .map(|(_, body)| body)
        .collect();

    let rescanned = scan_loops(&new_unit, options)?;
    let loops: Vec<_> = rescanned
        .loops
        .into_iter()
        .filter(|l| !replaced.iter().any(|b| b.contains(&l.span)))
        .map(|mut l| {
            l.trip_count = inventory.loop_by_id(l.id).map_or(0, |old| old.trip_count);
            l
        })
        .collect();
    let candidates = loops.iter().filter(|l| l.parallel_candidate).map(|l| l.id).collect();
    let residual = LoopInventory {
        unit: Arc::clone(&new_unit),
        loops,
        candidates,
    };
    Ok((new_unit, residual))
}
