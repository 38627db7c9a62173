//! Function-block discovery: registry name matching and token-similarity
//! clone detection against reference implementations.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code_model::{normalize_tokens, tokenize, FunctionBlockSite};
use crate::error::Error;
use crate::pattern::{BlockSubstitution, DeviceKind, OffloadPattern};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.8;

/// Lowercase with `_` and `-` removed: `td_fir`, `tdFir` and `TD-FIR` agree.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub block_name: String,
    pub device_kind: DeviceKind,
    pub entry_point: String,
    pub reference_tokens: Vec<String>,
    pub reported_speed_class: Option<String>,
}

/// Accelerated implementations known for each device.
///
/// File format: one record per line, whitespace separated,
/// `name device entry_point reference_path [speed_class]`; `#` starts a
/// comment. `reference_path` is C source resolved against the registry's
/// directory; the body of its first function definition becomes the
/// reference token sequence. `-` means no reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    pub entries: Vec<RegistryEntry>,
}

impl Registry {
    pub fn new(entries: Vec<RegistryEntry>) -> Result<Self, Error> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert((normalize_name(&e.block_name), e.device_kind)) {
                return Err(Error::Registry {
                    path: String::new(),
                    message: format!("duplicate entry `{}` for {}", e.block_name, e.device_kind),
                });
            }
        }
        Ok(Registry { entries })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&path.display().to_string(), &text, dir)
    }

    pub fn parse(path: &str, text: &str, base_dir: &Path) -> Result<Self, Error> {
        let bad = |n: usize, message: String| Error::Registry {
            path: path.to_string(),
            message: format!("line {}: {message}", n + 1),
        };
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(bad(n, format!("expected 4 or 5 fields, found {}", fields.len())));
            }
            let device_kind = fields[1].parse().map_err(|e: String| bad(n, e))?;
            let reference_tokens = if fields[3] == "-" {
                Vec::new()
            } else {
                let ref_path = base_dir.join(fields[3]);
                let src = std::fs::read_to_string(&ref_path).map_err(|e| Error::io(&ref_path, e))?;
                reference_body_tokens(&ref_path.display().to_string(), &src)?
            };
            entries.push(RegistryEntry {
                block_name: fields[0].to_string(),
                device_kind,
                entry_point: fields[2].to_string(),
                reference_tokens,
                reported_speed_class: fields.get(4).map(|s| s.to_string()),
            });
        }
        Self::new(entries).map_err(|e| match e {
            Error::Registry { message, .. } => Error::Registry {
                path: path.to_string(),
                message,
            },
            other => other,
        })
    }

    /// Block names, for admitting external callees during site scanning.
    pub fn interest_names(&self) -> Vec<String> {
        let names: BTreeSet<&str> = self.entries.iter().map(|e| e.block_name.as_str()).collect();
        names.into_iter().map(str::to_string).collect()
    }
}

/// Normalized tokens of the first function body in `src`, or of the whole
/// file when it holds no function definition.
pub fn reference_body_tokens(path: &str, src: &str) -> Result<Vec<String>, Error> {
    let tokens = tokenize(path, src)?;
    let open = tokens.windows(2).position(|w| w[0].is(")") && w[1].is("{"));
    let body = match open {
        Some(p) => {
            let start = p + 2;
            let mut depth = 1usize;
            let mut end = start;
            while end < tokens.len() {
                match tokens[end].text.as_str() {
                    "{" => depth += 1,
                    "}" => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                end += 1;
            }
            &tokens[start..end]
        }
        None => &tokens[..],
    };
    Ok(normalize_tokens(body))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    Name,
    Similarity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatch {
    pub site: FunctionBlockSite,
    pub entry: RegistryEntry,
    pub match_kind: MatchKind,
    pub similarity: f64,
}

pub fn match_by_name(sites: &[FunctionBlockSite], registry: &Registry) -> Vec<BlockMatch> {
    let mut out = Vec::new();
    for site in sites {
        let name = normalize_name(&site.callee_name);
        for entry in &registry.entries {
            if normalize_name(&entry.block_name) == name {
                let similarity = if site.body_tokens.is_empty() || entry.reference_tokens.is_empty() {
                    0.0
                } else {
                    trigram_jaccard(&site.body_tokens, &entry.reference_tokens)
                };
                out.push(BlockMatch {
                    site: site.clone(),
                    entry: entry.clone(),
                    match_kind: MatchKind::Name,
                    similarity,
                });
            }
        }
    }
    out
}

fn trigrams(tokens: &[String]) -> BTreeSet<&[String]> {
    if tokens.len() < 3 {
        return std::iter::once(tokens).collect();
    }
    tokens.windows(3).collect()
}

/// Jaccard index over the sets of token 3-grams. Sequences shorter than
/// three tokens count as a single gram.
pub fn trigram_jaccard(a: &[String], b: &[String]) -> f64 {
    let ga = trigrams(a);
    let gb = trigrams(b);
    let union = ga.union(&gb).count();
    if union == 0 {
        return 1.0;
    }
    ga.intersection(&gb).count() as f64 / union as f64
}

pub fn match_by_similarity(sites: &[FunctionBlockSite], registry: &Registry, threshold: f64) -> Vec<BlockMatch> {
    let mut out = Vec::new();
    for site in sites.iter().filter(|s| !s.body_tokens.is_empty()) {
        for entry in registry.entries.iter().filter(|e| !e.reference_tokens.is_empty()) {
            let similarity = trigram_jaccard(&site.body_tokens, &entry.reference_tokens);
            if similarity >= threshold {
                out.push(BlockMatch {
                    site: site.clone(),
                    entry: entry.clone(),
                    match_kind: MatchKind::Similarity,
                    similarity,
                });
            }
        }
    }
    out
}

/// Candidate substitutions for one device, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProposal {
    pub patterns: Vec<OffloadPattern>,
    /// Matches that lost a conflict for the same call site.
    pub dropped: Vec<String>,
}

/// One single-substitution pattern per surviving match for `device`: name
/// matches first, then descending similarity. When several matches target
/// the same call site only the highest ranked is kept.
pub fn propose_block_patterns(matches: &[BlockMatch], device: DeviceKind, gene_length: usize) -> BlockProposal {
    let mut ranked: Vec<&BlockMatch> = matches.iter().filter(|m| m.entry.device_kind == device).collect();
    ranked.sort_by(|a, b| {
        a.match_kind
            .cmp(&b.match_kind)
            .then(b.similarity.total_cmp(&a.similarity))
            .then(a.site.id.cmp(&b.site.id))
            .then(a.entry.block_name.cmp(&b.entry.block_name))
    });

    let mut taken = Vec::new();
    let mut patterns = Vec::new();
    let mut dropped = Vec::new();
    for m in ranked {
        if taken.iter().any(|s: &crate::code_model::Span| s.overlaps(&m.site.span)) {
            dropped.push(format!(
                "site {} `{}` -> `{}` ({} match, similarity {:.3}) conflicts with a higher-ranked match",
                m.site.id,
                m.site.callee_name,
                m.entry.block_name,
                match m.match_kind {
                    MatchKind::Name => "name",
                    MatchKind::Similarity => "similarity",
                },
                m.similarity
            ));
            continue;
        }
        taken.push(m.site.span);
        patterns.push(OffloadPattern::block(
            device,
            gene_length,
            BlockSubstitution {
                site_id: m.site.id,
                callee: m.site.callee_name.clone(),
                block_name: m.entry.block_name.clone(),
                entry_point: m.entry.entry_point.clone(),
                device,
            },
        ));
    }
    BlockProposal { patterns, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::Span;

    fn site(id: usize, name: &str, body: &[&str]) -> FunctionBlockSite {
        FunctionBlockSite {
            id,
            callee_name: name.into(),
            span: Span::new(id * 10, id * 10 + 5),
            caller: "main".into(),
            body_tokens: body.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn entry(name: &str, device: DeviceKind, reference: &[&str]) -> RegistryEntry {
        RegistryEntry {
            block_name: name.into(),
            device_kind: device,
            entry_point: format!("{name}_{device}"),
            reference_tokens: reference.iter().map(|s| s.to_string()).collect(),
            reported_speed_class: None,
        }
    }

    fn toks(src: &str) -> Vec<String> {
        normalize_tokens(&tokenize("t", src).unwrap())
    }

    #[test]
    fn name_normalization() {
        assert_eq!(normalize_name("tdFir"), normalize_name("td_fir"));
        assert_eq!(normalize_name("TD-FIR"), "tdfir");
        assert_ne!(normalize_name("main"), normalize_name("td_fir"));
    }

    #[test]
    fn name_match_cases() {
        let reg = Registry::new(vec![
            entry("td_fir", DeviceKind::Fpga, &[]),
            entry("td_fir", DeviceKind::Gpu, &[]),
        ])
        .unwrap();
        let matches = match_by_name(&[site(0, "tdFir", &[]), site(1, "main", &[])], &reg);
        assert_eq!(matches.len(), 2);
        assert!(matches.iter().all(|m| m.site.id == 0 && m.match_kind == MatchKind::Name));
        let devices: BTreeSet<_> = matches.iter().map(|m| m.entry.device_kind).collect();
        assert_eq!(devices.len(), 2);
    }

    #[test]
    fn duplicate_registry_entries_rejected() {
        let err = Registry::new(vec![
            entry("fft", DeviceKind::Gpu, &[]),
            entry("FFT", DeviceKind::Gpu, &[]),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn similarity_extremes() {
        let a = toks("for (i = 0; i < n; i++) y[i] = x[i] * c;");
        assert_eq!(trigram_jaccard(&a, &a), 1.0);
        let b: Vec<String> = ["{", "}", "{"].iter().map(|s| s.to_string()).collect();
        let c: Vec<String> = ["+", "-", "*"].iter().map(|s| s.to_string()).collect();
        assert_eq!(trigram_jaccard(&b, &c), 0.0);
    }

    #[test]
    fn renamed_identifier_is_a_perfect_clone() {
        // 10 tokens each; positional renaming makes them identical.
        let body = toks("acc = acc + x [ i ] * h");
        let renamed = toks("sum = sum + x [ i ] * h");
        assert_eq!(body.len(), 10);
        assert_eq!(trigram_jaccard(&body, &renamed), 1.0);
        let mut reg = Registry::new(vec![entry("mac", DeviceKind::Gpu, &[])]).unwrap();
        reg.entries[0].reference_tokens = renamed.clone();
        let b: Vec<&str> = body.iter().map(String::as_str).collect();
        let m = match_by_similarity(&[site(0, "dot", &b)], &reg, 0.8);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].similarity, 1.0);
    }

    #[test]
    fn partial_overlap_hand_count() {
        // a: x y z w -> {xyz, yzw}; b: x y z q -> {xyz, yzq}; 1 / 3.
        let a: Vec<String> = ["x", "y", "z", "w"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["x", "y", "z", "q"].iter().map(|s| s.to_string()).collect();
        assert!((trigram_jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(trigram_jaccard(&a, &b), trigram_jaccard(&b, &a));
    }

    #[test]
    fn proposals_rank_name_first_and_drop_conflicts() {
        let s = site(0, "tdFir", &["a", "b", "c"]);
        let m_sim = BlockMatch {
            site: s.clone(),
            entry: entry("fir_generic", DeviceKind::Fpga, &["a", "b", "c"]),
            match_kind: MatchKind::Similarity,
            similarity: 1.0,
        };
        let m_name = BlockMatch {
            site: s,
            entry: entry("td_fir", DeviceKind::Fpga, &[]),
            match_kind: MatchKind::Name,
            similarity: 0.0,
        };
        let p = propose_block_patterns(&[m_sim, m_name], DeviceKind::Fpga, 4);
        assert_eq!(p.patterns.len(), 1);
        assert_eq!(p.patterns[0].block.as_ref().unwrap().block_name, "td_fir");
        assert_eq!(p.patterns[0].loops.len(), 4);
        assert_eq!(p.dropped.len(), 1);
    }

    #[test]
    fn no_matches_no_patterns() {
        let p = propose_block_patterns(&[], DeviceKind::Gpu, 0);
        assert!(p.patterns.is_empty());
    }

    #[test]
    fn registry_file_format() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ref.c"), "void r(float *o) { o[0] = 1.0f; }\n").unwrap();
        let text = "# name device entry ref [class]\ntd_fir fpga fpga_td_fir ref.c fast\ntd_fir gpu gpu_td_fir -\n";
        let reg = Registry::parse("reg", text, dir.path()).unwrap();
        assert_eq!(reg.entries.len(), 2);
        assert_eq!(reg.entries[0].reported_speed_class.as_deref(), Some("fast"));
        assert_eq!(reg.entries[0].reference_tokens, toks("o[0] = 1.0f;"));
        assert!(reg.entries[1].reference_tokens.is_empty());
        assert_eq!(reg.interest_names(), vec!["td_fir".to_string()]);
        assert!(Registry::parse("reg", "a gpu\n", dir.path()).is_err());
    }
}
