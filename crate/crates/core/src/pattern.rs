//! Offload destinations, gene bit vectors and concrete offload patterns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceKind {
    ManyCoreCpu,
    Gpu,
    Fpga,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 3] = [DeviceKind::ManyCoreCpu, DeviceKind::Gpu, DeviceKind::Fpga];

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::ManyCoreCpu => "many-core-cpu",
            DeviceKind::Gpu => "gpu",
            DeviceKind::Fpga => "fpga",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "many-core-cpu" | "cpu" | "manycore" | "many-core" => Ok(DeviceKind::ManyCoreCpu),
            "gpu" => Ok(DeviceKind::Gpu),
            "fpga" => Ok(DeviceKind::Fpga),
            other => Err(format!("unknown device kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffloadMethod {
    FunctionBlock,
    Loops,
}

impl fmt::Display for OffloadMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffloadMethod::FunctionBlock => "function-block",
            OffloadMethod::Loops => "loops",
        })
    }
}

/// Per-candidate offload decisions: bit `i` set means candidate loop `i`
/// (in inventory order) is offloaded.
///
/// Ordering is lexicographic with `0 < 1`, which is what elite tie-breaking
/// relies on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gene(Vec<bool>);

impl Gene {
    pub fn zeros(len: usize) -> Self {
        Gene(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Gene(vec![true; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Gene(bits)
    }

    /// Gene with exactly the listed positions set.
    pub fn with_set(len: usize, positions: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &p in positions {
            bits[p] = true;
        }
        Gene(bits)
    }

    /// The `index`-th pattern in binary enumeration order, bit 0 first.
    pub fn from_index(len: usize, index: u64) -> Self {
        Gene((0..len).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn set_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

impl fmt::Display for Gene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Gene {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid gene character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Gene)
    }
}

impl Serialize for Gene {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Gene {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A function-block replacement: the call at `site_id` is redirected to an
/// accelerated `entry_point` running on `device`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSubstitution {
    pub site_id: usize,
    pub callee: String,
    pub block_name: String,
    pub entry_point: String,
    pub device: DeviceKind,
}

/// One concrete candidate handed to an evaluator.
///
/// `loops` indexes the candidates of the inventory the pattern is evaluated
/// against. `block` is either the substitution under test (function-block
/// stages) or an already adopted substitution carried into loop stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffloadPattern {
    pub device: DeviceKind,
    pub method: OffloadMethod,
    pub loops: Gene,
    pub block: Option<BlockSubstitution>,
}

impl OffloadPattern {
    pub fn loops(device: DeviceKind, loops: Gene, carried: Option<BlockSubstitution>) -> Self {
        OffloadPattern {
            device,
            method: OffloadMethod::Loops,
            loops,
            block: carried,
        }
    }

    pub fn block(device: DeviceKind, gene_length: usize, block: BlockSubstitution) -> Self {
        OffloadPattern {
            device,
            method: OffloadMethod::FunctionBlock,
            loops: Gene::zeros(gene_length),
            block: Some(block),
        }
    }

    /// Short human-readable label, also used to key work directories.
    pub fn label(&self) -> String {
        match (&self.method, &self.block) {
            (OffloadMethod::FunctionBlock, Some(b)) => {
                format!("{}:block:{}->{}", self.device, b.callee, b.entry_point)
            }
            (_, Some(b)) => format!("{}:loops:{}+{}@{}", self.device, self.loops, b.callee, b.device),
            _ => format!("{}:loops:{}", self.device, self.loops),
        }
    }
}
