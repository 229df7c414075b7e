//! Abstract core feature sets and the table that prices them.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::metrics::DEFAULT_CLOCK_MHZ;
use super::PerfError;
use crate::product::{CipherId, StageSpec};

/// Optional core features. Zero-overhead loops, sign extension and
/// normalize-shift are present on every core and are not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    /// 16-bit / 32-bit multipliers.
    Mul,
    /// 8 KB instruction cache instead of 4 KB.
    ICache8,
    /// 8 KB data cache instead of 4 KB.
    DCache8,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Mul, Feature::ICache8, Feature::DCache8];

    pub const fn name(self) -> &'static str {
        match self {
            Feature::Mul => "mul",
            Feature::ICache8 => "icache8",
            Feature::DCache8 => "dcache8",
        }
    }

    const fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = PerfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mul" => Ok(Feature::Mul),
            "icache8" => Ok(Feature::ICache8),
            "dcache8" => Ok(Feature::DCache8),
            other => Err(PerfError::UnknownFeature(other.to_string())),
        }
    }
}

/// Which optional features a core carries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub const NONE: FeatureSet = FeatureSet(0);
    pub const ALL: FeatureSet = FeatureSet(0b111);

    pub fn has(self, f: Feature) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn with(self, f: Feature) -> Self {
        FeatureSet(self.0 | f.bit())
    }

    pub fn without(self, f: Feature) -> Self {
        FeatureSet(self.0 & !f.bit())
    }

    pub fn has_mul16_32(self) -> bool {
        self.has(Feature::Mul)
    }

    pub fn icache_kb(self) -> u32 {
        if self.has(Feature::ICache8) {
            8
        } else {
            4
        }
    }

    pub fn dcache_kb(self) -> u32 {
        if self.has(Feature::DCache8) {
            8
        } else {
            4
        }
    }

    pub fn features(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |&f| self.has(f))
    }

    /// Index into the eight possible sets.
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 8);
        FeatureSet(i as u8)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.features().map(Feature::name).collect();
        f.write_str(&names.join(" "))
    }
}

impl fmt::Debug for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureSet({self})")
    }
}

impl FromStr for FeatureSet {
    type Err = PerfError;

    /// Space separated feature names, `none`, or `all`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = FeatureSet::NONE;
        for word in s.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()) {
            match word {
                "none" => {}
                "all" => set = FeatureSet::ALL,
                w => set = set.with(w.parse()?),
            }
        }
        Ok(set)
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.features())
    }
}

/// Area (mm²) or power (mW) of a core: a base value plus a contribution per
/// optional feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureCosts {
    pub base: f64,
    pub per_feature: [f64; 3],
}

impl FeatureCosts {
    pub fn of(&self, f: Feature) -> f64 {
        self.per_feature[f as usize]
    }

    pub fn total(&self, set: FeatureSet) -> f64 {
        self.base + set.features().map(|f| self.of(f)).sum::<f64>()
    }
}

/// Cycles per block per cipher iteration for every (cipher, feature set),
/// plus the area and power price of each feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTable {
    cycles: [[u64; 8]; 3],
    pub area: FeatureCosts,
    pub power: FeatureCosts,
}

impl CostTable {
    /// Table from a featureless base cost per cipher and a multiplicative
    /// factor per (cipher, feature); factors compose and round to whole
    /// cycles.
    pub fn from_factors(
        base: [u64; 3],
        factors: [[f64; 3]; 3],
        area: FeatureCosts,
        power: FeatureCosts,
    ) -> Result<Self, PerfError> {
        let mut cycles = [[0u64; 8]; 3];
        for c in CipherId::ALL {
            for i in 0..8 {
                let set = FeatureSet::from_index(i);
                let factor: f64 = set.features().map(|f| factors[c.index()][f as usize]).product();
                cycles[c.index()][i] = (base[c.index()] as f64 * factor).round() as u64;
            }
        }
        let table = CostTable { cycles, area, power };
        table.validate()?;
        Ok(table)
    }

    /// Every iteration costs the same regardless of features.
    pub fn flat(per_cipher: [u64; 3], area: FeatureCosts, power: FeatureCosts) -> Result<Self, PerfError> {
        Self::from_factors(per_cipher, [[1.0; 3]; 3], area, power)
    }

    pub fn set_cycles(&mut self, cipher: CipherId, set: FeatureSet, cycles: u64) -> Result<(), PerfError> {
        self.cycles[cipher.index()][set.index()] = cycles;
        self.validate()
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        for c in CipherId::ALL {
            for i in 0..8 {
                if self.cycles[c.index()][i] == 0 {
                    return Err(PerfError::Cost(format!(
                        "{c} with [{}] costs zero cycles",
                        FeatureSet::from_index(i)
                    )));
                }
            }
        }
        for i in 0..8 {
            let set = FeatureSet::from_index(i);
            if !set.has(Feature::Mul) {
                let without = self.cycles[CipherId::Idea.index()][i];
                let with = self.cycles[CipherId::Idea.index()][set.with(Feature::Mul).index()];
                if with > without {
                    return Err(PerfError::Cost(format!(
                        "adding the multiplier makes idea slower ([{set}]: {without} -> {with})"
                    )));
                }
            }
        }
        for (what, costs) in [("area", &self.area), ("power", &self.power)] {
            if !(costs.base >= 0.0) || costs.per_feature.iter().any(|&v| !(v > 0.0)) {
                return Err(PerfError::Cost(format!(
                    "{what}: base must be non-negative and every feature must cost something"
                )));
            }
        }
        Ok(())
    }

    pub fn cycles(&self, cipher: CipherId, set: FeatureSet) -> u64 {
        self.cycles[cipher.index()][set.index()]
    }

    /// Cycles for one block through `stages` on a core with `set`.
    pub fn block_cycles(&self, stages: &[StageSpec], set: FeatureSet) -> u64 {
        stages
            .iter()
            .map(|s| s.iterations() as u64 * self.cycles(s.cipher, set))
            .sum()
    }
}

/// One processor core: its features, clock, and the area and power those
/// features imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoreConfig {
    pub features: FeatureSet,
    pub clock_mhz: f64,
    pub area_mm2: f64,
    pub power_mw: f64,
}

impl CoreConfig {
    pub fn new(features: FeatureSet, table: &CostTable) -> Self {
        Self::with_clock(features, table, DEFAULT_CLOCK_MHZ)
    }

    pub fn with_clock(features: FeatureSet, table: &CostTable, clock_mhz: f64) -> Self {
        CoreConfig {
            features,
            clock_mhz,
            area_mm2: table.area.total(features),
            power_mw: table.power.total(features),
        }
    }

    pub fn has_mul16_32(&self) -> bool {
        self.features.has_mul16_32()
    }

    pub fn icache_kb(&self) -> u32 {
        self.features.icache_kb()
    }

    pub fn dcache_kb(&self) -> u32 {
        self.features.dcache_kb()
    }
}
