//! Bottleneck-driven strengthen/prune search over per-core feature sets.
//!
//! Each pass simulates the pipeline, gives the bottleneck core the cheapest
//! single feature that lowers system cycles, then strips from every core
//! each feature whose removal leaves system cycles where they are, biggest
//! saving first. Every accepted change strictly lowers
//! `(system_cycles, objective)` lexicographically, so the loop terminates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cost::{CoreConfig, CostTable, Feature, FeatureSet};
use super::simulate::core_cycles;
use super::PerfError;
use crate::product::StageSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinArea,
    MinPower,
}

impl Objective {
    pub fn of_feature(self, table: &CostTable, f: Feature) -> f64 {
        match self {
            Objective::MinArea => table.area.of(f),
            Objective::MinPower => table.power.of(f),
        }
    }

    pub fn of_cores(self, cores: &[CoreConfig]) -> f64 {
        cores
            .iter()
            .map(|c| match self {
                Objective::MinArea => c.area_mm2,
                Objective::MinPower => c.power_mw,
            })
            .sum()
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MinArea => "min_area",
            Objective::MinPower => "min_power",
        })
    }
}

impl FromStr for Objective {
    type Err = PerfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min_area" | "area" => Ok(Objective::MinArea),
            "min_power" | "power" => Ok(Objective::MinPower),
            other => Err(PerfError::UnknownObjective(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub cores: Vec<CoreConfig>,
    /// Passes run, including the final one that changed nothing.
    pub passes: usize,
    pub system_cycles: u64,
}

/// Upper bound on passes before the search is declared broken.
pub fn pass_bound(cores: usize) -> usize {
    cores * Feature::ALL.len() * 10
}

/// Start from identical cores carrying every optional feature.
pub fn optimize(
    partitions: &[Vec<StageSpec>],
    table: &CostTable,
    objective: Objective,
    stream_len: u64,
) -> Result<OptimizeResult, PerfError> {
    let start = vec![CoreConfig::new(FeatureSet::ALL, table); partitions.len()];
    optimize_from(partitions, &start, table, objective, stream_len)
}

pub fn optimize_from(
    partitions: &[Vec<StageSpec>],
    initial: &[CoreConfig],
    table: &CostTable,
    objective: Objective,
    stream_len: u64,
) -> Result<OptimizeResult, PerfError> {
    let mut sets: Vec<FeatureSet> = initial.iter().map(|c| c.features).collect();
    let system = |sets: &[FeatureSet]| -> Result<u64, PerfError> {
        let cores: Vec<CoreConfig> = sets.iter().map(|&s| CoreConfig::new(s, table)).collect();
        let (_, per_core) = core_cycles(partitions, &cores, table, stream_len)?;
        Ok(per_core.into_iter().max().unwrap_or(0))
    };
    let bound = pass_bound(sets.len());
    let mut passes = 0;

    loop {
        passes += 1;
        if passes > bound {
            return Err(PerfError::NoConvergence(bound));
        }
        let mut changed = false;

        // strengthen the bottleneck
        let cores: Vec<CoreConfig> = sets.iter().map(|&s| CoreConfig::new(s, table)).collect();
        let (_, per_core) = core_cycles(partitions, &cores, table, stream_len)?;
        let current = per_core.iter().copied().max().unwrap_or(0);
        let bottleneck = per_core.iter().position(|&c| c == current).unwrap_or(0);
        let mut best: Option<(f64, u64, Feature)> = None;
        for f in Feature::ALL {
            if sets[bottleneck].has(f) {
                continue;
            }
            let mut trial = sets.clone();
            trial[bottleneck] = trial[bottleneck].with(f);
            let after = system(&trial)?;
            if after >= current {
                continue;
            }
            let cost = objective.of_feature(table, f);
            let better = match best {
                None => true,
                Some((bc, ba, _)) => cost < bc || (cost == bc && after < ba),
            };
            if better {
                best = Some((cost, after, f));
            }
        }
        if let Some((_, _, f)) = best {
            sets[bottleneck] = sets[bottleneck].with(f);
            changed = true;
        }

        // prune anything that is not pulling its weight
        for core in 0..sets.len() {
            loop {
                let current = system(&sets)?;
                let mut pick: Option<(f64, Feature)> = None;
                for f in sets[core].features() {
                    let mut trial = sets.clone();
                    trial[core] = trial[core].without(f);
                    if system(&trial)? > current {
                        continue;
                    }
                    let saving = objective.of_feature(table, f);
                    if pick.map_or(true, |(s, _)| saving > s) {
                        pick = Some((saving, f));
                    }
                }
                match pick {
                    Some((_, f)) => {
                        sets[core] = sets[core].without(f);
                        changed = true;
                    }
                    None => break,
                }
            }
        }

        if !changed {
            break;
        }
    }

    let cores: Vec<CoreConfig> = sets
        .iter()
        .zip(initial)
        .map(|(&s, c)| CoreConfig::with_clock(s, table, c.clock_mhz))
        .collect();
    Ok(OptimizeResult {
        system_cycles: system(&sets)?,
        cores,
        passes,
    })
}
