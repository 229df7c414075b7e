use serde::Serialize;

use super::cost::{CoreConfig, CostTable};
use super::metrics::{system_cycles, RunMetrics};
use super::PerfError;
use crate::product::StageSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    /// Cycles for one block through each core.
    pub per_block_cycles: Vec<u64>,
    /// Total cycles each core is occupied, fill latency included.
    pub per_core_cycles: Vec<u64>,
    pub metrics: RunMetrics,
}

/// Per-core cycles for `stream_len` blocks: core `i` runs
/// `stream_len * block_cost(i)` cycles after waiting
/// `sum(block_cost(j) for j < i)` for the pipeline to fill.
pub fn core_cycles(
    partitions: &[Vec<StageSpec>],
    cores: &[CoreConfig],
    table: &CostTable,
    stream_len: u64,
) -> Result<(Vec<u64>, Vec<u64>), PerfError> {
    if partitions.len() != cores.len() {
        return Err(PerfError::Mismatch {
            partitions: partitions.len(),
            cores: cores.len(),
        });
    }
    if partitions.is_empty() {
        return Err(PerfError::NoCores);
    }
    if stream_len == 0 {
        return Err(PerfError::EmptyStream);
    }
    let per_block: Vec<u64> = partitions
        .iter()
        .zip(cores)
        .map(|(p, c)| table.block_cycles(p, c.features))
        .collect();
    let mut fill = 0u64;
    let per_core = per_block
        .iter()
        .map(|&b| {
            let total = stream_len * b + fill;
            fill += b;
            total
        })
        .collect();
    Ok((per_block, per_core))
}

/// Shared clock of a set of cores.
pub fn common_clock(cores: &[CoreConfig]) -> Result<f64, PerfError> {
    let first = cores.first().ok_or(PerfError::NoCores)?.clock_mhz;
    if cores.iter().any(|c| c.clock_mhz != first) {
        return Err(PerfError::MixedClocks);
    }
    Ok(first)
}

pub fn simulate(
    partitions: &[Vec<StageSpec>],
    cores: &[CoreConfig],
    table: &CostTable,
    stream_len: u64,
) -> Result<Simulation, PerfError> {
    let (per_block_cycles, per_core_cycles) = core_cycles(partitions, cores, table, stream_len)?;
    let metrics = RunMetrics::new(
        system_cycles(&per_core_cycles)?,
        common_clock(cores)?,
        cores.iter().map(|c| c.area_mm2).sum(),
        cores.iter().map(|c| c.power_mw).sum(),
    )?;
    Ok(Simulation {
        per_block_cycles,
        per_core_cycles,
        metrics,
    })
}
