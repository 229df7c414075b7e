use std::time::Duration;

use serde::Serialize;

/// Per-stage counters collected by a worker over one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageStats {
    pub blocks_in: u64,
    pub blocks_out: u64,
    /// Time spent inside the stage function.
    pub busy: Duration,
    /// Time spent waiting on the input or output buffer.
    pub blocked: Duration,
    /// `input_occupancy[k]` counts the pushes into this stage's input buffer
    /// that left `k` blocks queued. Empty for the first stage.
    pub input_occupancy: Vec<u64>,
}

impl StageStats {
    pub fn peak_input_occupancy(&self) -> usize {
        self.input_occupancy
            .iter()
            .rposition(|&n| n > 0)
            .unwrap_or(0)
    }

    pub fn busy_fraction(&self) -> f64 {
        let total = self.busy + self.blocked;
        if total.is_zero() {
            0.0
        } else {
            self.busy.as_secs_f64() / total.as_secs_f64()
        }
    }

    pub fn blocked_fraction(&self) -> f64 {
        let total = self.busy + self.blocked;
        if total.is_zero() {
            0.0
        } else {
            self.blocked.as_secs_f64() / total.as_secs_f64()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineStats {
    pub stages: Vec<StageStats>,
    pub wall: Duration,
}

impl PipelineStats {
    /// Upper bound on blocks buffered at once: the sum of each buffer's
    /// peak. The sum of peaks dominates the peak of the sum.
    pub fn peak_buffered(&self) -> usize {
        self.stages.iter().map(StageStats::peak_input_occupancy).sum()
    }

    pub fn blocks_processed(&self) -> Option<u64> {
        let first = self.stages.first()?.blocks_out;
        self.stages
            .iter()
            .all(|s| s.blocks_in == first && s.blocks_out == first)
            .then_some(first)
    }
}
