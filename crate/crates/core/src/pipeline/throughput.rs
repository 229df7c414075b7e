use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use super::{Pipeline, PipelineConfig, PipelineError, PipelineStats};
use crate::block::{Block64, MasterKey128};
use crate::product::{CipherId, CipherWeights, KeyMaterial};

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputReport {
    pub stages: usize,
    pub stream_len: usize,
    pub repetitions: usize,
    /// Median over repetitions.
    pub pipeline_blocks_per_sec: f64,
    /// Median over repetitions.
    pub monolithic_blocks_per_sec: f64,
    /// Ratio of the two medians.
    pub speedup: f64,
    /// Statistics of the last pipeline repetition.
    pub last_stats: PipelineStats,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

fn rate(blocks: usize, secs: f64) -> f64 {
    if blocks == 0 {
        0.0
    } else {
        blocks as f64 / secs.max(f64::MIN_POSITIVE)
    }
}

/// Time the pipeline and the monolithic cipher on the same stream,
/// alternating between the two on every repetition. An empty stream reports
/// zero rates and a speedup of 1.
pub fn measure_throughput(
    config: &PipelineConfig,
    source: &[Block64],
    repetitions: usize,
) -> Result<ThroughputReport, PipelineError> {
    if repetitions == 0 {
        return Err(PipelineError::ZeroRepetitions);
    }
    let pipeline = Pipeline::build(config)?;
    let mono = config.monolithic_spec();
    let mut pipe_rates = Vec::with_capacity(repetitions);
    let mut mono_rates = Vec::with_capacity(repetitions);
    let mut last_stats = PipelineStats::default();

    for _ in 0..repetitions {
        let input = source.to_vec();
        let t = Instant::now();
        let (out, stats) = pipeline.run(input)?;
        pipe_rates.push(rate(source.len(), t.elapsed().as_secs_f64()));
        debug_assert_eq!(out.len(), source.len());
        last_stats = stats;

        let t = Instant::now();
        let mut out = Vec::with_capacity(source.len());
        for &b in source {
            out.push(mono.encrypt_block(black_box(b)));
        }
        black_box(&out);
        mono_rates.push(rate(source.len(), t.elapsed().as_secs_f64()));
    }

    let pipeline_blocks_per_sec = median(&mut pipe_rates);
    let monolithic_blocks_per_sec = median(&mut mono_rates);
    let speedup = if source.is_empty() {
        1.0
    } else {
        pipeline_blocks_per_sec / monolithic_blocks_per_sec
    };
    Ok(ThroughputReport {
        stages: pipeline.stage_count(),
        stream_len: source.len(),
        repetitions,
        pipeline_blocks_per_sec,
        monolithic_blocks_per_sec,
        speedup,
        last_stats,
    })
}

/// Measured seconds per iteration of each cipher on this host, for
/// balancing partitions by cost.
pub fn measure_cipher_weights(key: MasterKey128, samples: usize) -> CipherWeights {
    let keys = KeyMaterial::derive(key);
    let samples = samples.max(1);
    let mut w = [0.0; 3];
    for c in CipherId::ALL {
        let mut b = Block64::new(0x0123_4567_89ab_cdef);
        let t = Instant::now();
        for _ in 0..samples {
            b = keys.encrypt_once(c, black_box(b));
        }
        black_box(b);
        w[c.index()] = (t.elapsed().as_secs_f64() / samples as f64).max(1e-12);
    }
    CipherWeights(w)
}
