//! Cycle, time, performance and gain arithmetic.

use serde::Serialize;

use super::PerfError;

pub const DEFAULT_CLOCK_MHZ: f64 = 200.0;

/// Cycles at `clock_mhz` MHz, in microseconds.
pub fn running_time_us(total_cycles: u64, clock_mhz: f64) -> Result<f64, PerfError> {
    if !(clock_mhz > 0.0 && clock_mhz.is_finite()) {
        return Err(PerfError::Clock(clock_mhz));
    }
    Ok(total_cycles as f64 / clock_mhz)
}

/// 10^6 divided by the running time in microseconds.
pub fn performance(running_time_us: f64) -> Result<f64, PerfError> {
    if !(running_time_us > 0.0 && running_time_us.is_finite()) {
        return Err(PerfError::RunningTime(running_time_us));
    }
    Ok(1e6 / running_time_us)
}

/// A pipeline finishes when its slowest core does.
pub fn system_cycles(per_core_cycles: &[u64]) -> Result<u64, PerfError> {
    per_core_cycles.iter().copied().max().ok_or(PerfError::NoCores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    pub total_cycles: u64,
    pub clock_mhz: f64,
    pub running_time_us: f64,
    pub performance: f64,
    pub total_area_mm2: f64,
    pub total_power_mw: f64,
}

impl RunMetrics {
    pub fn new(total_cycles: u64, clock_mhz: f64, area_mm2: f64, power_mw: f64) -> Result<Self, PerfError> {
        let running_time_us = running_time_us(total_cycles, clock_mhz)?;
        let performance = performance(running_time_us)?;
        if !(area_mm2 >= 0.0 && power_mw >= 0.0) {
            return Err(PerfError::Negative("area/power"));
        }
        Ok(RunMetrics {
            total_cycles,
            clock_mhz,
            running_time_us,
            performance,
            total_area_mm2: area_mm2,
            total_power_mw: power_mw,
        })
    }

    /// Running time in milliseconds, the unit of the printed results table.
    pub fn running_time_ms(&self) -> f64 {
        self.running_time_us / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub performance_gain: f64,
    pub gain_per_area_overhead: f64,
    pub gain_per_power_overhead: f64,
}

/// Gain of `mp` over the baseline `sp`, and that gain divided by the area
/// and power overhead ratios.
pub fn gain_report(mp: &RunMetrics, sp: &RunMetrics) -> Result<GainReport, PerfError> {
    if !(sp.performance > 0.0) {
        return Err(PerfError::Baseline("performance"));
    }
    if !(sp.total_area_mm2 > 0.0) {
        return Err(PerfError::Baseline("area"));
    }
    if !(sp.total_power_mw > 0.0) {
        return Err(PerfError::Baseline("power"));
    }
    let gain = mp.performance / sp.performance;
    Ok(GainReport {
        performance_gain: gain,
        gain_per_area_overhead: gain / (mp.total_area_mm2 / sp.total_area_mm2),
        gain_per_power_overhead: gain / (mp.total_power_mw / sp.total_power_mw),
    })
}
