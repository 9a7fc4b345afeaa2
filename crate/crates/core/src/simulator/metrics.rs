//! Run-level aggregates, attacked-vs-baseline deltas and anomaly flags.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SimulationLog, TelemetryFrame, VoltageBand};
use crate::scalar::Scalar;

/// Default anomaly threshold on the RMS-deviation gap, p.u.
pub const DEFAULT_ANOMALY_THRESHOLD: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty voltage vector")]
    EmptyVector,
    #[error("logs differ in shape: {0}")]
    ShapeMismatch(String),
}

/// Which voltage stream a metric is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    True,
    Measured,
}

impl Side {
    pub fn voltages(self, frame: &TelemetryFrame) -> &[f64] {
        match self {
            Side::True => &frame.vm_true,
            Side::Measured => &frame.vm_meas,
        }
    }
}

/// RMS distance of the magnitudes from 1 p.u.
pub fn rms_deviation<T: Scalar>(vm: &[T]) -> Result<T, MetricsError> {
    if vm.is_empty() {
        return Err(MetricsError::EmptyVector);
    }
    let sum: T = vm.iter().map(|&v| (v - T::one()) * (v - T::one())).sum();
    Ok((sum / T::lit(vm.len() as f64)).sqrt())
}

/// Entries strictly outside the closed band.
pub fn count_violations<T: Scalar>(vm: &[T], band: VoltageBand) -> usize {
    let (lo, hi) = (T::lit(band.vmin), T::lit(band.vmax));
    vm.iter().filter(|&&v| v < lo || v > hi).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub side: Side,
    pub mean_rms_dev: f64,
    pub max_dev: f64,
    pub violation_count_true: usize,
    pub violation_count_meas: usize,
    pub avg_losses_mw: f64,
    pub switch_event_total: usize,
    pub anomaly_steps: Vec<usize>,
}

fn summarize(frames: &[TelemetryFrame], side: Side) -> MetricsSummary {
    let n = frames.len().max(1) as f64;
    let mut rms_sum = 0.0;
    let mut max_dev: f64 = 0.0;
    for f in frames {
        let vm = side.voltages(f);
        rms_sum += rms_deviation(vm).unwrap_or(0.0);
        max_dev = vm.iter().fold(max_dev, |m, v| m.max((v - 1.0).abs()));
    }
    MetricsSummary {
        side,
        mean_rms_dev: rms_sum / n,
        max_dev,
        violation_count_true: frames.iter().map(|f| f.violations_true).sum(),
        violation_count_meas: frames.iter().map(|f| f.violations_meas).sum(),
        avg_losses_mw: frames.iter().map(|f| f.losses_mw).sum::<f64>() / n,
        switch_event_total: frames.iter().map(|f| f.pvpq_switch_count).sum(),
        anomaly_steps: Vec::new(),
    }
}

/// Aggregates over the whole log. `anomaly_steps` is left empty; it needs a
/// baseline (see [`detect_anomalies`]).
pub fn compute_metrics(log: &SimulationLog, side: Side) -> MetricsSummary {
    summarize(&log.frames, side)
}

/// Aggregates over the frames with `t_start <= t <= t_end`.
pub fn compute_metrics_window(
    log: &SimulationLog,
    side: Side,
    t_start: usize,
    t_end: usize,
) -> MetricsSummary {
    let frames: Vec<TelemetryFrame> = log
        .frames
        .iter()
        .filter(|f| (t_start..=t_end).contains(&f.t))
        .cloned()
        .collect();
    summarize(&frames, side)
}

/// `a − b` for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDelta {
    pub t: usize,
    pub dvm_true: Vec<f64>,
    pub dvm_meas: Vec<f64>,
    pub dmean_vm_true: f64,
    pub dmean_vm_meas: f64,
    pub dlosses_mw: f64,
}

fn check_shape(a: &SimulationLog, b: &SimulationLog) -> Result<(), MetricsError> {
    if a.frames.len() != b.frames.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} vs {} steps",
            a.frames.len(),
            b.frames.len()
        )));
    }
    if a.bus_ids != b.bus_ids {
        return Err(MetricsError::ShapeMismatch(format!(
            "bus sets {:?} vs {:?}",
            a.bus_ids, b.bus_ids
        )));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Per-frame differences `a − b` (the delta heatmap and mean-voltage traces).
pub fn compare_runs(a: &SimulationLog, b: &SimulationLog) -> Result<Vec<FrameDelta>, MetricsError> {
    check_shape(a, b)?;
    let diff = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
    Ok(a.frames
        .iter()
        .zip(&b.frames)
        .map(|(fa, fb)| FrameDelta {
            t: fa.t,
            dvm_true: diff(&fa.vm_true, &fb.vm_true),
            dvm_meas: diff(&fa.vm_meas, &fb.vm_meas),
            dmean_vm_true: mean(&fa.vm_true) - mean(&fb.vm_true),
            dmean_vm_meas: mean(&fa.vm_meas) - mean(&fb.vm_meas),
            dlosses_mw: fa.losses_mw - fb.losses_mw,
        })
        .collect())
}

/// Timesteps where the true-voltage RMS deviation of `attacked` differs from
/// `baseline` by more than `threshold` p.u.
pub fn detect_anomalies(
    attacked: &SimulationLog,
    baseline: &SimulationLog,
    threshold: f64,
) -> Result<Vec<usize>, MetricsError> {
    check_shape(attacked, baseline)?;
    let mut out = Vec::new();
    for (fa, fb) in attacked.frames.iter().zip(&baseline.frames) {
        let gap = rms_deviation(&fa.vm_true)? - rms_deviation(&fb.vm_true)?;
        if gap.abs() > threshold {
            out.push(fa.t);
        }
    }
    Ok(out)
}
