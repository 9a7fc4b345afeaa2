//! JSON companion written next to each run CSV.

use gridattack::attacks::schedule_to_json;
use gridattack::simulator::{compute_metrics, SimConfig, SimulationLog, Side};
use serde_json::{json, Value};

/// Config echo, metrics for both telemetry sides, and the attack schedule.
/// `anomaly_steps` is filled in when a baseline is supplied.
pub fn sidecar(
    case_source: &str,
    config: &SimConfig,
    log: &SimulationLog,
    anomaly_steps: Option<&[usize]>,
) -> Value {
    let schedule: Value =
        serde_json::from_str(&schedule_to_json(&config.schedule)).expect("schedule JSON is valid");
    let metrics = |side| {
        let mut m = compute_metrics(log, side);
        if let Some(steps) = anomaly_steps {
            m.anomaly_steps = steps.to_vec();
        }
        serde_json::to_value(m).expect("metrics serialize")
    };
    let non_converged: Vec<usize> = log
        .frames
        .iter()
        .filter(|f| !f.converged)
        .map(|f| f.t)
        .collect();
    json!({
        "config": {
            "case": case_source,
            "n_steps": config.n_steps,
            "hours_per_cycle": config.hours_per_cycle,
            "seed": config.seed,
            "sigma": config.noise_amplitude,
            "sinus_amplitude": config.sinus_amplitude,
            "vband": [config.vband.vmin, config.vband.vmax],
            "power_flow": config.pf_options,
        },
        "metrics": {
            "true": metrics(Side::True),
            "meas": metrics(Side::Measured),
        },
        "non_converged_steps": non_converged,
        "schedule": schedule,
    })
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}
