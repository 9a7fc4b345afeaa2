//! The discrete-time loop: load update, attack injection, power-flow solve,
//! logging. Metrics and run comparisons live in [`metrics`].

pub mod metrics;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attacks::{
    apply_load_attacks, apply_measurement_attacks, attack_mask_at, AttackError, AttackSchedule,
    BusLoads,
};
use crate::caseio::{validate_case, NetworkCase};
use crate::powerflow::{solve_with_qlims, PowerFlowError, PowerFlowOptions, PowerFlowSolution};

pub use metrics::{
    compare_runs, compute_metrics, compute_metrics_window, count_violations, detect_anomalies,
    rms_deviation, FrameDelta, MetricsError, MetricsSummary, Side, DEFAULT_ANOMALY_THRESHOLD,
};

/// Closed acceptable voltage band, p.u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageBand {
    pub vmin: f64,
    pub vmax: f64,
}

impl Default for VoltageBand {
    fn default() -> Self {
        Self {
            vmin: 0.95,
            vmax: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_steps: usize,
    pub hours_per_cycle: f64,
    /// Half-range of the uniform additive load noise.
    pub noise_amplitude: f64,
    pub seed: u64,
    pub vband: VoltageBand,
    pub schedule: AttackSchedule,
    pub pf_options: PowerFlowOptions<f64>,
    pub sinus_amplitude: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_steps: 144,
            hours_per_cycle: 24.0,
            noise_amplitude: 0.0,
            seed: 0,
            vband: VoltageBand::default(),
            schedule: AttackSchedule::empty(),
            pf_options: PowerFlowOptions::default(),
            sinus_amplitude: 0.15,
        }
    }
}

impl SimConfig {
    pub fn with_schedule(schedule: AttackSchedule) -> Self {
        Self {
            schedule,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_steps == 0 {
            return Err(SimError::InvalidConfig("n_steps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise_amplitude) {
            return Err(SimError::InvalidConfig(format!(
                "noise amplitude {} outside [0, 1)",
                self.noise_amplitude
            )));
        }
        if !(self.vband.vmin < self.vband.vmax) {
            return Err(SimError::InvalidConfig(format!(
                "voltage band [{}, {}] is empty",
                self.vband.vmin, self.vband.vmax
            )));
        }
        if !(self.hours_per_cycle > 0.0) {
            return Err(SimError::InvalidConfig("hours_per_cycle must be positive".into()));
        }
        self.pf_options
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    /// Clock hour of step `t`.
    pub fn hour(&self, t: usize) -> f64 {
        t as f64 * self.hours_per_cycle / self.n_steps as f64
    }
}

/// Everything logged for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryFrame {
    pub t: usize,
    pub hour: f64,
    pub vm_true: Vec<f64>,
    pub vm_meas: Vec<f64>,
    /// Radians.
    pub va: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub total_load_mw: f64,
    pub total_gen_mw: f64,
    pub losses_mw: f64,
    pub violations_true: usize,
    pub violations_meas: usize,
    pub attack_mask: u8,
    pub pvpq_switch_count: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    /// Absent when the log was read back from a CSV file.
    pub config: Option<SimConfig>,
    pub bus_ids: Vec<u32>,
    pub n_gens: usize,
    pub frames: Vec<TelemetryFrame>,
}

impl SimulationLog {
    pub fn n_steps(&self) -> usize {
        self.frames.len()
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("step {t}: {source}")]
    PowerFlow {
        t: usize,
        source: PowerFlowError<f64>,
    },
}

/// Diurnal demand multiplier `1 + A·sin(2π·h/H) + η_t`, with `η_t` uniform on
/// `[−σ, σ]` and keyed on `(seed, t)`. With `σ = 0` no random draw is made.
pub fn load_multiplier(t: usize, config: &SimConfig) -> f64 {
    let h = config.hour(t);
    let m = 1.0
        + config.sinus_amplitude * (2.0 * std::f64::consts::PI * h / config.hours_per_cycle).sin();
    let sigma = config.noise_amplitude;
    if sigma == 0.0 {
        return m;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t as u64);
    m + rng.gen_range(-sigma..=sigma)
}

/// Base-case demand scaled by the multiplier for step `t`.
pub fn nominal_loads(case: &NetworkCase, t: usize, config: &SimConfig) -> BusLoads {
    let m = load_multiplier(t, config);
    BusLoads {
        pd: case.buses.iter().map(|b| b.pd * m).collect(),
        qd: case.buses.iter().map(|b| b.qd * m).collect(),
    }
}

/// Result of one timestep: the logged frame and the load vector actually solved.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub frame: TelemetryFrame,
    pub effective_loads: BusLoads,
}

/// Runs timestep `t` given the effective loads of step `t − 1`.
///
/// A power flow that fails with an iterate (non-convergence, singular
/// Jacobian, reactive-limit round cap) is logged with `converged = false`.
pub fn step(
    case: &NetworkCase,
    config: &SimConfig,
    t: usize,
    prev_effective: Option<&BusLoads>,
) -> Result<StepOutput, SimError> {
    let bus_ids = case.bus_ids();
    let nominal = nominal_loads(case, t, config);
    let effective = apply_load_attacks(&config.schedule, t, &bus_ids, &nominal, prev_effective)?;

    let mut loaded = case.clone();
    for (bus, (&pd, &qd)) in loaded
        .buses
        .iter_mut()
        .zip(effective.pd.iter().zip(&effective.qd))
    {
        bus.pd = pd;
        bus.qd = qd;
    }
    let sol: PowerFlowSolution<f64> = match solve_with_qlims(&loaded, &config.pf_options) {
        Ok(sol) => sol,
        Err(e) => match e.last_iterate() {
            Some(_) => e.into_last_iterate().expect("iterate present"),
            None => return Err(SimError::PowerFlow { t, source: e }),
        },
    };

    let vm_meas = apply_measurement_attacks(&config.schedule, t, &bus_ids, &sol.vm);
    let frame = TelemetryFrame {
        t,
        hour: config.hour(t),
        violations_true: count_violations(&sol.vm, config.vband),
        violations_meas: count_violations(&vm_meas, config.vband),
        vm_meas,
        total_load_mw: effective.total_pd(),
        total_gen_mw: sol.pg.iter().sum(),
        losses_mw: sol.losses_mw,
        attack_mask: attack_mask_at(&config.schedule, t),
        pvpq_switch_count: sol.switched_gens.len(),
        converged: sol.converged,
        vm_true: sol.vm,
        va: sol.va,
        pg: sol.pg,
        qg: sol.qg,
    };
    Ok(StepOutput {
        frame,
        effective_loads: effective,
    })
}

/// Runs all steps and also returns the effective load vector of every step.
pub fn run_traced(
    case: &NetworkCase,
    config: &SimConfig,
) -> Result<(SimulationLog, Vec<BusLoads>), SimError> {
    let problems = validate_case(case);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(SimError::InvalidCase(list.join("; ")));
    }
    config.validate()?;
    config.schedule.check_targets(&case.bus_ids())?;

    let mut frames = Vec::with_capacity(config.n_steps);
    let mut loads: Vec<BusLoads> = Vec::with_capacity(config.n_steps);
    for t in 0..config.n_steps {
        let out = step(case, config, t, loads.last())?;
        frames.push(out.frame);
        loads.push(out.effective_loads);
    }
    let log = SimulationLog {
        config: Some(config.clone()),
        bus_ids: case.bus_ids(),
        n_gens: case.gens.len(),
        frames,
    };
    Ok((log, loads))
}

/// Runs the full time-stepped simulation. Deterministic in `(case, config)`.
pub fn run(case: &NetworkCase, config: &SimConfig) -> Result<SimulationLog, SimError> {
    run_traced(case, config).map(|(log, _)| log)
}
