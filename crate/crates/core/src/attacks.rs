//! Communication-layer attacks on load and voltage telemetry.
//!
//! DoS freezes the load vector, DoD scales the reported demand at target
//! buses, FDI adds a bias to measured voltage magnitudes. Load attacks feed
//! the solver; measurement attacks act on a copy of the solved voltages.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    DoS,
    DoD,
    FDI,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::DoS, AttackKind::DoD, AttackKind::FDI];

    /// Bit in the per-step attack mask.
    pub const fn mask(self) -> u8 {
        match self {
            AttackKind::DoS => 1,
            AttackKind::DoD => 2,
            AttackKind::FDI => 4,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            AttackKind::DoS => "dos",
            AttackKind::DoD => "dod",
            AttackKind::FDI => "fdi",
        }
    }
}

/// Attack active on timesteps `t_start..=t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackWindow {
    pub kind: AttackKind,
    pub t_start: usize,
    pub t_end: usize,
    /// Bus ids. Required for DoD; empty means every bus for FDI; unused for DoS.
    pub target_buses: Vec<u32>,
    /// Demand multiplier (DoD).
    pub scale: f64,
    /// Additive voltage offset, p.u. (FDI).
    pub bias: f64,
}

impl AttackWindow {
    pub fn dos(t_start: usize, t_end: usize) -> Self {
        Self {
            kind: AttackKind::DoS,
            t_start,
            t_end,
            target_buses: Vec::new(),
            scale: 1.0,
            bias: 0.0,
        }
    }

    pub fn dod(t_start: usize, t_end: usize, target_buses: Vec<u32>, scale: f64) -> Self {
        Self {
            kind: AttackKind::DoD,
            t_start,
            t_end,
            target_buses,
            scale,
            bias: 0.0,
        }
    }

    pub fn fdi(t_start: usize, t_end: usize, target_buses: Vec<u32>, bias: f64) -> Self {
        Self {
            kind: AttackKind::FDI,
            t_start,
            t_end,
            target_buses,
            scale: 1.0,
            bias,
        }
    }

    pub fn is_active(&self, t: usize) -> bool {
        self.t_start <= t && t <= self.t_end
    }

    fn targets(&self, bus: u32) -> bool {
        self.target_buses.is_empty() || self.target_buses.contains(&bus)
    }

    fn check(&self) -> Result<(), ScheduleError> {
        if self.t_end < self.t_start {
            return Err(ScheduleError::Range {
                start: self.t_start,
                end: self.t_end,
            });
        }
        match self.kind {
            AttackKind::DoS => Ok(()),
            AttackKind::DoD if self.target_buses.is_empty() => {
                Err(ScheduleError::MissingParam("dod", "buses"))
            }
            AttackKind::DoD if !(self.scale > 0.0 && self.scale.is_finite()) => {
                Err(ScheduleError::InvalidParam("dod", "scale must be positive"))
            }
            AttackKind::FDI if !self.bias.is_finite() => {
                Err(ScheduleError::InvalidParam("fdi", "bias must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Ordered collection of attack windows. Windows may overlap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackSchedule {
    pub windows: Vec<AttackWindow>,
}

impl AttackSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    fn active(&self, t: usize, kind: AttackKind) -> impl Iterator<Item = &AttackWindow> {
        self.windows
            .iter()
            .filter(move |w| w.kind == kind && w.is_active(t))
    }

    /// Fails with [`AttackError::UnknownTargetBus`] if a window names a bus not in `bus_ids`.
    pub fn check_targets(&self, bus_ids: &[u32]) -> Result<(), AttackError> {
        let known: HashSet<u32> = bus_ids.iter().copied().collect();
        for w in &self.windows {
            if w.kind == AttackKind::DoS {
                continue;
            }
            if let Some(&bus) = w.target_buses.iter().find(|b| !known.contains(b)) {
                return Err(AttackError::UnknownTargetBus(bus));
            }
        }
        Ok(())
    }
}

/// The reference experiment: DoS on 20–50, FDI +0.1 p.u. on every bus over
/// 60–90, DoD ×1.5 at buses 5, 7 and 9 over 100–130.
pub fn default_schedule() -> AttackSchedule {
    AttackSchedule {
        windows: vec![
            AttackWindow::dos(20, 50),
            AttackWindow::fdi(60, 90, Vec::new(), 0.1),
            AttackWindow::dod(100, 130, vec![5, 7, 9], 1.5),
        ],
    }
}

/// Bitwise OR of the masks of all windows active at `t`.
pub fn attack_mask_at(schedule: &AttackSchedule, t: usize) -> u8 {
    schedule
        .windows
        .iter()
        .filter(|w| w.is_active(t))
        .fold(0, |m, w| m | w.kind.mask())
}

/// Per-bus demand, MW and MVAr, in case bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct BusLoads {
    pub pd: Vec<f64>,
    pub qd: Vec<f64>,
}

impl BusLoads {
    pub fn total_pd(&self) -> f64 {
        self.pd.iter().sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("attack targets unknown bus {0}")]
    UnknownTargetBus(u32),
    #[error("load vectors have {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Load vector the solver sees at `t`.
///
/// An active DoS window returns `prev_effective` unchanged (or `nominal` when
/// there is no previous step); otherwise active DoD windows scale `pd` and
/// `qd` at their target buses. DoS wins when both are active.
pub fn apply_load_attacks(
    schedule: &AttackSchedule,
    t: usize,
    bus_ids: &[u32],
    nominal: &BusLoads,
    prev_effective: Option<&BusLoads>,
) -> Result<BusLoads, AttackError> {
    let n = bus_ids.len();
    for got in [nominal.pd.len(), nominal.qd.len()] {
        if got != n {
            return Err(AttackError::Dimension { expected: n, got });
        }
    }
    if schedule.active(t, AttackKind::DoS).next().is_some() {
        return Ok(prev_effective.unwrap_or(nominal).clone());
    }
    let mut out = nominal.clone();
    for w in schedule.active(t, AttackKind::DoD) {
        for &bus in &w.target_buses {
            let i = bus_ids
                .iter()
                .position(|&id| id == bus)
                .ok_or(AttackError::UnknownTargetBus(bus))?;
            out.pd[i] *= w.scale;
            out.qd[i] *= w.scale;
        }
    }
    Ok(out)
}

/// Voltage magnitudes as reported to the operator at `t`. `vm_true` is not modified.
pub fn apply_measurement_attacks(
    schedule: &AttackSchedule,
    t: usize,
    bus_ids: &[u32],
    vm_true: &[f64],
) -> Vec<f64> {
    let mut vm = vm_true.to_vec();
    for w in schedule.active(t, AttackKind::FDI) {
        for (v, &id) in vm.iter_mut().zip(bus_ids) {
            if w.targets(id) {
                *v += w.bias;
            }
        }
    }
    vm
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule JSON does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("window end {end} precedes start {start}")]
    Range { start: usize, end: usize },
    #[error("{0} window requires `{1}`")]
    MissingParam(&'static str, &'static str),
    #[error("{0} window: {1}")]
    InvalidParam(&'static str, &'static str),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WireKind {
    Dos,
    Dod,
    Fdi,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireWindow {
    #[serde(rename = "type")]
    kind: WireKind,
    start: usize,
    end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    buses: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<f64>,
}

/// Parses the attack-schedule JSON: an array of
/// `{"type": "dos"|"dod"|"fdi", "start", "end", "buses"?, "scale"?, "bias"?}`.
pub fn parse_schedule(text: &str) -> Result<AttackSchedule, ScheduleError> {
    let wire: Vec<WireWindow> = serde_json::from_str(text)?;
    let mut windows = Vec::with_capacity(wire.len());
    for w in wire {
        let window = match w.kind {
            WireKind::Dos => AttackWindow::dos(w.start, w.end),
            WireKind::Dod => AttackWindow::dod(
                w.start,
                w.end,
                w.buses.ok_or(ScheduleError::MissingParam("dod", "buses"))?,
                w.scale.ok_or(ScheduleError::MissingParam("dod", "scale"))?,
            ),
            WireKind::Fdi => AttackWindow::fdi(
                w.start,
                w.end,
                w.buses.unwrap_or_default(),
                w.bias.ok_or(ScheduleError::MissingParam("fdi", "bias"))?,
            ),
        };
        window.check()?;
        windows.push(window);
    }
    Ok(AttackSchedule { windows })
}

/// Serializes a schedule in the format read by [`parse_schedule`].
pub fn schedule_to_json(schedule: &AttackSchedule) -> String {
    let wire: Vec<WireWindow> = schedule
        .windows
        .iter()
        .map(|w| WireWindow {
            kind: match w.kind {
                AttackKind::DoS => WireKind::Dos,
                AttackKind::DoD => WireKind::Dod,
                AttackKind::FDI => WireKind::Fdi,
            },
            start: w.t_start,
            end: w.t_end,
            buses: (w.kind != AttackKind::DoS && !w.target_buses.is_empty())
                .then(|| w.target_buses.clone()),
            scale: (w.kind == AttackKind::DoD).then_some(w.scale),
            bias: (w.kind == AttackKind::FDI).then_some(w.bias),
        })
        .collect();
    serde_json::to_string_pretty(&wire).expect("schedule serializes")
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}
