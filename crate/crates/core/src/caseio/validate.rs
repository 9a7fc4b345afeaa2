use std::collections::HashMap;
use std::fmt;

use super::{BusKind, NetworkCase};

/// One broken invariant found by [`validate_case`].
#[derive(Debug, Clone, PartialEq)]
pub enum CaseViolation {
    NonPositiveBase(f64),
    DuplicateBusId(u32),
    NoSlackBus,
    MultipleSlackBuses(Vec<u32>),
    VoltageLimits { bus: u32, vmin: f64, vmax: f64 },
    NonPositiveVoltage { bus: u32, vm0: f64 },
    GenUnknownBus { gen: usize, bus: u32 },
    GenReactiveLimits { gen: usize, qmin: f64, qmax: f64 },
    GenActiveLimits { gen: usize, pmin: f64, pmax: f64 },
    GenOnLoadBus { gen: usize, bus: u32, kind: BusKind },
    BranchUnknownBus { branch: usize, bus: u32 },
    BranchSelfLoop { branch: usize, bus: u32 },
    ZeroImpedanceBranch { branch: usize, from: u32, to: u32 },
}

impl fmt::Display for CaseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CaseViolation::*;
        match self {
            NonPositiveBase(b) => write!(f, "base MVA must be positive, found {b}"),
            DuplicateBusId(id) => write!(f, "bus id {id} appears more than once"),
            NoSlackBus => write!(f, "no slack bus"),
            MultipleSlackBuses(ids) => write!(f, "multiple slack buses: {ids:?}"),
            VoltageLimits { bus, vmin, vmax } => {
                write!(f, "bus {bus}: vmin {vmin} exceeds vmax {vmax}")
            }
            NonPositiveVoltage { bus, vm0 } => {
                write!(f, "bus {bus}: initial voltage {vm0} is not positive")
            }
            GenUnknownBus { gen, bus } => write!(f, "gen {gen}: unknown bus {bus}"),
            GenReactiveLimits { gen, qmin, qmax } => {
                write!(f, "gen {gen}: qmin {qmin} exceeds qmax {qmax}")
            }
            GenActiveLimits { gen, pmin, pmax } => {
                write!(f, "gen {gen}: pmin {pmin} exceeds pmax {pmax}")
            }
            GenOnLoadBus { gen, bus, kind } => {
                write!(f, "gen {gen}: in service at bus {bus} of kind {kind:?}")
            }
            BranchUnknownBus { branch, bus } => write!(f, "branch {branch}: unknown bus {bus}"),
            BranchSelfLoop { branch, bus } => {
                write!(f, "branch {branch}: both ends at bus {bus}")
            }
            ZeroImpedanceBranch { branch, from, to } => {
                write!(f, "branch {branch} ({from}-{to}): zero series reactance")
            }
        }
    }
}

/// Checks every case invariant. An empty result means the case is valid.
///
/// Generator and branch positions in the report are 1-based row numbers.
pub fn validate_case(case: &NetworkCase) -> Vec<CaseViolation> {
    let mut out = Vec::new();
    if !(case.base_mva > 0.0) {
        out.push(CaseViolation::NonPositiveBase(case.base_mva));
    }

    let mut kinds: HashMap<u32, BusKind> = HashMap::new();
    for b in &case.buses {
        if kinds.insert(b.id, b.bus_kind).is_some() {
            out.push(CaseViolation::DuplicateBusId(b.id));
        }
        if b.vmin > b.vmax {
            out.push(CaseViolation::VoltageLimits {
                bus: b.id,
                vmin: b.vmin,
                vmax: b.vmax,
            });
        }
        if !(b.vm0 > 0.0) {
            out.push(CaseViolation::NonPositiveVoltage { bus: b.id, vm0: b.vm0 });
        }
    }
    let slacks: Vec<u32> = case
        .buses
        .iter()
        .filter(|b| b.bus_kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    match slacks.len() {
        0 => out.push(CaseViolation::NoSlackBus),
        1 => {}
        _ => out.push(CaseViolation::MultipleSlackBuses(slacks)),
    }

    for (i, g) in case.gens.iter().enumerate() {
        let gen = i + 1;
        match kinds.get(&g.bus) {
            None => out.push(CaseViolation::GenUnknownBus { gen, bus: g.bus }),
            Some(&kind) if g.status && !matches!(kind, BusKind::Slack | BusKind::PV) => {
                out.push(CaseViolation::GenOnLoadBus {
                    gen,
                    bus: g.bus,
                    kind,
                })
            }
            Some(_) => {}
        }
        if g.qmin > g.qmax {
            out.push(CaseViolation::GenReactiveLimits {
                gen,
                qmin: g.qmin,
                qmax: g.qmax,
            });
        }
        if g.pmin > g.pmax {
            out.push(CaseViolation::GenActiveLimits {
                gen,
                pmin: g.pmin,
                pmax: g.pmax,
            });
        }
    }

    for (i, br) in case.branches.iter().enumerate() {
        let branch = i + 1;
        for bus in [br.from_bus, br.to_bus] {
            if !kinds.contains_key(&bus) {
                out.push(CaseViolation::BranchUnknownBus { branch, bus });
            }
        }
        if br.from_bus == br.to_bus {
            out.push(CaseViolation::BranchSelfLoop {
                branch,
                bus: br.from_bus,
            });
        }
        if br.status && br.x == 0.0 {
            out.push(CaseViolation::ZeroImpedanceBranch {
                branch,
                from: br.from_bus,
                to: br.to_bus,
            });
        }
    }
    out
}
