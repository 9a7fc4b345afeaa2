//! MATPOWER case files: grid data model, parser, writer and validation.
//!
//! Only the version 2 layout of the `bus`, `gen` and `branch` matrices plus
//! `baseMVA` is consumed. Demands stay in MW/MVAr and angles in degrees, as
//! in the file.

mod parse;
mod validate;
mod write;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_matpower_case;
pub use validate::{validate_case, CaseViolation};
pub use write::write_matpower_case;

const CASE14_TEXT: &str = include_str!("../../fixtures/case14.m");

/// Bus type codes from the case format (`1` PQ, `2` PV, `3` reference, `4` isolated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
    Isolated,
}

impl BusKind {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(BusKind::PQ),
            2 => Some(BusKind::PV),
            3 => Some(BusKind::Slack),
            4 => Some(BusKind::Isolated),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BusKind::PQ => 1,
            BusKind::PV => 2,
            BusKind::Slack => 3,
            BusKind::Isolated => 4,
        }
    }
}

/// One row of the bus matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: u32,
    pub bus_kind: BusKind,
    /// Active demand, MW.
    pub pd: f64,
    /// Reactive demand, MVAr.
    pub qd: f64,
    /// Shunt conductance, MW at 1.0 p.u.
    pub gs: f64,
    /// Shunt susceptance, MVAr at 1.0 p.u.
    pub bs: f64,
    pub vm0: f64,
    /// Initial angle, degrees.
    pub va0: f64,
    pub base_kv: f64,
    pub vmax: f64,
    pub vmin: f64,
}

/// One row of the generator matrix (first ten columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub bus: u32,
    pub pg: f64,
    pub qg: f64,
    pub qmax: f64,
    pub qmin: f64,
    pub vset: f64,
    pub mbase: f64,
    pub status: bool,
    pub pmax: f64,
    pub pmin: f64,
}

/// One row of the branch matrix. `tap` is never the `0` sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, p.u.
    pub b: f64,
    pub rate_a: f64,
    pub tap: f64,
    /// Phase shift, degrees.
    pub shift: f64,
    pub status: bool,
    pub angmin: f64,
    pub angmax: f64,
}

impl BranchRecord {
    /// A branch is a transformer when it has an off-nominal ratio or a phase shift.
    pub fn is_transformer(&self) -> bool {
        self.tap != 1.0 || self.shift != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub gens: Vec<GenRecord>,
    pub branches: Vec<BranchRecord>,
}

impl NetworkCase {
    /// Maps bus ids (file labels) to dense positions in `buses`.
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect()
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Dense index of the first slack bus, if any.
    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.bus_kind == BusKind::Slack)
    }

    pub fn total_demand_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.pd).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("missing required section `{0}`")]
    MissingSection(&'static str),
    #[error("line {line}: malformed row in `{section}`: {reason}")]
    MalformedRow {
        section: String,
        line: usize,
        reason: String,
    },
    #[error("unsupported case format version `{0}` (only version 2 is read)")]
    UnsupportedVersion(String),
    #[error("case has no slack (reference) bus")]
    NoSlackBus,
    #[error("line {line}: duplicate bus id {id}")]
    DuplicateBusId { id: u32, line: usize },
    #[error("line {line}: {section} row references unknown bus {bus}")]
    DanglingReference {
        section: &'static str,
        bus: u32,
        line: usize,
    },
}

/// The IEEE 14-bus benchmark, parsed from the bundled case file.
pub fn builtin_case14() -> NetworkCase {
    parse_matpower_case(CASE14_TEXT).expect("bundled case14 fixture parses")
}

/// Raw text of the bundled IEEE 14-bus case file.
pub fn case14_text() -> &'static str {
    CASE14_TEXT
}
