//! Full AC power flow: Newton–Raphson in polar form with an outer
//! reactive-limit loop that converts violating PV buses to PQ.

mod linalg;
mod losses;
mod newton;
mod qlim;
mod ybus;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caseio::{BusKind, NetworkCase};
use crate::scalar::Scalar;

pub use linalg::{DenseLu, DenseMatrix, LinearSolver, SingularMatrix};
pub use losses::{branch_flows, compute_losses, BranchFlow, Losses};
pub use newton::{
    compute_injections, jacobian, mismatch, nr_solve, nr_solve_with, scheduled_injections,
    MismatchLayout, StartPoint,
};
pub use qlim::{initial_bus_kinds, solve_with_qlims};
pub use ybus::{branch_admittances, build_ybus, AdmittanceMatrix, BranchAdmittance};

/// How violating generators are converted in each reactive-limit round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QlimMode {
    /// Every violator converts in the same round.
    #[default]
    Simultaneous,
    /// Only the largest violation converts per round.
    OneAtATime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowOptions<T> {
    /// Max-norm mismatch tolerance, p.u.
    pub tol: T,
    pub max_iter: usize,
    pub enforce_q_lims: bool,
    pub max_qlim_rounds: usize,
    pub qlim_mode: QlimMode,
    /// Start from vm = 1 / vset and the slack angle; otherwise from the case's vm0/va0.
    pub flat_start: bool,
}

impl<T: Scalar> Default for PowerFlowOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: 20,
            enforce_q_lims: true,
            max_qlim_rounds: 10,
            qlim_mode: QlimMode::Simultaneous,
            flat_start: true,
        }
    }
}

impl<T: Scalar> PowerFlowOptions<T> {
    pub fn validate(&self) -> Result<(), PowerFlowError<T>> {
        if !(self.tol > T::zero()) {
            return Err(PowerFlowError::InvalidOptions("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(PowerFlowError::InvalidOptions("max_iter must be at least 1"));
        }
        if self.max_qlim_rounds == 0 {
            return Err(PowerFlowError::InvalidOptions(
                "max_qlim_rounds must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QLimit {
    Qmin,
    Qmax,
}

/// A PV→PQ conversion: generator position in `case.gens` and the limit it was pinned at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchedGen {
    pub gen: usize,
    pub limit: QLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution<T> {
    /// Voltage magnitudes per bus, p.u.
    pub vm: Vec<T>,
    /// Voltage angles per bus, radians.
    pub va: Vec<T>,
    /// Per-generator active output, MW (zero when out of service).
    pub pg: Vec<T>,
    /// Per-generator reactive output, MVAr.
    pub qg: Vec<T>,
    pub converged: bool,
    /// Newton iterations summed over all reactive-limit rounds.
    pub iterations: usize,
    /// Final max-norm mismatch, p.u.
    pub max_mismatch: T,
    pub losses_mw: T,
    /// Bus typing the final round was solved with.
    pub bus_kinds: Vec<BusKind>,
    pub switched_gens: Vec<SwitchedGen>,
    /// Slack generators whose back-computed output lies outside their limits.
    /// These are reported, never switched.
    pub slack_q_violations: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerFlowError<T: Scalar> {
    #[error("branch {branch} ({from}-{to}) has zero series reactance")]
    ZeroImpedanceBranch { branch: usize, from: u32, to: u32 },
    #[error("reference to unknown bus {0}")]
    UnknownBus(u32),
    #[error("no slack bus under the current bus typing")]
    NoSlackBus,
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian {
        iteration: usize,
        last: Box<PowerFlowSolution<T>>,
    },
    #[error("Newton iteration did not converge after {} iterations (mismatch {})", .0.iterations, .0.max_mismatch)]
    NotConverged(Box<PowerFlowSolution<T>>),
    #[error("reactive-limit loop still had violations after {rounds} rounds")]
    QlimCycleExceeded {
        rounds: usize,
        last: Box<PowerFlowSolution<T>>,
    },
}

impl<T: Scalar> PowerFlowError<T> {
    /// The last Newton iterate, when the failure happened mid-solve.
    pub fn last_iterate(&self) -> Option<&PowerFlowSolution<T>> {
        match self {
            PowerFlowError::SingularJacobian { last, .. }
            | PowerFlowError::QlimCycleExceeded { last, .. }
            | PowerFlowError::NotConverged(last) => Some(last),
            _ => None,
        }
    }

    pub fn into_last_iterate(self) -> Option<PowerFlowSolution<T>> {
        match self {
            PowerFlowError::SingularJacobian { last, .. }
            | PowerFlowError::QlimCycleExceeded { last, .. }
            | PowerFlowError::NotConverged(last) => Some(*last),
            _ => None,
        }
    }
}

/// Convenience: parse-free solve of a case with default options.
pub fn solve_case<T: Scalar>(case: &NetworkCase) -> Result<PowerFlowSolution<T>, PowerFlowError<T>> {
    solve_with_qlims(case, &PowerFlowOptions::default())
}
