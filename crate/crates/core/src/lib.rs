//! Time-stepped cyber-physical grid simulation.
//!
//! A diurnal load profile drives a full AC power flow (Newton–Raphson with
//! PV→PQ reactive-limit switching) on a MATPOWER case, while scheduled
//! communication-layer attacks freeze (DoS) or falsify (DoD) the load data
//! and bias (FDI) the reported voltages. Every step logs the true and the
//! measured state side by side.
//!
//! The numerical core is generic over [`Scalar`]; the aliases below fix it
//! to the precisions in common use.

pub mod attacks;
pub mod caseio;
pub mod powerflow;
pub mod scalar;
pub mod simulator;

pub use scalar::Scalar;

pub type Ybus = powerflow::AdmittanceMatrix<f64>;
pub type Ybus32 = powerflow::AdmittanceMatrix<f32>;
pub type Solution = powerflow::PowerFlowSolution<f64>;
pub type Solution32 = powerflow::PowerFlowSolution<f32>;
pub type Options = powerflow::PowerFlowOptions<f64>;
pub type Options32 = powerflow::PowerFlowOptions<f32>;
pub type PowerFlowError = powerflow::PowerFlowError<f64>;
