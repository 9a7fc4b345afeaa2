use num_complex::Complex;

use super::ybus::{branch_admittances, AdmittanceMatrix};
use crate::caseio::NetworkCase;
use crate::scalar::Scalar;

/// Complex power entering an in-service branch at each end, MVA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow<T> {
    /// Position in `case.branches`.
    pub branch: usize,
    pub s_from: Complex<T>,
    pub s_to: Complex<T>,
}

impl<T: Scalar> BranchFlow<T> {
    pub fn loss_mw(&self) -> T {
        (self.s_from + self.s_to).re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Losses<T> {
    pub total_mw: T,
    /// `(branch position, MW)` for every in-service branch.
    pub per_branch: Vec<(usize, T)>,
}

pub fn branch_flows<T: Scalar>(case: &NetworkCase, vm: &[T], va: &[T]) -> Vec<BranchFlow<T>> {
    let base = T::lit(case.base_mva);
    let v: Vec<Complex<T>> = vm
        .iter()
        .zip(va)
        .map(|(&m, &a)| Complex::from_polar(m, a))
        .collect();
    // A case with a zero-impedance branch never reaches a solved state.
    let blocks = branch_admittances::<T>(case).unwrap_or_default();
    blocks
        .iter()
        .map(|br| {
            let (vf, vt) = (v[br.from], v[br.to]);
            let i_from = br.yff * vf + br.yft * vt;
            let i_to = br.ytf * vf + br.ytt * vt;
            BranchFlow {
                branch: br.branch,
                s_from: vf * i_from.conj() * base,
                s_to: vt * i_to.conj() * base,
            }
        })
        .collect()
}

/// Series and charging losses summed over in-service branches, MW.
///
/// Bus shunt conductance is a load, not a loss, and is not included.
pub fn compute_losses<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    vm: &[T],
    va: &[T],
) -> Losses<T> {
    debug_assert_eq!(y.n(), vm.len());
    let per_branch: Vec<(usize, T)> = branch_flows(case, vm, va)
        .iter()
        .map(|f| (f.branch, f.loss_mw()))
        .collect();
    Losses {
        total_mw: per_branch.iter().map(|(_, l)| *l).sum(),
        per_branch,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_ybus, solve_with_qlims, PowerFlowOptions};
    use super::*;
    use crate::caseio::{builtin_case14, parse_matpower_case};

    #[test]
    fn flat_no_load_is_lossless() {
        let mut case = builtin_case14();
        for br in &mut case.branches {
            br.b = 0.0;
            br.tap = 1.0;
        }
        let y = build_ybus::<f64>(&case).unwrap();
        let l = compute_losses(&case, &y, &[1.0; 14], &[0.0; 14]);
        assert!(l.total_mw.abs() < 1e-12);
        assert_eq!(l.per_branch.len(), 20);
    }

    #[test]
    fn resistanceless_line_is_lossless() {
        let case = parse_matpower_case(include_str!("../../fixtures/case2.m")).unwrap();
        let sol = solve_with_qlims::<f64>(&case, &PowerFlowOptions::default()).unwrap();
        let flows = branch_flows(&case, &sol.vm, &sol.va);
        assert!(flows[0].s_from.re > 40.0);
        assert!(sol.losses_mw.abs() < 1e-9);
    }
}
