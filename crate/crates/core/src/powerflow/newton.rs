use num_complex::Complex;

use super::linalg::{DenseLu, DenseMatrix, LinearSolver};
use super::losses::compute_losses;
use super::ybus::AdmittanceMatrix;
use super::{PowerFlowError, PowerFlowOptions, PowerFlowSolution};
use crate::caseio::{BusKind, NetworkCase};
use crate::scalar::Scalar;

/// Positions of the unknowns: angles at every non-slack bus, magnitudes at PQ buses.
///
/// The mismatch vector is `[ΔP at pvpq; ΔQ at pq]` and the Jacobian columns
/// are `[va at pvpq; vm at pq]`, both in bus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MismatchLayout {
    pub pvpq: Vec<usize>,
    pub pq: Vec<usize>,
}

impl MismatchLayout {
    pub fn new(kinds: &[BusKind]) -> Self {
        let pvpq = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, BusKind::PV | BusKind::PQ))
            .map(|(i, _)| i)
            .collect();
        let pq = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == BusKind::PQ)
            .map(|(i, _)| i)
            .collect();
        Self { pvpq, pq }
    }

    pub fn len(&self) -> usize {
        self.pvpq.len() + self.pq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complex power injections `S_i = V_i · conj(Σ_j Y_ij V_j)`, p.u.
pub fn compute_injections<T: Scalar>(
    y: &AdmittanceMatrix<T>,
    vm: &[T],
    va: &[T],
) -> Vec<Complex<T>> {
    assert_eq!(vm.len(), y.n());
    assert_eq!(va.len(), y.n());
    let v = voltages(vm, va);
    y.mul_vec(&v)
        .into_iter()
        .zip(&v)
        .map(|(i, v)| v * i.conj())
        .collect()
}

fn voltages<T: Scalar>(vm: &[T], va: &[T]) -> Vec<Complex<T>> {
    vm.iter()
        .zip(va)
        .map(|(&m, &a)| Complex::from_polar(m, a))
        .collect()
}

/// Scheduled net injection per bus: in-service generation minus demand, p.u.
pub fn scheduled_injections<T: Scalar>(case: &NetworkCase) -> Vec<Complex<T>> {
    let index = case.bus_index();
    let mut s: Vec<Complex<f64>> = case
        .buses
        .iter()
        .map(|b| Complex::new(-b.pd, -b.qd))
        .collect();
    for g in case.gens.iter().filter(|g| g.status) {
        if let Some(&i) = index.get(&g.bus) {
            s[i] += Complex::new(g.pg, g.qg);
        }
    }
    let base = T::lit(case.base_mva);
    s.into_iter()
        .map(|c| Complex::new(T::lit(c.re) / base, T::lit(c.im) / base))
        .collect()
}

/// Mismatch `[P_sched − P_calc at pvpq; Q_sched − Q_calc at pq]`, p.u.
pub fn mismatch<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    vm: &[T],
    va: &[T],
    bus_kinds: &[BusKind],
) -> Vec<T> {
    let sched = scheduled_injections::<T>(case);
    let layout = MismatchLayout::new(bus_kinds);
    mismatch_from(&sched, &compute_injections(y, vm, va), &layout)
}

fn mismatch_from<T: Scalar>(
    sched: &[Complex<T>],
    calc: &[Complex<T>],
    layout: &MismatchLayout,
) -> Vec<T> {
    layout
        .pvpq
        .iter()
        .map(|&i| sched[i].re - calc[i].re)
        .chain(layout.pq.iter().map(|&i| sched[i].im - calc[i].im))
        .collect()
}

/// Analytic derivative of [`mismatch`] with respect to `[va at pvpq; vm at pq]`.
///
/// Scheduled injections are voltage independent, so this is the negated
/// derivative of the calculated injections.
pub fn jacobian<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    vm: &[T],
    va: &[T],
    bus_kinds: &[BusKind],
) -> DenseMatrix<T> {
    debug_assert_eq!(case.buses.len(), y.n());
    let layout = MismatchLayout::new(bus_kinds);
    jacobian_from(y, vm, va, &layout)
}

fn jacobian_from<T: Scalar>(
    y: &AdmittanceMatrix<T>,
    vm: &[T],
    va: &[T],
    layout: &MismatchLayout,
) -> DenseMatrix<T> {
    let v = voltages(vm, va);
    let unit: Vec<Complex<T>> = va
        .iter()
        .map(|&a| Complex::from_polar(T::one(), a))
        .collect();
    let current = y.mul_vec(&v);
    let j = Complex::new(T::zero(), T::one());

    // dS_i/dva_k = j V_i conj(δ_ik I_i − Y_ik V_k)
    let ds_dva = |i: usize, k: usize| {
        let mut inner = -(y.get(i, k) * v[k]);
        if i == k {
            inner += current[i];
        }
        j * v[i] * inner.conj()
    };
    // dS_i/dvm_k = V_i conj(Y_ik e^{jθ_k}) + δ_ik conj(I_i) e^{jθ_i}
    let ds_dvm = |i: usize, k: usize| {
        let mut d = v[i] * (y.get(i, k) * unit[k]).conj();
        if i == k {
            d += current[i].conj() * unit[i];
        }
        d
    };

    let npvpq = layout.pvpq.len();
    let n = layout.len();
    let mut jac = DenseMatrix::zeros(n, n);
    for (r, &i) in layout.pvpq.iter().enumerate() {
        for (c, &k) in layout.pvpq.iter().enumerate() {
            jac.set(r, c, -ds_dva(i, k).re);
        }
        for (c, &k) in layout.pq.iter().enumerate() {
            jac.set(r, npvpq + c, -ds_dvm(i, k).re);
        }
    }
    for (r, &i) in layout.pq.iter().enumerate() {
        for (c, &k) in layout.pvpq.iter().enumerate() {
            jac.set(npvpq + r, c, -ds_dva(i, k).im);
        }
        for (c, &k) in layout.pq.iter().enumerate() {
            jac.set(npvpq + r, npvpq + c, -ds_dvm(i, k).im);
        }
    }
    jac
}

/// Initial voltage state for [`nr_solve`].
#[derive(Debug, Clone, Copy)]
pub enum StartPoint<'a, T> {
    /// Follow `PowerFlowOptions::flat_start`.
    FromOptions,
    Warm { vm: &'a [T], va: &'a [T] },
}

fn max_abs<T: Scalar>(m: &[T]) -> T {
    m.iter().fold(T::zero(), |acc, v| {
        if v.is_nan() || acc.is_nan() {
            T::nan()
        } else {
            acc.max(v.abs())
        }
    })
}

fn initial_state<T: Scalar>(
    case: &NetworkCase,
    bus_kinds: &[BusKind],
    options: &PowerFlowOptions<T>,
    start: StartPoint<'_, T>,
    slack: usize,
) -> (Vec<T>, Vec<T>) {
    let (mut vm, va) = match start {
        StartPoint::Warm { vm, va } => (vm.to_vec(), va.to_vec()),
        StartPoint::FromOptions if options.flat_start => {
            let angle = T::lit(case.buses[slack].va0.to_radians());
            (vec![T::one(); case.buses.len()], vec![angle; case.buses.len()])
        }
        StartPoint::FromOptions => (
            case.buses.iter().map(|b| T::lit(b.vm0)).collect(),
            case.buses.iter().map(|b| T::lit(b.va0.to_radians())).collect(),
        ),
    };
    // voltage-controlled buses hold their setpoint
    let index = case.bus_index();
    let mut set = vec![false; vm.len()];
    for g in case.gens.iter().filter(|g| g.status) {
        let Some(&i) = index.get(&g.bus) else { continue };
        if !set[i] && matches!(bus_kinds[i], BusKind::PV | BusKind::Slack) {
            vm[i] = T::lit(g.vset);
            set[i] = true;
        }
    }
    (vm, va)
}

/// One Newton–Raphson solve under a fixed bus typing, without reactive-limit checks.
pub fn nr_solve<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    bus_kinds: &[BusKind],
    options: &PowerFlowOptions<T>,
    start: StartPoint<'_, T>,
) -> Result<PowerFlowSolution<T>, PowerFlowError<T>> {
    nr_solve_with(case, y, bus_kinds, options, start, &DenseLu)
}

/// [`nr_solve`] with an explicit linear-solver backend.
pub fn nr_solve_with<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    bus_kinds: &[BusKind],
    options: &PowerFlowOptions<T>,
    start: StartPoint<'_, T>,
    solver: &dyn LinearSolver<T>,
) -> Result<PowerFlowSolution<T>, PowerFlowError<T>> {
    options.validate()?;
    let slack = bus_kinds
        .iter()
        .position(|k| *k == BusKind::Slack)
        .ok_or(PowerFlowError::NoSlackBus)?;
    let layout = MismatchLayout::new(bus_kinds);
    let sched = scheduled_injections::<T>(case);
    let (mut vm, mut va) = initial_state(case, bus_kinds, options, start, slack);
    let npvpq = layout.pvpq.len();

    let mut iterations = 0;
    loop {
        let calc = compute_injections(y, &vm, &va);
        let m = mismatch_from(&sched, &calc, &layout);
        let norm = max_abs(&m);
        if norm < options.tol {
            let sol = finish(case, y, bus_kinds, vm, va, iterations, norm, true);
            return Ok(sol);
        }
        if iterations >= options.max_iter || !norm.is_finite() {
            let sol = finish(case, y, bus_kinds, vm, va, iterations, norm, false);
            return Err(PowerFlowError::NotConverged(Box::new(sol)));
        }
        let jac = jacobian_from(y, &vm, &va, &layout);
        let dx = match solver.solve(jac, &m) {
            Ok(dx) => dx,
            Err(_) => {
                let sol = finish(case, y, bus_kinds, vm, va, iterations, norm, false);
                return Err(PowerFlowError::SingularJacobian {
                    iteration: iterations,
                    last: Box::new(sol),
                });
            }
        };
        for (c, &i) in layout.pvpq.iter().enumerate() {
            va[i] -= dx[c];
        }
        for (c, &i) in layout.pq.iter().enumerate() {
            vm[i] -= dx[npvpq + c];
        }
        iterations += 1;
    }
}

/// Back-computes generator outputs and losses for a voltage state.
#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    case: &NetworkCase,
    y: &AdmittanceMatrix<T>,
    bus_kinds: &[BusKind],
    vm: Vec<T>,
    va: Vec<T>,
    iterations: usize,
    max_mismatch: T,
    converged: bool,
) -> PowerFlowSolution<T> {
    let s = compute_injections(y, &vm, &va);
    let base = T::lit(case.base_mva);
    let index = case.bus_index();

    let mut pg: Vec<T> = case
        .gens
        .iter()
        .map(|g| if g.status { T::lit(g.pg) } else { T::zero() })
        .collect();
    let mut qg: Vec<T> = case
        .gens
        .iter()
        .map(|g| if g.status { T::lit(g.qg) } else { T::zero() })
        .collect();

    let mut at_bus: Vec<Vec<usize>> = vec![Vec::new(); case.buses.len()];
    for (k, g) in case.gens.iter().enumerate() {
        if g.status {
            if let Some(&i) = index.get(&g.bus) {
                at_bus[i].push(k);
            }
        }
    }

    for (i, gens) in at_bus.iter().enumerate() {
        if gens.is_empty() {
            continue;
        }
        let bus = &case.buses[i];
        if bus_kinds[i] == BusKind::Slack {
            let p_bus = s[i].re * base + T::lit(bus.pd);
            let others: T = gens[1..].iter().map(|&k| pg[k]).sum();
            pg[gens[0]] = p_bus - others;
        }
        if matches!(bus_kinds[i], BusKind::Slack | BusKind::PV) {
            let q_bus = s[i].im * base + T::lit(bus.qd);
            distribute_q(case, gens, q_bus, &mut qg);
        }
    }

    let losses = compute_losses(case, y, &vm, &va);
    PowerFlowSolution {
        vm,
        va,
        pg,
        qg,
        converged,
        iterations,
        max_mismatch,
        losses_mw: losses.total_mw,
        bus_kinds: bus_kinds.to_vec(),
        switched_gens: Vec::new(),
        slack_q_violations: Vec::new(),
    }
}

/// Splits a bus's reactive output among its generators in proportion to their
/// reactive ranges, so all reach their limits together.
fn distribute_q<T: Scalar>(case: &NetworkCase, gens: &[usize], q_bus: T, qg: &mut [T]) {
    if gens.len() == 1 {
        qg[gens[0]] = q_bus;
        return;
    }
    let qmin: T = gens.iter().map(|&k| T::lit(case.gens[k].qmin)).sum();
    let range: T = gens
        .iter()
        .map(|&k| T::lit(case.gens[k].qmax - case.gens[k].qmin))
        .sum();
    if range > T::zero() && range.is_finite() {
        for &k in gens {
            let g = &case.gens[k];
            let share = T::lit(g.qmax - g.qmin) / range;
            qg[k] = T::lit(g.qmin) + (q_bus - qmin) * share;
        }
    } else {
        let n = T::lit(gens.len() as f64);
        for &k in gens {
            qg[k] = q_bus / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_ybus, initial_bus_kinds};
    use super::*;
    use crate::caseio::{builtin_case14, parse_matpower_case};

    fn two_bus() -> NetworkCase {
        parse_matpower_case(include_str!("../../fixtures/case2.m")).unwrap()
    }

    #[test]
    fn flat_profile_has_no_flow() {
        let case = two_bus();
        let y = build_ybus::<f64>(&case).unwrap();
        let s = compute_injections(&y, &[1.0, 1.0], &[0.0, 0.0]);
        assert!(s.iter().all(|s| s.norm() < 1e-15));
    }

    #[test]
    fn dead_bus_injects_nothing() {
        let case = builtin_case14();
        let y = build_ybus::<f64>(&case).unwrap();
        let mut vm = vec![1.0; 14];
        vm[6] = 0.0;
        let s = compute_injections(&y, &vm, &[0.1; 14]);
        assert_eq!(s[6], Complex::new(0.0, 0.0));
    }

    #[test]
    fn flat_start_mismatch_dimension() {
        let case = builtin_case14();
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = initial_bus_kinds(&case);
        let n_pq = kinds.iter().filter(|k| **k == BusKind::PQ).count();
        let m = mismatch(&case, &y, &[1.0; 14], &[0.0; 14], &kinds);
        assert_eq!(n_pq, 9);
        assert_eq!(m.len(), 13 + n_pq);
        assert!(m.iter().all(|v| v.is_finite()));
        let j = jacobian(&case, &y, &[1.0; 14], &[0.0; 14], &kinds);
        assert_eq!((j.rows(), j.cols()), (m.len(), m.len()));
    }

    #[test]
    fn doubling_demand_doubles_demand_term() {
        let case = builtin_case14();
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = initial_bus_kinds(&case);
        let vm = vec![1.0; 14];
        let va = vec![0.0; 14];
        let mut doubled = case.clone();
        for b in &mut doubled.buses {
            b.pd *= 2.0;
        }
        let m1 = mismatch(&case, &y, &vm, &va, &kinds);
        let m2 = mismatch(&doubled, &y, &vm, &va, &kinds);
        let layout = MismatchLayout::new(&kinds);
        for (r, &i) in layout.pvpq.iter().enumerate() {
            let pd = case.buses[i].pd / case.base_mva;
            assert!((m1[r] - m2[r] - pd).abs() < 1e-14);
        }
    }

    #[test]
    fn no_load_case_stays_flat() {
        let mut case = builtin_case14();
        for b in &mut case.buses {
            b.pd = 0.0;
            b.qd = 0.0;
            b.gs = 0.0;
            b.bs = 0.0;
        }
        for g in &mut case.gens {
            g.pg = 0.0;
            g.vset = 1.0;
        }
        for br in &mut case.branches {
            br.b = 0.0;
            br.tap = 1.0;
        }
        case.buses[0].va0 = 0.0;
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = initial_bus_kinds(&case);
        let sol = nr_solve(&case, &y, &kinds, &PowerFlowOptions::default(), StartPoint::FromOptions)
            .unwrap();
        assert!(sol.iterations <= 1);
        assert!(sol.vm.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(sol.va.iter().all(|a| a.abs() < 1e-12));
        assert!(sol.losses_mw.abs() < 1e-9);
    }

    #[test]
    fn missing_slack_is_an_error() {
        let case = two_bus();
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = vec![BusKind::PV, BusKind::PQ];
        assert!(matches!(
            nr_solve(&case, &y, &kinds, &PowerFlowOptions::default(), StartPoint::FromOptions),
            Err(PowerFlowError::NoSlackBus)
        ));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let case = builtin_case14();
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = initial_bus_kinds(&case);
        let opts = PowerFlowOptions {
            max_iter: 1,
            ..Default::default()
        };
        let err = nr_solve(&case, &y, &kinds, &opts, StartPoint::FromOptions).unwrap_err();
        let last = err.last_iterate().unwrap();
        assert!(!last.converged);
        assert_eq!(last.iterations, 1);
        assert_eq!(last.vm.len(), 14);
    }

    #[test]
    fn diverges_under_impossible_load() {
        let mut case = two_bus();
        case.buses[1].pd = 5000.0;
        let y = build_ybus::<f64>(&case).unwrap();
        let kinds = initial_bus_kinds(&case);
        let res = nr_solve(&case, &y, &kinds, &PowerFlowOptions::default(), StartPoint::FromOptions);
        assert!(res.is_err());
    }

    #[test]
    fn multi_gen_bus_shares_by_range() {
        let mut case = builtin_case14();
        let mut extra = case.gens[1].clone();
        extra.pg = 0.0;
        extra.qmax = 150.0;
        extra.qmin = -120.0;
        case.gens.push(extra);
        let mut qg = vec![0.0f64; case.gens.len()];
        distribute_q(&case, &[1, 5], 90.0, &mut qg);
        // ranges 90 and 270, total minimum -160
        assert!((qg[1] - (-40.0 + 250.0 * 0.25)).abs() < 1e-12);
        assert!((qg[5] - (-120.0 + 250.0 * 0.75)).abs() < 1e-12);
        assert!((qg[1] + qg[5] - 90.0).abs() < 1e-12);
    }
}
