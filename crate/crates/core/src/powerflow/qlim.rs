use super::newton::{nr_solve, StartPoint};
use super::ybus::build_ybus;
use super::{PowerFlowError, PowerFlowOptions, PowerFlowSolution, QLimit, QlimMode, SwitchedGen};
use crate::caseio::{BusKind, NetworkCase};
use crate::scalar::Scalar;

/// Tolerance on reactive limits, MVAr.
const Q_EPS: f64 = 1e-8;

/// Bus typing used at the start of every solve: the case's own types, except
/// that PV buses without an in-service generator are treated as PQ.
pub fn initial_bus_kinds(case: &NetworkCase) -> Vec<BusKind> {
    let index = case.bus_index();
    let mut has_gen = vec![false; case.buses.len()];
    for g in case.gens.iter().filter(|g| g.status) {
        if let Some(&i) = index.get(&g.bus) {
            has_gen[i] = true;
        }
    }
    case.buses
        .iter()
        .zip(has_gen)
        .map(|(b, gen)| match b.bus_kind {
            BusKind::PV if !gen => BusKind::PQ,
            k => k,
        })
        .collect()
}

struct Violation {
    bus: usize,
    limit: QLimit,
    excess: f64,
}

/// In-service generator positions grouped by dense bus index.
fn gens_by_bus(case: &NetworkCase) -> Vec<Vec<usize>> {
    let index = case.bus_index();
    let mut out = vec![Vec::new(); case.buses.len()];
    for (k, g) in case.gens.iter().enumerate() {
        if g.status {
            if let Some(&i) = index.get(&g.bus) {
                out[i].push(k);
            }
        }
    }
    out
}

fn find_violations<T: Scalar>(
    case: &NetworkCase,
    by_bus: &[Vec<usize>],
    kinds: &[BusKind],
    sol: &PowerFlowSolution<T>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, gens) in by_bus.iter().enumerate() {
        if kinds[i] != BusKind::PV || gens.is_empty() {
            continue;
        }
        let q: f64 = gens.iter().map(|&k| sol.qg[k].as_f64()).sum();
        let qmax: f64 = gens.iter().map(|&k| case.gens[k].qmax).sum();
        let qmin: f64 = gens.iter().map(|&k| case.gens[k].qmin).sum();
        if q > qmax + Q_EPS {
            out.push(Violation {
                bus: i,
                limit: QLimit::Qmax,
                excess: q - qmax,
            });
        } else if q < qmin - Q_EPS {
            out.push(Violation {
                bus: i,
                limit: QLimit::Qmin,
                excess: qmin - q,
            });
        }
    }
    out
}

/// Solves the power flow, converting PV buses whose generators exceed their
/// reactive limits to PQ buses with output pinned at the violated limit.
///
/// Each round re-solves warm-started from the previous one. Conversions are
/// never reversed within a solve. Generators sharing a bus are checked
/// against their summed limits and pinned together.
pub fn solve_with_qlims<T: Scalar>(
    case: &NetworkCase,
    options: &PowerFlowOptions<T>,
) -> Result<PowerFlowSolution<T>, PowerFlowError<T>> {
    options.validate()?;
    let y = build_ybus::<T>(case)?;
    let mut kinds = initial_bus_kinds(case);
    let by_bus = gens_by_bus(case);

    let mut sol = nr_solve(case, &y, &kinds, options, StartPoint::FromOptions)?;
    let mut iterations = sol.iterations;
    let mut switched: Vec<SwitchedGen> = Vec::new();

    if options.enforce_q_lims {
        let mut work = case.clone();
        let mut rounds = 0;
        loop {
            let mut violations = find_violations(&work, &by_bus, &kinds, &sol);
            if violations.is_empty() {
                break;
            }
            if rounds == options.max_qlim_rounds {
                sol.iterations = iterations;
                sol.switched_gens = switched;
                return Err(PowerFlowError::QlimCycleExceeded {
                    rounds,
                    last: Box::new(sol),
                });
            }
            rounds += 1;
            if options.qlim_mode == QlimMode::OneAtATime {
                let worst = violations
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.excess.total_cmp(&b.1.excess))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                violations = vec![violations.swap_remove(worst)];
            }
            for v in &violations {
                kinds[v.bus] = BusKind::PQ;
                for &k in &by_bus[v.bus] {
                    let g = &mut work.gens[k];
                    g.qg = match v.limit {
                        QLimit::Qmax => g.qmax,
                        QLimit::Qmin => g.qmin,
                    };
                    switched.push(SwitchedGen {
                        gen: k,
                        limit: v.limit,
                    });
                }
            }
            let warm_vm = sol.vm.clone();
            let warm_va = sol.va.clone();
            let next = nr_solve(
                &work,
                &y,
                &kinds,
                options,
                StartPoint::Warm {
                    vm: &warm_vm,
                    va: &warm_va,
                },
            );
            match next {
                Ok(s) => {
                    iterations += s.iterations;
                    sol = s;
                }
                Err(mut e) => {
                    if let PowerFlowError::NotConverged(last)
                    | PowerFlowError::SingularJacobian { last, .. } = &mut e
                    {
                        last.iterations += iterations;
                        last.switched_gens = switched;
                    }
                    return Err(e);
                }
            }
        }
    }

    sol.iterations = iterations;
    sol.switched_gens = switched;
    sol.slack_q_violations = by_bus
        .iter()
        .enumerate()
        .filter(|(i, _)| kinds[*i] == BusKind::Slack)
        .flat_map(|(_, gens)| gens.iter().copied())
        .filter(|&k| {
            let q = sol.qg[k].as_f64();
            let g = &case.gens[k];
            q > g.qmax + Q_EPS || q < g.qmin - Q_EPS
        })
        .collect();
    Ok(sol)
}
