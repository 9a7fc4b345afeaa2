//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p gridattack-cli --test acceptance`.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gridattack::attacks::{attack_mask_at, default_schedule};
use gridattack::caseio::{builtin_case14, BusKind, NetworkCase};
use gridattack::powerflow::{
    build_ybus, compute_injections, compute_losses, initial_bus_kinds, jacobian, mismatch,
    nr_solve, solve_case, solve_with_qlims, PowerFlowOptions, QLimit, StartPoint,
};
use gridattack::simulator::{
    count_violations, nominal_loads, rms_deviation, run, run_traced, SimConfig, SimulationLog,
    VoltageBand,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Median wall time of `reps` calls.
fn median_time<R>(reps: usize, mut f: impl FnMut() -> R) -> Duration {
    let mut times: Vec<Duration> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed()
        })
        .collect();
    times.sort();
    times[reps / 2]
}

fn bus_pos(case: &NetworkCase, id: u32) -> usize {
    case.buses.iter().position(|b| b.id == id).unwrap()
}

fn case_integrity() -> Outcome {
    let case = builtin_case14();
    let mut gen_buses: Vec<u32> = case.gens.iter().map(|g| g.bus).collect();
    gen_buses.sort_unstable();
    let slack: Vec<u32> = case
        .buses
        .iter()
        .filter(|b| b.bus_kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    let mut taps: Vec<(u32, u32)> = case
        .branches
        .iter()
        .filter(|b| b.tap != 1.0 || b.shift != 0.0)
        .map(|b| (b.from_bus, b.to_bus))
        .collect();
    taps.sort_unstable();
    let elapsed = median_time(11, builtin_case14);
    let shape = case.buses.len() == 14
        && gen_buses == [1, 2, 3, 6, 8]
        && slack == [1]
        && case.base_mva == 100.0
        && case.branches.len() == 20
        && taps == [(4, 7), (4, 9), (5, 6)];
    outcome(
        shape && elapsed < Duration::from_millis(1),
        format!(
            "{} buses, gens at {gen_buses:?}, slack {slack:?}, base {} MVA, {} branches, taps on {taps:?}, load {elapsed:?}",
            case.buses.len(),
            case.base_mva,
            case.branches.len()
        ),
    )
}

fn solver_correctness() -> Outcome {
    let case = builtin_case14();
    let sol = solve_case::<f64>(&case).unwrap();
    let elapsed = median_time(11, || solve_case::<f64>(&case).unwrap());

    let y = build_ybus::<f64>(&case).unwrap();
    let calc = compute_injections(&y, &sol.vm, &sol.va);
    let mut net: Vec<Complex64> = case
        .buses
        .iter()
        .map(|b| Complex64::new(-b.pd, -b.qd) / case.base_mva)
        .collect();
    for (k, g) in case.gens.iter().enumerate() {
        net[bus_pos(&case, g.bus)] += Complex64::new(sol.pg[k], sol.qg[k]) / case.base_mva;
    }
    let residual = calc
        .iter()
        .zip(&net)
        .map(|(c, s)| (c - s).norm())
        .fold(0.0, f64::max);

    let pd: f64 = case.buses.iter().map(|b| b.pd).sum();
    let by_balance = sol.pg.iter().sum::<f64>() - pd;
    let by_branches = compute_losses(&case, &y, &sol.vm, &sol.va).total_mw;
    let loss_gap = (by_balance - by_branches).abs();

    outcome(
        sol.converged
            && sol.iterations <= 6
            && sol.max_mismatch < 1e-8
            && residual < 1e-8
            && loss_gap < 1e-6
            && elapsed < Duration::from_millis(10),
        format!(
            "{} iterations, mismatch {:.1e}, residual {residual:.1e}, losses {by_balance:.6} vs {by_branches:.6} MW, solve {elapsed:?}",
            sol.iterations, sol.max_mismatch
        ),
    )
}

fn fd_relative_error(case: &NetworkCase, vm: &[f64], va: &[f64]) -> f64 {
    const H: f64 = 1e-6;
    let y = build_ybus::<f64>(case).unwrap();
    let kinds = initial_bus_kinds(case);
    let jac = jacobian(case, &y, vm, va, &kinds);
    let vars: Vec<(bool, usize)> = (0..kinds.len())
        .filter(|&i| kinds[i] != BusKind::Slack)
        .map(|i| (true, i))
        .chain(
            (0..kinds.len())
                .filter(|&i| kinds[i] == BusKind::PQ)
                .map(|i| (false, i)),
        )
        .collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (c, &(is_angle, bus)) in vars.iter().enumerate() {
        let shifted = |h: f64| {
            let (mut vm, mut va) = (vm.to_vec(), va.to_vec());
            if is_angle {
                va[bus] += h;
            } else {
                vm[bus] += h;
            }
            mismatch(case, &y, &vm, &va, &kinds)
        };
        let (fp, fm) = (shifted(H), shifted(-H));
        for r in 0..vars.len() {
            let fd = (fp[r] - fm[r]) / (2.0 * H);
            worst = worst.max((jac.get(r, c) - fd).abs());
            scale = scale.max(jac.get(r, c).abs());
        }
    }
    worst / scale
}

fn jacobian_vs_fd() -> Outcome {
    let case = builtin_case14();
    let start = Instant::now();
    let mut errs = vec![fd_relative_error(&case, &[1.0; 14], &[0.0; 14])];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let vm: Vec<f64> = (0..14).map(|_| rng.gen_range(0.9..1.1)).collect();
        let va: Vec<f64> = (0..14).map(|_| rng.gen_range(-0.4..0.4)).collect();
        errs.push(fd_relative_error(&case, &vm, &va));
    }
    let elapsed = start.elapsed();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max relative error {worst:.2e} over 11 points, {elapsed:?}"),
    )
}

fn qlim_semantics() -> Outcome {
    let opts = PowerFlowOptions::default();
    let mut tight = builtin_case14();
    let g = 1;
    tight.gens[g].qmax = 30.0;
    let sol = solve_with_qlims::<f64>(&tight, &opts).unwrap();
    let b = bus_pos(&tight, tight.gens[g].bus);
    let converted = sol.switched_gens.len() == 1
        && sol.switched_gens[0].gen == g
        && sol.switched_gens[0].limit == QLimit::Qmax;
    let pinned = (sol.qg[g] - 30.0).abs() < 1e-8;
    let sagged = sol.vm[b] < tight.gens[g].vset;

    let mut wide = builtin_case14();
    for gen in &mut wide.gens {
        gen.qmax = 1e9;
        gen.qmin = -1e9;
    }
    let with = solve_with_qlims::<f64>(&wide, &opts).unwrap();
    let y = build_ybus::<f64>(&wide).unwrap();
    let plain =
        nr_solve(&wide, &y, &initial_bus_kinds(&wide), &opts, StartPoint::FromOptions).unwrap();
    let gap = with
        .vm
        .iter()
        .zip(&plain.vm)
        .chain(with.va.iter().zip(&plain.va))
        .chain(with.pg.iter().zip(&plain.pg))
        .chain(with.qg.iter().zip(&plain.qg))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        converted && pinned && sagged && with.switched_gens.is_empty() && gap <= 1e-12,
        format!(
            "qmax 30 at bus 2: switched {:?}, qg {:.10} MVAr, vm {:.4} < vset {}; wide limits: {} switches, max gap {gap:.1e}",
            sol.switched_gens.iter().map(|s| s.gen).collect::<Vec<_>>(),
            sol.qg[g],
            sol.vm[b],
            tight.gens[g].vset,
            with.switched_gens.len()
        ),
    )
}

fn default_config() -> SimConfig {
    SimConfig::with_schedule(default_schedule())
}

fn fdi_exactness(log: &SimulationLog) -> Outcome {
    let mut bad = Vec::new();
    let mut max_float_gap: f64 = 0.0;
    for f in &log.frames {
        let in_window = (60..=90).contains(&f.t);
        for (m, v) in f.vm_meas.iter().zip(&f.vm_true) {
            let ok = if in_window { *m == v + 0.1 } else { m == v };
            if in_window {
                max_float_gap = max_float_gap.max(((m - v) - 0.1).abs());
            }
            if !ok {
                bad.push(f.t);
            }
        }
    }
    bad.dedup();
    outcome(
        bad.is_empty() && log.frames.iter().all(|f| f.vm_meas.len() == 14),
        format!(
            "meas == true + 0.1 on all 14 buses for t in 60..=90, meas == true elsewhere; bad steps {bad:?}; \
             largest rounding in (meas − true) − 0.1: {max_float_gap:.1e}"
        ),
    )
}

fn dos_freeze(case: &NetworkCase) -> Outcome {
    let (log, loads) = run_traced(case, &default_config()).unwrap();
    let frozen = (21..=50).all(|t| loads[t] == loads[20]);
    let flat = (20..=50).all(|t| log.frames[t].vm_true == log.frames[20].vm_true);
    let moved = loads[51] != loads[20];
    outcome(
        frozen && flat,
        format!(
            "loads[21..=50] == loads[20]: {frozen}; vm_true constant over 20..=50: {flat}; load resumes at 51: {moved}"
        ),
    )
}

fn dod_scaling(case: &NetworkCase) -> Outcome {
    let cfg = default_config();
    let (_, loads) = run_traced(case, &cfg).unwrap();
    let targets = [5u32, 7, 9];
    let mut worst_rel: f64 = 0.0;
    let mut others_exact = true;
    for t in 100..=130 {
        let nominal = nominal_loads(case, t, &cfg);
        for (i, b) in case.buses.iter().enumerate() {
            let got = loads[t].pd[i];
            if targets.contains(&b.id) {
                let want = 1.5 * nominal.pd[i];
                let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
                worst_rel = worst_rel.max(rel);
            } else if got != nominal.pd[i] || loads[t].qd[i] != nominal.qd[i] {
                others_exact = false;
            }
        }
    }
    outcome(
        worst_rel <= 1e-12 && others_exact,
        format!("targets 5,7,9 max relative error {worst_rel:.1e}; other buses exactly nominal: {others_exact}"),
    )
}

fn bitmask() -> Outcome {
    let s = default_schedule();
    let expected = |t: usize| match t {
        20..=50 => 1,
        60..=90 => 4,
        100..=130 => 2,
        _ => 0,
    };
    let bad: Vec<usize> = (0..144).filter(|&t| attack_mask_at(&s, t) != expected(t)).collect();
    outcome(bad.is_empty(), format!("mismatching steps {bad:?}"))
}

fn window_mean<F: Fn(&gridattack::simulator::TelemetryFrame) -> f64>(
    log: &SimulationLog,
    range: std::ops::RangeInclusive<usize>,
    f: F,
) -> f64 {
    let frames: Vec<_> = log.frames.iter().filter(|fr| range.contains(&fr.t)).collect();
    frames.iter().map(|fr| f(fr)).sum::<f64>() / frames.len() as f64
}

fn window_switches(log: &SimulationLog) -> usize {
    log.frames
        .iter()
        .filter(|f| (100..=130).contains(&f.t))
        .map(|f| f.pvpq_switch_count)
        .sum()
}

fn loss_direction(attacked: &SimulationLog, baseline: &SimulationLog) -> Outcome {
    let a = window_mean(attacked, 100..=130, |f| f.losses_mw);
    let b = window_mean(baseline, 100..=130, |f| f.losses_mw);
    outcome(
        a > b,
        format!("mean losses over 100..=130: attacked {a:.3} MW vs baseline {b:.3} MW"),
    )
}

fn switching_direction(case: &NetworkCase, attacked: &SimulationLog, baseline: &SimulationLog) -> Outcome {
    let base = window_switches(baseline);
    let nominal = window_switches(attacked);
    let mut stress = default_schedule();
    stress.windows[2].scale = 0.2;
    let stressed = window_switches(&run(case, &SimConfig::with_schedule(stress)).unwrap());
    outcome(
        nominal >= base && stressed > base,
        format!(
            "switch events over 100..=130: baseline {base}, scale 1.5 {nominal} (>= required), scale 0.2 {stressed} (> required)"
        ),
    )
}

fn gridattack(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gridattack"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let p = dir.path();
    let read = |name: &str| std::fs::read(p.join(name)).unwrap_or_default();
    let common = ["--case", "builtin:case14", "--steps", "144", "--seed", "11", "--sigma", "0.05"];
    let mut ok = true;
    for out in ["a", "b"] {
        let mut args = vec!["run", "--schedule", "default", "--out", out];
        args.extend(common);
        ok &= gridattack(p, &args);
    }
    let repeat = !read("a.csv").is_empty() && read("a.csv") == read("b.csv");

    let mut args = vec!["run", "--schedule", "none", "--out", "n"];
    args.extend(common);
    ok &= gridattack(p, &args);
    let start = Instant::now();
    let mut args = vec!["run", "--schedule", "default", "--with-baseline", "--out", "d"];
    args.extend(common);
    ok &= gridattack(p, &args);
    let dual = start.elapsed();
    let baseline_equal = read("n.csv") == read("d_baseline.csv");

    outcome(
        ok && repeat && baseline_equal && dual < Duration::from_secs(5),
        format!(
            "repeat run byte-identical: {repeat}; empty schedule == baseline bytes: {baseline_equal}; dual run {dual:?}"
        ),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let band = VoltageBand::default();
    let edges = [0.95, 1.05, 1.0, 0.9499999999999999, 1.0500000000000003];
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..60);
        let vm: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    edges[rng.gen_range(0..edges.len())]
                } else {
                    rng.gen_range(0.85..1.15)
                }
            })
            .collect();

        let mut acc = 0.0;
        for v in &vm {
            let d = v - 1.0;
            acc += d * d;
        }
        let rms = (acc / n as f64).sqrt();
        let mut outside = 0;
        for v in &vm {
            if !(0.95 <= *v && *v <= 1.05) {
                outside += 1;
            }
        }
        if rms_deviation(&vm).unwrap().to_bits() != rms.to_bits()
            || count_violations(&vm, band) != outside
        {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} of 1000 random vectors disagree with the brute-force versions"),
    )
}

fn main() {
    let case = builtin_case14();
    let attacked = run(&case, &default_config()).unwrap();
    let baseline = run(&case, &SimConfig::default()).unwrap();

    let results: Vec<(&str, Outcome)> = vec![
        ("case integrity", case_integrity()),
        ("solver correctness", solver_correctness()),
        ("jacobian vs finite differences", jacobian_vs_fd()),
        ("reactive-limit semantics", qlim_semantics()),
        ("FDI exactness", fdi_exactness(&attacked)),
        ("DoS freeze", dos_freeze(&case)),
        ("DoD scaling", dod_scaling(&case)),
        ("attack bitmask", bitmask()),
        ("DoD loss direction", loss_direction(&attacked, &baseline)),
        ("PV->PQ stress direction", switching_direction(&case, &attacked, &baseline)),
        ("determinism and baseline equivalence", determinism()),
        ("metric oracles", metric_oracles()),
    ];

    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        writeln!(out, "{tag} {:>2} {name}: {}", k + 1, o.detail).unwrap();
    }
    writeln!(out, "{} passed, {failed} failed", results.len() - failed).unwrap();
    out.flush().unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
