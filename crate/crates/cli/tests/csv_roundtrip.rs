use gridattack::attacks::default_schedule;
use gridattack::caseio::builtin_case14;
use gridattack::simulator::{
    compute_metrics, run, MetricsSummary, SimConfig, SimulationLog, Side, TelemetryFrame,
};
use gridattack_cli::csvlog::{read_csv, write_csv, write_delta_csv};
use proptest::collection::vec;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

fn arb_log() -> impl Strategy<Value = SimulationLog> {
    (1usize..6, 0usize..4, 1usize..12).prop_flat_map(|(nb, ng, nt)| {
        let frame = (
            vec(finite(), 3 * nb + 2 * ng + 3),
            0u8..8,
            any::<bool>(),
            vec(0usize..100, 3),
        );
        (Just(nb), Just(ng), vec(frame, nt))
    })
    .prop_map(|(nb, ng, raw)| {
        let nt = raw.len();
        let frames = raw
            .into_iter()
            .enumerate()
            .map(|(t, (v, mask, converged, counts))| {
                let take = |from: usize, len: usize| v[from..from + len].to_vec();
                TelemetryFrame {
                    t,
                    hour: t as f64 * 24.0 / nt as f64,
                    vm_true: take(0, nb),
                    vm_meas: take(nb, nb),
                    va: take(2 * nb, nb),
                    pg: take(3 * nb, ng),
                    qg: take(3 * nb + ng, ng),
                    total_load_mw: v[3 * nb + 2 * ng],
                    total_gen_mw: v[3 * nb + 2 * ng + 1],
                    losses_mw: v[3 * nb + 2 * ng + 2],
                    violations_true: counts[0],
                    violations_meas: counts[1],
                    attack_mask: mask,
                    pvpq_switch_count: counts[2],
                    converged,
                }
            })
            .collect();
        SimulationLog {
            config: None,
            bus_ids: (1..=nb as u32).map(|i| i * 3).collect(),
            n_gens: ng,
            frames,
        }
    })
}

fn assert_metrics_close(a: &MetricsSummary, b: &MetricsSummary) {
    assert!((a.mean_rms_dev - b.mean_rms_dev).abs() <= 1e-12);
    assert!((a.max_dev - b.max_dev).abs() <= 1e-12);
    assert!((a.avg_losses_mw - b.avg_losses_mw).abs() <= 1e-12);
    assert_eq!(a.violation_count_true, b.violation_count_true);
    assert_eq!(a.violation_count_meas, b.violation_count_meas);
    assert_eq!(a.switch_event_total, b.switch_event_total);
}

proptest! {
    #[test]
    fn arbitrary_logs_round_trip(log in arb_log()) {
        let text = write_csv(&log);
        prop_assert_eq!(text.lines().count(), log.frames.len() + 1);
        let back = read_csv(&text).unwrap();
        prop_assert_eq!(&back.frames, &log.frames);
        prop_assert_eq!(&back.bus_ids, &log.bus_ids);
        prop_assert_eq!(back.n_gens, log.n_gens);
    }
}

#[test]
fn simulated_log_metrics_survive_csv() {
    let log = run(&builtin_case14(), &SimConfig::with_schedule(default_schedule())).unwrap();
    let back = read_csv(&write_csv(&log)).unwrap();
    for side in [Side::True, Side::Measured] {
        assert_metrics_close(&compute_metrics(&log, side), &compute_metrics(&back, side));
    }
}

#[test]
fn delta_csv_layout() {
    let text = write_delta_csv(&[1, 2], &[]);
    assert_eq!(
        text,
        "t,dvm_true_1,dvm_true_2,dvm_meas_1,dvm_meas_2,dmean_vm_true,dmean_vm_meas,dlosses_mw\n"
    );
}
