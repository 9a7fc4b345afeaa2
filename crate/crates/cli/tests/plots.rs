use gridattack::attacks::default_schedule;
use gridattack::caseio::builtin_case14;
use gridattack::simulator::{run, SimConfig, SimulationLog};
use gridattack_cli::csvlog::{read_csv, write_csv};
use gridattack_cli::plot::{render, PlotError, PlotKind, PlotOptions};

fn logs() -> (SimulationLog, SimulationLog) {
    let case = builtin_case14();
    let attacked = run(&case, &SimConfig::with_schedule(default_schedule())).unwrap();
    let baseline = run(&case, &SimConfig::default()).unwrap();
    // plots are made from CSV files in practice
    (
        read_csv(&write_csv(&attacked)).unwrap(),
        read_csv(&write_csv(&baseline)).unwrap(),
    )
}

#[test]
fn every_plot_is_deterministic() {
    let (a, b) = logs();
    let opts = PlotOptions::default();
    for name in PlotKind::NAMES {
        let kind: PlotKind = name.parse().unwrap();
        let first = render(kind, &a, Some(&b), &opts).unwrap();
        let second = render(kind, &a, Some(&b), &opts).unwrap();
        assert_eq!(first, second, "{name}");
        assert!(first.contains(r#"<svg xmlns="http://www.w3.org/2000/svg""#), "{name}");
    }
}

#[test]
fn selected_bus_voltages() {
    let (a, _) = logs();
    let opts = PlotOptions {
        buses: Some(vec![1, 5, 7, 9]),
        ..PlotOptions::default()
    };
    let svg = render(PlotKind::Voltages, &a, None, &opts).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert_eq!(svg.matches(r#"class="attack-span""#).count(), 3);
    let band: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="band""#)).collect();
    assert_eq!(band.len(), 2);
    assert!(band.iter().all(|l| l.contains("stroke-dasharray")));
}

#[test]
fn rms_on_identical_runs_has_no_markers() {
    let (a, _) = logs();
    let svg = render(PlotKind::Rms, &a, Some(&a), &PlotOptions::default()).unwrap();
    assert_eq!(svg.matches(r#"class="anomaly""#).count(), 0);
    let traces: Vec<String> = svg
        .lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| l.split("points=").nth(1).unwrap().to_string())
        .collect();
    assert_eq!(traces.len(), 2);
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn rms_marks_stress_anomalies() {
    let case = builtin_case14();
    let mut schedule = default_schedule();
    schedule.windows[2].scale = 0.2;
    let a = run(&case, &SimConfig::with_schedule(schedule)).unwrap();
    let b = run(&case, &SimConfig::default()).unwrap();
    let svg = render(PlotKind::Rms, &a, Some(&b), &PlotOptions::default()).unwrap();
    assert!(svg.matches(r#"class="anomaly""#).count() > 0);
}

#[test]
fn heatmap_delta_of_identical_runs_is_uniform_white() {
    let (a, _) = logs();
    let svg = render(PlotKind::Heatmap, &a, Some(&a), &PlotOptions::default()).unwrap();
    let cells: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="cell-delta""#)).collect();
    assert_eq!(cells.len(), 144 * 14);
    assert!(cells.iter().all(|c| c.contains(r##"fill="#ffffff""##)));
}

#[test]
fn heatmap_delta_is_colored_under_attack() {
    let (a, b) = logs();
    let svg = render(PlotKind::Heatmap, &a, Some(&b), &PlotOptions::default()).unwrap();
    assert!(svg
        .lines()
        .filter(|l| l.contains(r#"class="cell-delta""#))
        .any(|c| !c.contains(r##"fill="#ffffff""##)));
}

#[test]
fn errors() {
    let (a, b) = logs();
    assert!(matches!("bars".parse::<PlotKind>(), Err(PlotError::UnknownKind(_))));
    let opts = PlotOptions {
        buses: Some(vec![15]),
        ..PlotOptions::default()
    };
    assert_eq!(render(PlotKind::Voltages, &a, None, &opts), Err(PlotError::UnknownBus(15)));
    let mut short = b.clone();
    short.frames.truncate(10);
    assert!(matches!(
        render(PlotKind::Heatmap, &a, Some(&short), &PlotOptions::default()),
        Err(PlotError::Shape(_))
    ));
    short.frames.clear();
    assert!(matches!(
        render(PlotKind::Timeline, &short, None, &PlotOptions::default()),
        Err(PlotError::EmptyInput(_))
    ));
}
