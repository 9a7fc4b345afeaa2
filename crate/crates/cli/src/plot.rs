//! Figure-grade SVG plots of simulation logs.

use std::str::FromStr;

use gridattack::attacks::AttackKind;
use gridattack::simulator::{
    detect_anomalies, rms_deviation, MetricsError, SimulationLog, VoltageBand,
    DEFAULT_ANOMALY_THRESHOLD,
};
use thiserror::Error;

use crate::svg::{diverging, sequential, Document, Panel, PALETTE, WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Voltages,
    Heatmap,
    Rms,
    Timeline,
    Balance,
    GenPq,
    Switching,
}

impl PlotKind {
    pub const NAMES: [&'static str; 7] = [
        "voltages",
        "heatmap",
        "rms",
        "timeline",
        "balance",
        "genpq",
        "switching",
    ];
}

impl FromStr for PlotKind {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "voltages" => PlotKind::Voltages,
            "heatmap" => PlotKind::Heatmap,
            "rms" => PlotKind::Rms,
            "timeline" => PlotKind::Timeline,
            "balance" => PlotKind::Balance,
            "genpq" => PlotKind::GenPq,
            "switching" => PlotKind::Switching,
            other => return Err(PlotError::UnknownKind(other.to_string())),
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("unknown plot kind `{0}` (expected one of {names})", names = PlotKind::NAMES.join(", "))]
    UnknownKind(String),
    #[error("bus {0} is not in the log")]
    UnknownBus(u32),
    #[error("nothing to plot: {0}")]
    EmptyInput(String),
    #[error(transparent)]
    Shape(#[from] MetricsError),
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    /// Buses for the voltage plot; all buses when `None`.
    pub buses: Option<Vec<u32>>,
    /// Use measured instead of true voltages (heatmap), or add them (voltages).
    pub measured: bool,
    pub anomaly_threshold: f64,
    pub vband: VoltageBand,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            buses: None,
            measured: false,
            anomaly_threshold: DEFAULT_ANOMALY_THRESHOLD,
            vband: VoltageBand::default(),
        }
    }
}

/// Maximal runs of equal non-zero attack mask: `(start, end, mask)`.
pub fn attack_spans(log: &SimulationLog) -> Vec<(usize, usize, u8)> {
    let mut spans: Vec<(usize, usize, u8)> = Vec::new();
    for f in &log.frames {
        match spans.last_mut() {
            Some(last) if f.attack_mask != 0 && last.2 == f.attack_mask && last.1 + 1 == f.t => {
                last.1 = f.t
            }
            _ if f.attack_mask != 0 => spans.push((f.t, f.t, f.attack_mask)),
            _ => {}
        }
    }
    spans
}

fn mask_label(mask: u8) -> String {
    let names: Vec<String> = AttackKind::ALL
        .iter()
        .filter(|k| mask & k.mask() != 0)
        .map(|k| k.to_string().to_uppercase())
        .collect();
    names.join("+")
}

fn mask_color(mask: u8) -> &'static str {
    match mask {
        1 => "#1f77b4",
        2 => "#d62728",
        4 => "#2ca02c",
        _ => "#7f7f7f",
    }
}

fn shade_spans(panel: &Panel, doc: &mut Document, log: &SimulationLog) {
    for (a, b, mask) in attack_spans(log) {
        panel.span(doc, a as f64, b as f64, mask_color(mask), &mask_label(mask));
    }
}

fn steps(log: &SimulationLog) -> Vec<f64> {
    log.frames.iter().map(|f| f.t as f64).collect()
}

fn x_range(log: &SimulationLog) -> (f64, f64) {
    (0.0, log.frames.len() as f64)
}

fn bus_column(log: &SimulationLog, bus: u32) -> Result<usize, PlotError> {
    log.bus_ids
        .iter()
        .position(|&b| b == bus)
        .ok_or(PlotError::UnknownBus(bus))
}

/// Renders one plot. `baseline` is drawn dashed (line charts) or as extra
/// panels (heatmap, timeline, switching).
pub fn render(
    kind: PlotKind,
    attacked: &SimulationLog,
    baseline: Option<&SimulationLog>,
    opts: &PlotOptions,
) -> Result<String, PlotError> {
    if attacked.frames.is_empty() || attacked.bus_ids.is_empty() {
        return Err(PlotError::EmptyInput("log has no frames".into()));
    }
    if let Some(b) = baseline {
        if b.frames.len() != attacked.frames.len() || b.bus_ids != attacked.bus_ids {
            return Err(MetricsError::ShapeMismatch(
                "attacked and baseline logs differ in steps or buses".into(),
            )
            .into());
        }
    }
    match kind {
        PlotKind::Voltages => voltages(attacked, baseline, opts),
        PlotKind::Heatmap => heatmap(attacked, baseline, opts),
        PlotKind::Rms => rms(attacked, baseline, opts),
        PlotKind::Timeline => timeline(attacked, baseline),
        PlotKind::Balance => balance(attacked, baseline),
        PlotKind::GenPq => genpq(attacked, baseline),
        PlotKind::Switching => switching(attacked, baseline),
    }
}

fn voltages(
    log: &SimulationLog,
    baseline: Option<&SimulationLog>,
    opts: &PlotOptions,
) -> Result<String, PlotError> {
    let buses = opts.buses.clone().unwrap_or_else(|| log.bus_ids.clone());
    if buses.is_empty() {
        return Err(PlotError::EmptyInput("no buses selected".into()));
    }
    let cols = buses
        .iter()
        .map(|&b| bus_column(log, b))
        .collect::<Result<Vec<_>, _>>()?;

    let series = |l: &SimulationLog, c: usize, measured: bool| -> Vec<f64> {
        l.frames
            .iter()
            .map(|f| if measured { f.vm_meas[c] } else { f.vm_true[c] })
            .collect()
    };
    let mut all: Vec<f64> = vec![opts.vband.vmin, opts.vband.vmax];
    for &c in &cols {
        all.extend(series(log, c, false));
        if opts.measured {
            all.extend(series(log, c, true));
        }
        if let Some(b) = baseline {
            all.extend(series(b, c, false));
        }
    }

    let mut doc = Document::new(420.0);
    doc.title("Bus voltage magnitudes");
    let panel = Panel::new(40.0, 330.0, x_range(log), Panel::fit(all));
    shade_spans(&panel, &mut doc, log);
    panel.hrule(&mut doc, opts.vband.vmin, "#555555");
    panel.hrule(&mut doc, opts.vband.vmax, "#555555");
    let xs = steps(log);
    let mut legend = Vec::new();
    for (k, (&bus, &c)) in buses.iter().zip(&cols).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        panel.polyline(&mut doc, &xs, &series(log, c, false), color, false);
        legend.push((format!("bus {bus}"), color, false));
        if opts.measured {
            panel.polyline(&mut doc, &xs, &series(log, c, true), color, true);
            legend.push((format!("bus {bus} measured"), color, true));
        }
        if let Some(b) = baseline {
            panel.polyline(&mut doc, &xs, &series(b, c, false), color, true);
            legend.push((format!("bus {bus} baseline"), color, true));
        }
    }
    panel.frame(&mut doc, "|V| (p.u.)", "timestep");
    panel.legend(&mut doc, &legend);
    Ok(doc.finish())
}

fn heatmap(
    log: &SimulationLog,
    baseline: Option<&SimulationLog>,
    opts: &PlotOptions,
) -> Result<String, PlotError> {
    let pick = |l: &SimulationLog| -> Vec<Vec<f64>> {
        l.frames
            .iter()
            .map(|f| if opts.measured { f.vm_meas.clone() } else { f.vm_true.clone() })
            .collect()
    };
    let mut panels: Vec<(String, Vec<Vec<f64>>, bool)> = vec![("attacked".into(), pick(log), false)];
    if let Some(b) = baseline {
        let base = pick(b);
        let delta: Vec<Vec<f64>> = panels[0]
            .1
            .iter()
            .zip(&base)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
            .collect();
        panels.push(("baseline".into(), base, false));
        panels.push(("delta (attacked - baseline)".into(), delta, true));
    }

    let (lo, hi) = panels
        .iter()
        .filter(|p| !p.2)
        .flat_map(|p| p.1.iter().flatten())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let nb = log.bus_ids.len();
    let nt = log.frames.len();
    let panel_h = (nb as f64 * 12.0).max(60.0);
    let mut doc = Document::new(50.0 + panels.len() as f64 * (panel_h + 45.0));
    doc.title("Bus voltage heatmap");
    for (k, (name, grid, is_delta)) in panels.iter().enumerate() {
        let top = 45.0 + k as f64 * (panel_h + 45.0);
        let panel = Panel::new(top, panel_h, (0.0, nt as f64), (0.0, nb as f64));
        let cw = panel.width() / nt as f64;
        let ch = panel_h / nb as f64;
        let dmax = grid
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let dscale = if dmax > 0.0 { dmax } else { 1.0 };
        for (t, row) in grid.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                let fill = if *is_delta {
                    diverging(v / dscale)
                } else {
                    sequential((v - lo) / span)
                };
                let class = if *is_delta { "cell-delta" } else { "cell" };
                doc.push(&format!(
                    r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    panel.px(t as f64),
                    top + i as f64 * ch,
                    cw + 0.05,
                    ch + 0.05
                ));
            }
        }
        doc.push(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            panel.left(),
            top - 5.0,
            name
        ));
        for (i, id) in log.bus_ids.iter().enumerate() {
            doc.push(&format!(
                r#"<text x="{:.1}" y="{:.2}" font-size="8" text-anchor="end">{id}</text>"#,
                panel.left() - 3.0,
                top + (i as f64 + 0.7) * ch
            ));
        }
        let scale_note = if *is_delta {
            format!("±{dmax:.4} p.u.")
        } else {
            format!("{lo:.4}–{hi:.4} p.u.")
        };
        doc.push(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{scale_note}</text>"#,
            WIDTH - 125.0,
            top + 12.0
        ));
    }
    Ok(doc.finish())
}

fn rms_series(log: &SimulationLog) -> Vec<f64> {
    log.frames
        .iter()
        .map(|f| rms_deviation(&f.vm_true).unwrap_or(f64::NAN))
        .collect()
}

fn rms(
    log: &SimulationLog,
    baseline: Option<&SimulationLog>,
    opts: &PlotOptions,
) -> Result<String, PlotError> {
    let a = rms_series(log);
    let b = baseline.map(rms_series);
    let limit = (opts.vband.vmax - 1.0).max(1.0 - opts.vband.vmin);
    let fit = Panel::fit(
        a.iter()
            .chain(b.iter().flatten())
            .copied()
            .chain([0.0, limit]),
    );
    let mut doc = Document::new(420.0);
    doc.title("RMS voltage deviation from 1 p.u.");
    let panel = Panel::new(40.0, 330.0, x_range(log), fit);
    shade_spans(&panel, &mut doc, log);
    panel.hrule(&mut doc, limit, "#555555");
    let xs = steps(log);
    panel.polyline(&mut doc, &xs, &a, PALETTE[1], false);
    let mut legend = vec![("attacked".to_string(), PALETTE[1], false)];
    if let (Some(base), Some(bs)) = (baseline, &b) {
        panel.polyline(&mut doc, &xs, bs, PALETTE[0], true);
        legend.push(("baseline".to_string(), PALETTE[0], true));
        for t in detect_anomalies(log, base, opts.anomaly_threshold)? {
            panel.marker(&mut doc, t as f64, a[t], "#000000");
        }
    }
    panel.frame(&mut doc, "RMS deviation (p.u.)", "timestep");
    panel.legend(&mut doc, &legend);
    Ok(doc.finish())
}

fn mean_vm(log: &SimulationLog) -> Vec<f64> {
    log.frames
        .iter()
        .map(|f| f.vm_true.iter().sum::<f64>() / f.vm_true.len() as f64)
        .collect()
}

fn timeline(log: &SimulationLog, baseline: Option<&SimulationLog>) -> Result<String, PlotError> {
    let mut doc = Document::new(470.0);
    doc.title("Attack timeline and mean system voltage");
    let xs = steps(log);
    let masks: Vec<f64> = log.frames.iter().map(|f| f64::from(f.attack_mask)).collect();
    let top = Panel::new(40.0, 150.0, x_range(log), (-0.5, 7.5));
    top.step_line(&mut doc, &xs, &masks, "#000000", false);
    top.frame(&mut doc, "attack mask", "");
    top.legend(&mut doc, &[("1=DoS 2=DoD 4=FDI".to_string(), "#000000", false)]);

    let a = mean_vm(log);
    let b = baseline.map(mean_vm);
    let bottom = Panel::new(
        230.0,
        200.0,
        x_range(log),
        Panel::fit(a.iter().chain(b.iter().flatten()).copied()),
    );
    shade_spans(&bottom, &mut doc, log);
    bottom.polyline(&mut doc, &xs, &a, PALETTE[1], false);
    let mut legend = vec![("attacked".to_string(), PALETTE[1], false)];
    if let Some(bs) = &b {
        bottom.polyline(&mut doc, &xs, bs, PALETTE[0], true);
        legend.push(("baseline".to_string(), PALETTE[0], true));
    }
    bottom.frame(&mut doc, "mean |V| (p.u.)", "timestep");
    bottom.legend(&mut doc, &legend);
    Ok(doc.finish())
}

fn balance(log: &SimulationLog, baseline: Option<&SimulationLog>) -> Result<String, PlotError> {
    type Pick = fn(&gridattack::simulator::TelemetryFrame) -> f64;
    let quantities: [(&str, Pick); 3] = [
        ("generation", |f| f.total_gen_mw),
        ("load", |f| f.total_load_mw),
        ("losses", |f| f.losses_mw),
    ];
    let mut doc = Document::new(560.0);
    doc.title("System power balance");
    let xs = steps(log);
    let runs: Vec<(&SimulationLog, bool)> = std::iter::once((log, false))
        .chain(baseline.map(|b| (b, true)))
        .collect();

    let upper_vals = runs
        .iter()
        .flat_map(|(l, _)| l.frames.iter().flat_map(|f| [f.total_gen_mw, f.total_load_mw]));
    let upper = Panel::new(40.0, 280.0, x_range(log), Panel::fit(upper_vals));
    let lower_vals = runs.iter().flat_map(|(l, _)| l.frames.iter().map(|f| f.losses_mw));
    let lower = Panel::new(360.0, 150.0, x_range(log), Panel::fit(lower_vals));
    shade_spans(&upper, &mut doc, log);
    shade_spans(&lower, &mut doc, log);

    let mut legend = Vec::new();
    for (k, (name, pick)) in quantities.iter().enumerate() {
        let panel = if k < 2 { &upper } else { &lower };
        for (l, dashed) in &runs {
            let ys: Vec<f64> = l.frames.iter().map(pick).collect();
            panel.polyline(&mut doc, &xs, &ys, PALETTE[k], *dashed);
            let tag = if *dashed { "baseline" } else { "attacked" };
            legend.push((format!("{name} ({tag})"), PALETTE[k], *dashed));
        }
    }
    upper.frame(&mut doc, "MW", "");
    lower.frame(&mut doc, "losses (MW)", "timestep");
    upper.legend(&mut doc, &legend);
    Ok(doc.finish())
}

fn genpq(log: &SimulationLog, baseline: Option<&SimulationLog>) -> Result<String, PlotError> {
    if log.n_gens == 0 {
        return Err(PlotError::EmptyInput("log has no generators".into()));
    }
    let mut doc = Document::new(600.0);
    doc.title("Generator active and reactive output");
    let xs = steps(log);
    let runs: Vec<(&SimulationLog, bool)> = std::iter::once((log, false))
        .chain(baseline.map(|b| (b, true)))
        .collect();
    let mut legend = Vec::new();
    for (row, (label, is_q)) in [("P (MW)", false), ("Q (MVAr)", true)].into_iter().enumerate() {
        let pick = |f: &gridattack::simulator::TelemetryFrame, g: usize| {
            if is_q {
                f.qg[g]
            } else {
                f.pg[g]
            }
        };
        let vals = runs
            .iter()
            .flat_map(|(l, _)| l.frames.iter().flat_map(|f| (0..log.n_gens).map(move |g| pick(f, g))));
        let panel = Panel::new(40.0 + row as f64 * 280.0, 230.0, x_range(log), Panel::fit(vals));
        shade_spans(&panel, &mut doc, log);
        for g in 0..log.n_gens {
            let color = PALETTE[g % PALETTE.len()];
            for (l, dashed) in &runs {
                let ys: Vec<f64> = l.frames.iter().map(|f| pick(f, g)).collect();
                panel.polyline(&mut doc, &xs, &ys, color, *dashed);
                if row == 0 {
                    let tag = if *dashed { "baseline" } else { "attacked" };
                    legend.push((format!("gen {} ({tag})", g + 1), color, *dashed));
                }
            }
        }
        panel.frame(&mut doc, label, if is_q { "timestep" } else { "" });
        if row == 0 {
            panel.legend(&mut doc, &legend);
        }
    }
    Ok(doc.finish())
}

fn switching(log: &SimulationLog, baseline: Option<&SimulationLog>) -> Result<String, PlotError> {
    let runs: Vec<(&str, &SimulationLog)> = std::iter::once(("attacked", log))
        .chain(baseline.map(|b| ("baseline", b)))
        .collect();
    let mut doc = Document::new(60.0 + runs.len() as f64 * 150.0);
    doc.title("PV→PQ switching events");
    let xs = steps(log);
    for (k, (name, l)) in runs.iter().enumerate() {
        let panel = Panel::new(40.0 + k as f64 * 150.0, 100.0, x_range(log), (-0.2, 1.2));
        let ind: Vec<f64> = l
            .frames
            .iter()
            .map(|f| if f.pvpq_switch_count > 0 { 1.0 } else { 0.0 })
            .collect();
        panel.step_line(&mut doc, &xs, &ind, PALETTE[k], false);
        let total: usize = l.frames.iter().map(|f| f.pvpq_switch_count).sum();
        panel.frame(&mut doc, "switched", if k + 1 == runs.len() { "timestep" } else { "" });
        panel.legend(&mut doc, &[(format!("{name}: {total} events"), PALETTE[k], false)]);
    }
    Ok(doc.finish())
}
