//! Fixed-column CSV encoding of a [`SimulationLog`].
//!
//! Column order: `t, hour, attack_mask, converged, vm_true_<bus>…,
//! vm_meas_<bus>…, va_<bus>…, pg_<gen>…, qg_<gen>…, total_load_mw,
//! total_gen_mw, losses_mw, violations_true, violations_meas,
//! pvpq_switch_count`. Buses are labelled by case id, generators by 1-based
//! row. Floats use shortest round-trip formatting.

use gridattack::simulator::{FrameDelta, SimulationLog, TelemetryFrame};
use thiserror::Error;

const HEAD: [&str; 4] = ["t", "hour", "attack_mask", "converged"];
const TAIL: [&str; 6] = [
    "total_load_mw",
    "total_gen_mw",
    "losses_mw",
    "violations_true",
    "violations_meas",
    "pvpq_switch_count",
];

#[derive(Debug, Error, PartialEq)]
#[error("CSV schema mismatch: {0}")]
pub struct SchemaMismatch(pub String);

fn header(bus_ids: &[u32], n_gens: usize) -> Vec<String> {
    let mut h: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    for prefix in ["vm_true", "vm_meas", "va"] {
        h.extend(bus_ids.iter().map(|id| format!("{prefix}_{id}")));
    }
    for prefix in ["pg", "qg"] {
        h.extend((1..=n_gens).map(|g| format!("{prefix}_{g}")));
    }
    h.extend(TAIL.iter().map(|s| s.to_string()));
    h
}

pub fn write_csv(log: &SimulationLog) -> String {
    let mut out = header(&log.bus_ids, log.n_gens).join(",");
    out.push('\n');
    for f in &log.frames {
        let mut row: Vec<String> = vec![
            f.t.to_string(),
            f.hour.to_string(),
            f.attack_mask.to_string(),
            u8::from(f.converged).to_string(),
        ];
        for series in [&f.vm_true, &f.vm_meas, &f.va, &f.pg, &f.qg] {
            row.extend(series.iter().map(f64::to_string));
        }
        row.extend([
            f.total_load_mw.to_string(),
            f.total_gen_mw.to_string(),
            f.losses_mw.to_string(),
            f.violations_true.to_string(),
            f.violations_meas.to_string(),
            f.pvpq_switch_count.to_string(),
        ]);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Per-frame deltas `a − b`: `t, dvm_true_<bus>…, dvm_meas_<bus>…,
/// dmean_vm_true, dmean_vm_meas, dlosses_mw`.
pub fn write_delta_csv(bus_ids: &[u32], deltas: &[FrameDelta]) -> String {
    let mut cols = vec!["t".to_string()];
    for prefix in ["dvm_true", "dvm_meas"] {
        cols.extend(bus_ids.iter().map(|id| format!("{prefix}_{id}")));
    }
    cols.extend(["dmean_vm_true", "dmean_vm_meas", "dlosses_mw"].map(String::from));
    let mut out = cols.join(",");
    out.push('\n');
    for d in deltas {
        let mut row = vec![d.t.to_string()];
        row.extend(d.dvm_true.iter().chain(&d.dvm_meas).map(f64::to_string));
        row.extend([d.dmean_vm_true, d.dmean_vm_meas, d.dlosses_mw].map(|v| v.to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn mismatch(msg: impl Into<String>) -> SchemaMismatch {
    SchemaMismatch(msg.into())
}

/// Recovers bus ids and generator count from a header, or rejects it.
fn parse_header(cols: &[&str]) -> Result<(Vec<u32>, usize), SchemaMismatch> {
    if cols.len() < HEAD.len() + TAIL.len() || cols[..HEAD.len()] != HEAD {
        return Err(mismatch("header does not start with t,hour,attack_mask,converged"));
    }
    if cols[cols.len() - TAIL.len()..] != TAIL {
        return Err(mismatch("header does not end with the totals columns"));
    }
    let body = &cols[HEAD.len()..cols.len() - TAIL.len()];
    let bus_ids: Vec<u32> = body
        .iter()
        .map_while(|c| c.strip_prefix("vm_true_"))
        .map(|id| id.parse::<u32>().map_err(|_| mismatch(format!("bad bus label `{id}`"))))
        .collect::<Result<_, _>>()?;
    let n_bus = bus_ids.len();
    if n_bus == 0 {
        return Err(mismatch("no vm_true columns"));
    }
    let n_gens = (body.len() - 3 * n_bus) / 2;
    if body.len() < 3 * n_bus || 3 * n_bus + 2 * n_gens != body.len() {
        return Err(mismatch("unexpected number of per-bus/per-gen columns"));
    }
    let expected = header(&bus_ids, n_gens);
    if expected.iter().zip(cols).any(|(e, c)| e != c) {
        return Err(mismatch("column order differs from the log schema"));
    }
    Ok((bus_ids, n_gens))
}

fn num<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T, SchemaMismatch> {
    s.parse()
        .map_err(|_| mismatch(format!("line {line}: bad {what} value `{s}`")))
}

/// Parses a log written by [`write_csv`] for a run over `hours_per_cycle` hours.
///
/// Rows must start at `t = 0` with no gaps, and the `hour` column must span
/// the full cycle, so a file cut short is rejected rather than read as a
/// shorter run.
pub fn read_csv_with_cycle(text: &str, hours_per_cycle: f64) -> Result<SimulationLog, SchemaMismatch> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let cols: Vec<String> = reader
        .headers()
        .map_err(|e| mismatch(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let (bus_ids, n_gens) = parse_header(&col_refs)?;
    let nb = bus_ids.len();

    let mut frames = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| mismatch(format!("line {line}: {e}")))?;
        if rec.len() != cols.len() {
            return Err(mismatch(format!("line {line}: expected {} fields", cols.len())));
        }
        let f64s = |range: std::ops::Range<usize>| -> Result<Vec<f64>, SchemaMismatch> {
            range.map(|k| num::<f64>(&rec[k], &cols[k], line)).collect()
        };
        let mut at = HEAD.len();
        let vm_true = f64s(at..at + nb)?;
        at += nb;
        let vm_meas = f64s(at..at + nb)?;
        at += nb;
        let va = f64s(at..at + nb)?;
        at += nb;
        let pg = f64s(at..at + n_gens)?;
        at += n_gens;
        let qg = f64s(at..at + n_gens)?;
        at += n_gens;

        let t: usize = num(&rec[0], "t", line)?;
        if t != i {
            return Err(mismatch(format!("line {line}: expected t = {i}, found {t}")));
        }
        let converged = match &rec[3] {
            "1" => true,
            "0" => false,
            other => return Err(mismatch(format!("line {line}: bad converged flag `{other}`"))),
        };
        frames.push(TelemetryFrame {
            t,
            hour: num(&rec[1], "hour", line)?,
            attack_mask: num(&rec[2], "attack_mask", line)?,
            converged,
            vm_true,
            vm_meas,
            va,
            pg,
            qg,
            total_load_mw: num(&rec[at], "total_load_mw", line)?,
            total_gen_mw: num(&rec[at + 1], "total_gen_mw", line)?,
            losses_mw: num(&rec[at + 2], "losses_mw", line)?,
            violations_true: num(&rec[at + 3], "violations_true", line)?,
            violations_meas: num(&rec[at + 4], "violations_meas", line)?,
            pvpq_switch_count: num(&rec[at + 5], "pvpq_switch_count", line)?,
        });
    }
    if frames.is_empty() {
        return Err(mismatch("no data rows"));
    }
    let n = frames.len() as f64;
    for f in &frames {
        let expected = f.t as f64 * hours_per_cycle / n;
        if (f.hour - expected).abs() > 1e-9 * hours_per_cycle.max(1.0) {
            return Err(mismatch(format!(
                "hour column at t = {} is {}, expected {expected} for a {}-step run (file truncated?)",
                f.t,
                f.hour,
                frames.len()
            )));
        }
    }
    Ok(SimulationLog {
        config: None,
        bus_ids,
        n_gens,
        frames,
    })
}

/// [`read_csv_with_cycle`] for the standard 24-hour cycle.
pub fn read_csv(text: &str) -> Result<SimulationLog, SchemaMismatch> {
    read_csv_with_cycle(text, 24.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridattack::caseio::builtin_case14;
    use gridattack::simulator::{run, SimConfig};

    fn short_log() -> SimulationLog {
        let cfg = SimConfig {
            n_steps: 6,
            ..SimConfig::default()
        };
        run(&builtin_case14(), &cfg).unwrap()
    }

    #[test]
    fn header_layout() {
        let h = header(&[1, 2], 1);
        assert_eq!(
            h.join(","),
            "t,hour,attack_mask,converged,vm_true_1,vm_true_2,vm_meas_1,vm_meas_2,va_1,va_2,\
             pg_1,qg_1,total_load_mw,total_gen_mw,losses_mw,violations_true,violations_meas,\
             pvpq_switch_count"
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let log = short_log();
        let text = write_csv(&log);
        assert_eq!(text.lines().count(), 7);
        let back = read_csv(&text).unwrap();
        assert_eq!(back.frames, log.frames);
        assert_eq!(back.bus_ids, log.bus_ids);
        assert_eq!(back.n_gens, 5);
        assert_eq!(write_csv(&back), text);
    }

    #[test]
    fn truncated_rows_rejected() {
        let text = write_csv(&short_log());
        let lines: Vec<&str> = text.lines().collect();
        let cut = lines[..5].join("\n");
        assert!(read_csv(&cut).is_err());
        let mid_row = &text[..text.len() - 40];
        assert!(read_csv(mid_row).is_err());
    }

    #[test]
    fn foreign_csv_rejected() {
        assert!(read_csv("a,b,c\n1,2,3\n").is_err());
        assert!(read_csv("").is_err());
        let text = write_csv(&short_log()).replacen("vm_meas_1", "vm_measured_1", 1);
        assert!(read_csv(&text).is_err());
    }
}
