use std::collections::{HashMap, HashSet};

use super::{BranchRecord, BusKind, BusRecord, CaseError, GenRecord, NetworkCase};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 13;

struct Row {
    line: usize,
    values: Vec<f64>,
}

struct Matrix {
    rows: Vec<Row>,
}

#[derive(Default)]
struct Sections {
    scalars: HashMap<String, (String, usize)>,
    matrices: HashMap<String, Matrix>,
}

/// Name of an assignment target with any `mpc.`-style prefix removed.
fn field_name(lhs: &str) -> &str {
    let lhs = lhs.trim();
    lhs.rsplit('.').next().unwrap_or(lhs).trim()
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

struct OpenMatrix {
    name: String,
    start: usize,
    rows: Vec<Row>,
    tokens: Vec<f64>,
    row_line: usize,
    bad: Option<(usize, String)>,
}

impl OpenMatrix {
    fn flush(&mut self) {
        if !self.tokens.is_empty() {
            self.rows.push(Row {
                line: self.row_line,
                values: std::mem::take(&mut self.tokens),
            });
        }
    }

    /// Feeds matrix body text; returns the remainder after `]` if the matrix closed.
    fn feed<'a>(&mut self, body: &'a str, line: usize) -> Option<&'a str> {
        let mut rest = body;
        loop {
            let end = rest
                .find([';', ']'])
                .unwrap_or(rest.len());
            for tok in rest[..end]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
            {
                if tok == "..." {
                    continue;
                }
                if self.tokens.is_empty() {
                    self.row_line = line;
                }
                match tok.parse::<f64>() {
                    Ok(v) => self.tokens.push(v),
                    Err(_) => {
                        if self.bad.is_none() {
                            self.bad = Some((line, format!("non-numeric token `{tok}`")));
                        }
                        self.tokens.push(f64::NAN);
                    }
                }
            }
            if end == rest.len() {
                // newline also terminates a row
                self.flush();
                return None;
            }
            let sep = rest.as_bytes()[end];
            self.flush();
            rest = &rest[end + 1..];
            if sep == b']' {
                return Some(rest);
            }
        }
    }
}

fn scan(text: &str) -> Result<Sections, CaseError> {
    let mut sections = Sections::default();
    let mut open: Option<OpenMatrix> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);

        if let Some(m) = open.as_mut() {
            if m.feed(line, line_no).is_some() {
                let m = open.take().expect("open matrix");
                close_matrix(&mut sections, m)?;
            }
            continue;
        }

        let Some(eq) = line.find('=') else {
            continue;
        };
        let lhs = &line[..eq];
        if lhs.trim_start().starts_with("function") {
            continue;
        }
        let name = field_name(lhs).to_string();
        let rhs = line[eq + 1..].trim();
        if let Some(body) = rhs.strip_prefix('[') {
            let mut m = OpenMatrix {
                name,
                start: line_no,
                rows: Vec::new(),
                tokens: Vec::new(),
                row_line: line_no,
                bad: None,
            };
            if m.feed(body, line_no).is_some() {
                close_matrix(&mut sections, m)?;
            } else {
                open = Some(m);
            }
        } else {
            let value = rhs.trim_end_matches(';').trim().to_string();
            sections.scalars.insert(name, (value, line_no));
        }
    }

    if let Some(m) = open {
        return Err(CaseError::MalformedRow {
            section: m.name,
            line: m.start,
            reason: "matrix is never closed with `]`".into(),
        });
    }
    Ok(sections)
}

fn close_matrix(sections: &mut Sections, m: OpenMatrix) -> Result<(), CaseError> {
    let required = matches!(m.name.as_str(), "bus" | "gen" | "branch");
    if required {
        if let Some((line, reason)) = m.bad {
            return Err(CaseError::MalformedRow {
                section: m.name,
                line,
                reason,
            });
        }
    }
    sections.matrices.insert(
        m.name,
        Matrix { rows: m.rows },
    );
    Ok(())
}

fn check_width(section: &str, m: &Matrix, min_cols: usize) -> Result<(), CaseError> {
    let width = m.rows.first().map(|r| r.values.len());
    for row in &m.rows {
        if row.values.len() < min_cols {
            return Err(CaseError::MalformedRow {
                section: section.into(),
                line: row.line,
                reason: format!(
                    "expected at least {min_cols} columns, found {}",
                    row.values.len()
                ),
            });
        }
        if Some(row.values.len()) != width {
            return Err(CaseError::MalformedRow {
                section: section.into(),
                line: row.line,
                reason: format!(
                    "row has {} columns but the first row has {}",
                    row.values.len(),
                    width.unwrap_or(0)
                ),
            });
        }
    }
    Ok(())
}

fn as_id(section: &str, row: &Row, col: usize) -> Result<u32, CaseError> {
    let v = row.values[col];
    if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
        return Err(CaseError::MalformedRow {
            section: section.into(),
            line: row.line,
            reason: format!("column {} must be a positive integer bus id, found {v}", col + 1),
        });
    }
    Ok(v as u32)
}

/// Parses MATPOWER (version 2) case text into a [`NetworkCase`].
///
/// Matrices other than `bus`, `gen` and `branch` are skipped, as are extra
/// trailing columns. A branch `tap` of `0` is stored as `1.0`.
pub fn parse_matpower_case(text: &str) -> Result<NetworkCase, CaseError> {
    let sections = scan(text)?;

    if let Some((version, _)) = sections.scalars.get("version") {
        let v = version.trim_matches(|c| c == '\'' || c == '"');
        if v != "2" {
            return Err(CaseError::UnsupportedVersion(v.to_string()));
        }
    }

    let (base_text, base_line) = sections
        .scalars
        .get("baseMVA")
        .ok_or(CaseError::MissingSection("baseMVA"))?;
    let base_mva: f64 = base_text.parse().map_err(|_| CaseError::MalformedRow {
        section: "baseMVA".into(),
        line: *base_line,
        reason: format!("non-numeric value `{base_text}`"),
    })?;

    let bus_m = sections
        .matrices
        .get("bus")
        .ok_or(CaseError::MissingSection("bus"))?;
    let gen_m = sections
        .matrices
        .get("gen")
        .ok_or(CaseError::MissingSection("gen"))?;
    let branch_m = sections
        .matrices
        .get("branch")
        .ok_or(CaseError::MissingSection("branch"))?;
    check_width("bus", bus_m, BUS_COLS)?;
    check_width("gen", gen_m, GEN_COLS)?;
    check_width("branch", branch_m, BRANCH_COLS)?;

    let mut buses = Vec::with_capacity(bus_m.rows.len());
    let mut seen = HashSet::new();
    for row in &bus_m.rows {
        let id = as_id("bus", row, 0)?;
        if !seen.insert(id) {
            return Err(CaseError::DuplicateBusId { id, line: row.line });
        }
        let v = &row.values;
        let bus_kind = BusKind::from_code(v[1] as u8)
            .filter(|_| v[1].fract() == 0.0)
            .ok_or_else(|| CaseError::MalformedRow {
                section: "bus".into(),
                line: row.line,
                reason: format!("unknown bus type {}", v[1]),
            })?;
        buses.push(BusRecord {
            id,
            bus_kind,
            pd: v[2],
            qd: v[3],
            gs: v[4],
            bs: v[5],
            vm0: v[7],
            va0: v[8],
            base_kv: v[9],
            vmax: v[11],
            vmin: v[12],
        });
    }
    if !buses.iter().any(|b| b.bus_kind == BusKind::Slack) {
        return Err(CaseError::NoSlackBus);
    }

    let mut gens = Vec::with_capacity(gen_m.rows.len());
    for row in &gen_m.rows {
        let bus = as_id("gen", row, 0)?;
        if !seen.contains(&bus) {
            return Err(CaseError::DanglingReference {
                section: "gen",
                bus,
                line: row.line,
            });
        }
        let v = &row.values;
        gens.push(GenRecord {
            bus,
            pg: v[1],
            qg: v[2],
            qmax: v[3],
            qmin: v[4],
            vset: v[5],
            mbase: v[6],
            status: v[7] > 0.0,
            pmax: v[8],
            pmin: v[9],
        });
    }

    let mut branches = Vec::with_capacity(branch_m.rows.len());
    for row in &branch_m.rows {
        let from_bus = as_id("branch", row, 0)?;
        let to_bus = as_id("branch", row, 1)?;
        for bus in [from_bus, to_bus] {
            if !seen.contains(&bus) {
                return Err(CaseError::DanglingReference {
                    section: "branch",
                    bus,
                    line: row.line,
                });
            }
        }
        let v = &row.values;
        branches.push(BranchRecord {
            from_bus,
            to_bus,
            r: v[2],
            x: v[3],
            b: v[4],
            rate_a: v[5],
            tap: if v[8] == 0.0 { 1.0 } else { v[8] },
            shift: v[9],
            status: v[10] > 0.0,
            angmin: v[11],
            angmax: v[12],
        });
    }

    Ok(NetworkCase {
        base_mva,
        buses,
        gens,
        branches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1 0 0 1 1.1 0.9;
  2 1 50 0 0 0 1 1 0 0 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 300 -300 1 100 1 250 0;
];
mpc.branch = [
  1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
";

    #[test]
    fn two_bus_literal_values() {
        let case = parse_matpower_case(TWO_BUS).unwrap();
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.buses[0].bus_kind, BusKind::Slack);
        assert_eq!(case.buses[1].bus_kind, BusKind::PQ);
        assert_eq!(case.buses[1].pd, 50.0);
        assert_eq!(case.gens.len(), 1);
        assert_eq!(case.gens[0].bus, 1);
        assert!(case.gens[0].status);
        let br = &case.branches[0];
        assert_eq!((br.from_bus, br.to_bus, br.r, br.x, br.tap), (1, 2, 0.0, 0.1, 1.0));
    }

    #[test]
    fn short_gen_row_names_line() {
        let text = TWO_BUS.replace("1 0 0 300 -300 1 100 1 250 0;", "1 0 0 300 -300 1 100;");
        match parse_matpower_case(&text) {
            Err(CaseError::MalformedRow { section, line, .. }) => {
                assert_eq!(section, "gen");
                assert_eq!(line, 9);
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_token() {
        let text = TWO_BUS.replace("2 1 50 0", "2 1 fifty 0");
        match parse_matpower_case(&text) {
            Err(CaseError::MalformedRow { line, reason, .. }) => {
                assert_eq!(line, 6);
                assert!(reason.contains("fifty"));
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn missing_branch_section() {
        let cut = TWO_BUS.split("mpc.branch").next().unwrap();
        assert_eq!(
            parse_matpower_case(cut),
            Err(CaseError::MissingSection("branch"))
        );
    }

    #[test]
    fn no_slack() {
        let text = TWO_BUS.replace("1 3 0  0", "1 1 0  0");
        assert_eq!(parse_matpower_case(&text), Err(CaseError::NoSlackBus));
    }

    #[test]
    fn duplicate_bus() {
        let text = TWO_BUS.replace("2 1 50", "1 1 50");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::DuplicateBusId { id: 1, line: 6 })
        ));
    }

    #[test]
    fn dangling_branch() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 7 0 0.1");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::DanglingReference {
                section: "branch",
                bus: 7,
                ..
            })
        ));
    }

    #[test]
    fn single_line_matrices_and_commas() {
        let text = "mpc.baseMVA = 50;\n\
            mpc.bus = [1, 3, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1.1, 0.9; 2 1 5 1 0 0 1 1 0 0 1 1.1 0.9];\n\
            mpc.gen = [1 0 0 10 -10 1 100 1 20 0 0 0];\n\
            mpc.branch = [1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360];\n";
        let case = parse_matpower_case(text).unwrap();
        assert_eq!(case.base_mva, 50.0);
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.buses[1].pd, 5.0);
        assert_eq!(case.gens[0].qmax, 10.0);
    }

    #[test]
    fn version_one_rejected() {
        let text = TWO_BUS.replace("'2'", "'1'");
        assert_eq!(
            parse_matpower_case(&text),
            Err(CaseError::UnsupportedVersion("1".into()))
        );
    }

    #[test]
    fn unclosed_matrix() {
        let text = TWO_BUS.split("];").next().unwrap();
        assert!(matches!(
            parse_matpower_case(text),
            Err(CaseError::MalformedRow { .. })
        ));
    }
}
