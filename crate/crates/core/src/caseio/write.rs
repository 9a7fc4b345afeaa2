use std::fmt::Write;

use super::NetworkCase;

/// Serializes a case back to version 2 MATPOWER text.
///
/// Floats use shortest round-trip formatting so that parsing the output
/// reproduces `case` exactly. Columns the model does not keep are written
/// with their neutral values.
pub fn write_matpower_case(case: &NetworkCase, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {name}");
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {};", case.base_mva);

    out.push_str("\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n");
    out.push_str("mpc.bus = [\n");
    for b in &case.buses {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t1\t{}\t{}\t{}\t1\t{}\t{};",
            b.id,
            b.bus_kind.code(),
            b.pd,
            b.qd,
            b.gs,
            b.bs,
            b.vm0,
            b.va0,
            b.base_kv,
            b.vmax,
            b.vmin
        );
    }
    out.push_str("];\n");

    out.push_str("\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n");
    out.push_str("mpc.gen = [\n");
    for g in &case.gens {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            g.bus,
            g.pg,
            g.qg,
            g.qmax,
            g.qmin,
            g.vset,
            g.mbase,
            u8::from(g.status),
            g.pmax,
            g.pmin
        );
    }
    out.push_str("];\n");

    out.push_str(
        "\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n",
    );
    out.push_str("mpc.branch = [\n");
    for br in &case.branches {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t{}\t{}\t{}\t{}\t{};",
            br.from_bus,
            br.to_bus,
            br.r,
            br.x,
            br.b,
            br.rate_a,
            br.tap,
            br.shift,
            u8::from(br.status),
            br.angmin,
            br.angmax
        );
    }
    out.push_str("];\n");
    out
}
