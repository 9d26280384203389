use std::fmt::Write;

use super::Netlist;

/// Emits a canonical BLIF rendering: one directive per line, no
/// continuations, latches with explicit `re clk <init>`.
pub fn write_blif(n: &Netlist) -> String {
    let mut s = String::new();
    let _ = writeln!(s, ".model {}", n.name);
    if !n.inputs.is_empty() {
        let _ = writeln!(s, ".inputs {}", n.inputs.join(" "));
    }
    if !n.outputs.is_empty() {
        let _ = writeln!(s, ".outputs {}", n.outputs.join(" "));
    }
    for l in &n.latches {
        let _ = writeln!(s, ".latch {} {} re clk {}", l.input, l.output, l.init.0);
    }
    for g in &n.gates {
        s.push_str(".names");
        for i in &g.inputs {
            s.push(' ');
            s.push_str(i);
        }
        s.push(' ');
        s.push_str(&g.output);
        s.push('\n');
        for cube in &g.cover {
            let lits: String = cube.lits.iter().map(|l| l.as_char()).collect();
            let out = if cube.out { '1' } else { '0' };
            if lits.is_empty() {
                let _ = writeln!(s, "{out}");
            } else {
                let _ = writeln!(s, "{lits} {out}");
            }
        }
    }
    s.push_str(".end\n");
    s
}
