use super::{BlifError, Cube, Latch, LatchInit, Lit, Netlist, SopGate};

/// A logical line after joining `\` continuations and stripping comments.
struct LogicalLine {
    number: usize,
    text: String,
}

fn logical_lines(text: &str) -> Vec<LogicalLine> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut start = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if pending.is_empty() {
            start = idx + 1;
        }
        let trimmed = line.trim_end();
        if let Some(body) = trimmed.strip_suffix('\\') {
            pending.push_str(body);
            pending.push(' ');
            continue;
        }
        pending.push_str(trimmed);
        if !pending.trim().is_empty() {
            out.push(LogicalLine {
                number: start,
                text: std::mem::take(&mut pending),
            });
        } else {
            pending.clear();
        }
    }
    if !pending.trim().is_empty() {
        out.push(LogicalLine {
            number: start,
            text: pending,
        });
    }
    out
}

fn syntax(line: usize, msg: impl Into<String>) -> BlifError {
    BlifError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses the first `.model` of a structural BLIF file.
pub fn parse_blif(text: &str) -> Result<Netlist, BlifError> {
    let lines = logical_lines(text);
    let mut name = String::new();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut gates: Vec<SopGate> = Vec::new();
    let mut latches = Vec::new();
    let mut seen_model = false;
    // index of the `.names` block currently collecting cover rows
    let mut open_gate: Option<usize> = None;

    for line in &lines {
        let mut toks = line.text.split_whitespace();
        let Some(head) = toks.next() else { continue };

        if !head.starts_with('.') {
            let Some(gi) = open_gate else {
                return Err(syntax(line.number, format!("unexpected token `{head}`")));
            };
            let gate = &mut gates[gi];
            let rest: Vec<&str> = std::iter::once(head).chain(toks).collect();
            let (cube_str, out_str) = match (gate.inputs.len(), rest.as_slice()) {
                (0, [o]) => ("", *o),
                (_, [c, o]) => (*c, *o),
                _ => return Err(syntax(line.number, "malformed cover row")),
            };
            if cube_str.chars().count() != gate.inputs.len() {
                return Err(syntax(
                    line.number,
                    format!(
                        "cube `{cube_str}` has {} literals, expected {}",
                        cube_str.chars().count(),
                        gate.inputs.len()
                    ),
                ));
            }
            let lits = cube_str
                .chars()
                .map(|c| Lit::from_char(c).ok_or_else(|| syntax(line.number, format!("bad literal `{c}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let out = match out_str {
                "1" => true,
                "0" => false,
                other => return Err(syntax(line.number, format!("bad output value `{other}`"))),
            };
            if let Some(first) = gate.cover.first() {
                if first.out != out {
                    return Err(syntax(line.number, "cover mixes ON-set and OFF-set rows"));
                }
            }
            gate.cover.push(Cube { lits, out });
            continue;
        }

        open_gate = None;
        match head {
            ".model" => {
                if seen_model {
                    // only the first model is read; hierarchies are unsupported
                    return Err(BlifError::UnsupportedDirective {
                        line: line.number,
                        name: ".model (second)".into(),
                    });
                }
                seen_model = true;
                name = toks.next().unwrap_or("top").to_string();
            }
            ".inputs" => inputs.extend(toks.map(str::to_string)),
            ".outputs" => outputs.extend(toks.map(str::to_string)),
            ".names" => {
                let mut nets: Vec<String> = toks.map(str::to_string).collect();
                let Some(output) = nets.pop() else {
                    return Err(syntax(line.number, ".names needs an output net"));
                };
                gates.push(SopGate {
                    inputs: nets,
                    output,
                    cover: Vec::new(),
                });
                open_gate = Some(gates.len() - 1);
            }
            ".latch" => {
                let args: Vec<&str> = toks.collect();
                let (input, output, init) = match args.as_slice() {
                    [i, o] => (*i, *o, None),
                    [i, o, init] => (*i, *o, Some(*init)),
                    [i, o, _ty, _ctrl] => (*i, *o, None),
                    [i, o, _ty, _ctrl, init] => (*i, *o, Some(*init)),
                    _ => return Err(syntax(line.number, "malformed .latch")),
                };
                let init = match init {
                    None => LatchInit::UNKNOWN,
                    Some(s) => match s.parse::<u8>() {
                        Ok(v) if v <= 3 => LatchInit(v),
                        _ => return Err(syntax(line.number, format!("bad latch init `{s}`"))),
                    },
                };
                latches.push(Latch {
                    input: input.to_string(),
                    output: output.to_string(),
                    init,
                });
            }
            ".end" => break,
            other => {
                return Err(BlifError::UnsupportedDirective {
                    line: line.number,
                    name: other.to_string(),
                })
            }
        }
    }

    Netlist::new(name, inputs, outputs, gates, latches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blif::Driver;

    #[test]
    fn buffer_model() {
        let n = parse_blif(".model c\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n").unwrap();
        assert_eq!(n.name, "c");
        assert_eq!(n.gates.len(), 1);
        assert_eq!(n.inputs, vec!["a"]);
        assert_eq!(n.outputs, vec!["y"]);
        assert!(n.gates[0].eval(&[true]));
        assert!(!n.gates[0].eval(&[false]));
    }

    #[test]
    fn empty_cover_is_constant_zero() {
        let n = parse_blif(".model c\n.outputs y\n.names y\n.end\n").unwrap();
        assert!(n.gates[0].cover.is_empty());
        assert!(!n.gates[0].eval(&[]));
        let one = parse_blif(".model c\n.outputs y\n.names y\n1\n.end\n").unwrap();
        assert!(one.gates[0].eval(&[]));
    }

    #[test]
    fn continuation_and_comments() {
        let text = "# header\n.model m\n.inputs a \\\n  b # trailing\n.outputs y\n.names a b y\n11 1\n.end\n";
        let n = parse_blif(text).unwrap();
        assert_eq!(n.inputs, vec!["a", "b"]);
    }

    #[test]
    fn latch_forms() {
        let text = ".model m\n.inputs d\n.outputs q r s\n.latch d q\n.latch d r re clk 1\n.latch d s 0\n.end\n";
        let n = parse_blif(text).unwrap();
        assert_eq!(n.latches[0].init, LatchInit::UNKNOWN);
        assert!(n.latches[0].init.is_unknown());
        assert!(!n.latches[0].init.reset_value());
        assert_eq!(n.latches[1].init, LatchInit(1));
        assert_eq!(n.latches[2].init, LatchInit(0));
        assert_eq!(n.nets["q"].driver, Driver::Latch(0));
        assert!(n.has_unknown_init());
    }

    #[test]
    fn offset_cover() {
        let n = parse_blif(".model m\n.inputs a b\n.outputs y\n.names a b y\n11 0\n.end\n").unwrap();
        // NAND
        assert!(n.gates[0].eval(&[false, true]));
        assert!(!n.gates[0].eval(&[true, true]));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_blif(".model m\n.inputs a\n.outputs y\n.names a y\n1x 1\n.end\n"),
            Err(BlifError::Syntax { line: 5, .. })
        ));
        assert_eq!(
            parse_blif(".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.names a y\n0 1\n.end\n"),
            Err(BlifError::MultipleDrivers("y".into()))
        );
        assert_eq!(
            parse_blif(".model m\n.inputs a\n.outputs y\n.names b y\n1 1\n.end\n"),
            Err(BlifError::UndrivenNet("b".into()))
        );
        assert_eq!(
            parse_blif(".model m\n.subckt foo a=b\n.end\n"),
            Err(BlifError::UnsupportedDirective {
                line: 2,
                name: ".subckt".into()
            })
        );
        assert!(matches!(
            parse_blif(".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n0 0\n.end\n"),
            Err(BlifError::Syntax { line: 6, .. })
        ));
        assert!(matches!(
            parse_blif(".model m\n1 1\n.end\n"),
            Err(BlifError::Syntax { line: 2, .. })
        ));
    }
}
