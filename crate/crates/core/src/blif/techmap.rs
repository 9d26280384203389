use std::collections::HashMap;

use super::{BlifError, Cell, CellId, CellKind, Lit, MappedNetlist, Netlist, SopGate};

/// Truth tables are stored in a `u64`, which bounds the LUT size.
pub const MAX_LUT_K: usize = 6;

/// A cover over mapped signals. `offset` marks an OFF-set cover.
#[derive(Debug, Clone)]
struct Sop {
    vars: Vec<CellId>,
    rows: Vec<Vec<Lit>>,
    offset: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Func {
    Const(bool),
    Lut { inputs: Vec<CellId>, truth: u64 },
}

impl Func {
    fn inputs(&self) -> &[CellId] {
        match self {
            Func::Const(_) => &[],
            Func::Lut { inputs, .. } => inputs,
        }
    }

    fn eval(&self, value_of: &impl Fn(CellId) -> bool) -> bool {
        match self {
            Func::Const(b) => *b,
            Func::Lut { inputs, truth } => {
                let idx = inputs
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &c)| acc | ((value_of(c) as usize) << i));
                (truth >> idx) & 1 == 1
            }
        }
    }
}

impl Sop {
    fn from_gate(g: &SopGate, net_cell: &HashMap<&str, CellId>) -> Sop {
        Sop {
            vars: g.inputs.iter().map(|n| net_cell[n.as_str()]).collect(),
            rows: g.cover.iter().map(|c| c.lits.clone()).collect(),
            offset: g.cover.first().is_some_and(|c| !c.out),
        }
    }

    fn eval(&self, values: &[bool]) -> bool {
        let hit = self
            .rows
            .iter()
            .any(|r| r.iter().zip(values).all(|(l, &v)| l.matches(v)));
        hit != self.offset
    }

    /// Merges repeated variables and drops columns that are don't-care in
    /// every row.
    fn normalize(mut self) -> Sop {
        let mut first_pos: HashMap<CellId, usize> = HashMap::new();
        let mut keep = vec![true; self.vars.len()];
        for (i, &v) in self.vars.iter().enumerate() {
            if let Some(&p) = first_pos.get(&v) {
                keep[i] = false;
                self.rows.retain_mut(|row| {
                    match (row[p], row[i]) {
                        (_, Lit::DontCare) => true,
                        (Lit::DontCare, l) => {
                            row[p] = l;
                            true
                        }
                        (a, b) => a == b,
                    }
                });
            } else {
                first_pos.insert(v, i);
            }
        }
        for col in 0..self.vars.len() {
            if keep[col] && self.rows.iter().all(|r| r[col] == Lit::DontCare) {
                keep[col] = false;
            }
        }
        let vars = self
            .vars
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&v, _)| v)
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().zip(&keep).filter(|(_, &k)| k).map(|(&l, _)| l).collect())
            .collect();
        Sop {
            vars,
            rows,
            offset: self.offset,
        }
    }

    fn constant(&self) -> Option<bool> {
        if self.rows.is_empty() {
            return Some(self.offset);
        }
        if self.rows.iter().any(|r| r.iter().all(|&l| l == Lit::DontCare)) {
            return Some(!self.offset);
        }
        None
    }

    fn cofactor(&self, col: usize, value: bool) -> Sop {
        let mut vars = self.vars.clone();
        vars.remove(col);
        let rows = self
            .rows
            .iter()
            .filter(|r| r[col].matches(value))
            .map(|r| {
                let mut r = r.clone();
                r.remove(col);
                r
            })
            .collect();
        Sop {
            vars,
            rows,
            offset: self.offset,
        }
    }

    fn truth(&self) -> u64 {
        let n = self.vars.len();
        let mut tt = 0u64;
        let mut vals = vec![false; n];
        for idx in 0..(1usize << n) {
            for (b, v) in vals.iter_mut().enumerate() {
                *v = (idx >> b) & 1 == 1;
            }
            if self.eval(&vals) {
                tt |= 1 << idx;
            }
        }
        tt
    }
}

struct Mapper<'a> {
    k: usize,
    cells: &'a mut Vec<Cell>,
    base_name: String,
    helpers: usize,
}

impl Mapper<'_> {
    fn materialize(&mut self, f: Func) -> Func {
        match f {
            Func::Const(_) => f,
            Func::Lut { ref inputs, truth } if inputs.len() == 1 && truth == 0b10 => f,
            Func::Lut { inputs, truth } => {
                let id = self.helper(inputs, truth);
                Func::Lut {
                    inputs: vec![id],
                    truth: 0b10,
                }
            }
        }
    }

    fn helper(&mut self, inputs: Vec<CellId>, truth: u64) -> CellId {
        let id = CellId(self.cells.len());
        self.cells.push(Cell {
            name: format!("{}$t{}", self.base_name, self.helpers),
            kind: CellKind::Lut { truth },
            inputs,
        });
        self.helpers += 1;
        id
    }

    fn decompose(&mut self, sop: Sop) -> Func {
        let sop = sop.normalize();
        if let Some(b) = sop.constant() {
            return Func::Const(b);
        }
        if sop.vars.len() <= self.k {
            return Func::Lut {
                truth: sop.truth(),
                inputs: sop.vars,
            };
        }
        // Shannon expansion on the highest-index variable.
        let col = sop.vars.len() - 1;
        let v = sop.vars[col];
        let f0 = self.decompose(sop.cofactor(col, false));
        let f1 = self.decompose(sop.cofactor(col, true));
        self.combine(v, f0, f1)
    }

    fn combine(&mut self, v: CellId, f0: Func, f1: Func) -> Func {
        if f0 == f1 {
            return f0;
        }
        let mut inputs = vec![v];
        for &c in f0.inputs().iter().chain(f1.inputs()) {
            if !inputs.contains(&c) {
                inputs.push(c);
            }
        }
        if inputs.len() > self.k {
            let f0 = self.materialize(f0);
            let f1 = self.materialize(f1);
            if let (Func::Lut { inputs: i0, .. }, Func::Lut { inputs: i1, .. }) = (&f0, &f1) {
                if self.k < 3 && i0[0] != i1[0] && i0[0] != v && i1[0] != v {
                    // 2-input LUTs cannot hold a mux: (!v & f0) | (v & f1)
                    let lo = self.helper(vec![v, i0[0]], 0b0100);
                    let hi = self.helper(vec![v, i1[0]], 0b1000);
                    return Func::Lut {
                        inputs: vec![lo, hi],
                        truth: 0b1110,
                    };
                }
            }
            return self.combine(v, f0, f1);
        }
        let mut truth = 0u64;
        for idx in 0..(1usize << inputs.len()) {
            let value_of = |c: CellId| {
                let p = inputs.iter().position(|&x| x == c).unwrap();
                (idx >> p) & 1 == 1
            };
            let out = if value_of(v) {
                f1.eval(&value_of)
            } else {
                f0.eval(&value_of)
            };
            if out {
                truth |= 1 << idx;
            }
        }
        Func::Lut { inputs, truth }
    }
}

/// Maps every `.names` gate onto LUTs of at most `k` inputs. Gates that fit
/// become one LUT over their declared inputs; wider gates are split by
/// Shannon expansion on the highest-index input, merging each multiplexer
/// into its cofactors whenever the merged support still fits in `k`.
pub fn tech_map(n: &Netlist, k: usize) -> Result<MappedNetlist, BlifError> {
    if !(2..=MAX_LUT_K).contains(&k) {
        return Err(BlifError::UnsupportedLutSize(k));
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut net_cell: HashMap<&str, CellId> = HashMap::new();
    let push = |cells: &mut Vec<Cell>, name: &str, kind: CellKind| {
        cells.push(Cell {
            name: name.to_string(),
            kind,
            inputs: Vec::new(),
        });
        CellId(cells.len() - 1)
    };

    let mut inputs = Vec::new();
    for name in &n.inputs {
        let id = push(&mut cells, name, CellKind::InputPad);
        net_cell.insert(name, id);
        inputs.push(id);
    }
    let mut ff_ids = Vec::new();
    for l in &n.latches {
        let id = push(&mut cells, &l.output, CellKind::FlipFlop { init: l.init });
        net_cell.insert(&l.output, id);
        ff_ids.push(id);
    }
    let mut gate_ids = Vec::new();
    for g in &n.gates {
        let id = push(&mut cells, &g.output, CellKind::Const0);
        net_cell.insert(&g.output, id);
        gate_ids.push(id);
    }
    let mut outputs = Vec::new();
    for name in &n.outputs {
        let id = push(&mut cells, &format!("out:{name}"), CellKind::OutputPad);
        outputs.push(id);
    }

    for (l, &id) in n.latches.iter().zip(&ff_ids) {
        cells[id.0].inputs = vec![net_cell[l.input.as_str()]];
    }
    for (name, &id) in n.outputs.iter().zip(&outputs) {
        cells[id.0].inputs = vec![net_cell[name.as_str()]];
    }

    for (g, &root) in n.gates.iter().zip(&gate_ids) {
        let sop = Sop::from_gate(g, &net_cell);
        let func = if g.inputs.is_empty() {
            Func::Const(sop.eval(&[]))
        } else if g.inputs.len() <= k {
            Func::Lut {
                truth: sop.truth(),
                inputs: sop.vars,
            }
        } else {
            let mut m = Mapper {
                k,
                cells: &mut cells,
                base_name: g.output.clone(),
                helpers: 0,
            };
            m.decompose(sop)
        };
        let cell = &mut cells[root.0];
        match func {
            Func::Const(b) => {
                cell.kind = if b { CellKind::Const1 } else { CellKind::Const0 };
                cell.inputs.clear();
            }
            Func::Lut { inputs, truth } => {
                cell.kind = CellKind::Lut { truth };
                cell.inputs = inputs;
            }
        }
    }

    Ok(MappedNetlist {
        name: n.name.clone(),
        cells,
        inputs,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blif::{parse_blif, Cube};

    fn gate_netlist(arity: usize, rows: &[&str]) -> Netlist {
        let ins: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
        let mut text = format!(".model g\n.inputs {}\n.outputs y\n.names {} y\n", ins.join(" "), ins.join(" "));
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        text.push_str(".end\n");
        parse_blif(&text).unwrap()
    }

    /// Evaluates the mapped combinational cone of output 0 directly.
    fn eval_comb(m: &MappedNetlist, assignment: &[bool]) -> bool {
        fn value(m: &MappedNetlist, id: CellId, a: &[bool], memo: &mut HashMap<CellId, bool>) -> bool {
            if let Some(&v) = memo.get(&id) {
                return v;
            }
            let c = m.cell(id);
            let v = match c.kind {
                CellKind::InputPad => a[m.inputs.iter().position(|&x| x == id).unwrap()],
                CellKind::Const0 => false,
                CellKind::Const1 => true,
                CellKind::OutputPad => value(m, c.inputs[0], a, memo),
                CellKind::Lut { truth } => {
                    let mut idx = 0;
                    for (p, &i) in c.inputs.iter().enumerate() {
                        idx |= (value(m, i, a, memo) as usize) << p;
                    }
                    (truth >> idx) & 1 == 1
                }
                CellKind::FlipFlop { .. } => unreachable!(),
            };
            memo.insert(id, v);
            v
        }
        value(m, m.outputs[0], assignment, &mut HashMap::new())
    }

    #[test]
    fn and2_truth_table() {
        let n = gate_netlist(2, &["11 1"]);
        let m = tech_map(&n, 6).unwrap();
        assert_eq!(m.lut_count(), 1);
        let lut = m.cells.iter().find(|c| c.is_lut()).unwrap();
        // tt[0..4] = 0,0,0,1
        assert_eq!(lut.truth(), Some(0b1000));
    }

    #[test]
    fn dont_care_expansion() {
        let n = gate_netlist(3, &["1-0 1"]);
        let m = tech_map(&n, 6).unwrap();
        let lut = m.cells.iter().find(|c| c.is_lut()).unwrap();
        // brute-force cube expansion: a=1 (bit0), c=0 (bit2), b free
        let mut expect = 0u64;
        for idx in 0..8u64 {
            let a = idx & 1 == 1;
            let c = idx & 4 == 4;
            if a && !c {
                expect |= 1 << idx;
            }
        }
        assert_eq!(lut.truth(), Some(expect));
        assert_eq!(expect, 0b0000_1010);
    }

    #[test]
    fn and8_two_level_tree() {
        let n = gate_netlist(8, &["11111111 1"]);
        let m = tech_map(&n, 6).unwrap();
        assert!(m.lut_count() <= 3, "got {} LUTs", m.lut_count());
        assert!(m.max_lut_arity() <= 6);
        for idx in 0..256usize {
            let a: Vec<bool> = (0..8).map(|b| (idx >> b) & 1 == 1).collect();
            assert_eq!(eval_comb(&m, &a), n.gates[0].eval(&a), "vector {idx}");
        }
    }

    #[test]
    fn constant_gates() {
        let n = parse_blif(".model c\n.outputs y z\n.names y\n.names z\n1\n.end\n").unwrap();
        let m = tech_map(&n, 4).unwrap();
        assert!(matches!(m.cells[0].kind, CellKind::Const0));
        assert!(matches!(m.cells[1].kind, CellKind::Const1));
    }

    #[test]
    fn rejects_bad_k() {
        let n = gate_netlist(2, &["11 1"]);
        assert_eq!(tech_map(&n, 1), Err(BlifError::UnsupportedLutSize(1)));
        assert_eq!(tech_map(&n, 7), Err(BlifError::UnsupportedLutSize(7)));
    }

    #[test]
    fn repeated_input_net() {
        let text = ".model r\n.inputs a b c d e f g\n.outputs y\n.names a b c d e f g a y\n1111111- 1\n0------0 1\n.end\n";
        let n = parse_blif(text).unwrap();
        let m = tech_map(&n, 3).unwrap();
        for idx in 0..128usize {
            let a: Vec<bool> = (0..7).map(|b| (idx >> b) & 1 == 1).collect();
            let mut full = a.clone();
            full.push(a[0]);
            assert_eq!(eval_comb(&m, &a), n.gates[0].eval(&full));
        }
    }

    fn random_cover(seed: u64, arity: usize) -> Vec<Cube> {
        let mut rng = crate::prng::Prng::new(seed);
        let rows = 1 + (rng.next_u64() % 5) as usize;
        let out = !rng.next_u64().is_multiple_of(4);
        (0..rows)
            .map(|_| Cube {
                lits: (0..arity)
                    .map(|_| match rng.next_u64() % 3 {
                        0 => Lit::Zero,
                        1 => Lit::One,
                        _ => Lit::DontCare,
                    })
                    .collect(),
                out,
            })
            .collect()
    }

    #[test]
    fn exhaustive_equivalence_up_to_arity_10() {
        for arity in 1..=10 {
            for seed in 0..6u64 {
                for k in [2, 4, 6] {
                    let ins: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
                    let gate = SopGate {
                        inputs: ins.clone(),
                        output: "y".into(),
                        cover: random_cover(seed * 31 + arity as u64 + 1, arity),
                    };
                    let n = Netlist::new("r".into(), ins, vec!["y".into()], vec![gate], vec![]).unwrap();
                    let m = tech_map(&n, k).unwrap();
                    assert!(m.max_lut_arity() <= k);
                    for idx in 0..(1usize << arity) {
                        let a: Vec<bool> = (0..arity).map(|b| (idx >> b) & 1 == 1).collect();
                        assert_eq!(
                            eval_comb(&m, &a),
                            n.gates[0].eval(&a),
                            "arity {arity} seed {seed} k {k} vector {idx}"
                        );
                    }
                }
            }
        }
    }
}
