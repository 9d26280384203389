//! Cycle-based, 64-lane bit-parallel simulator for mapped netlists.
//!
//! Every signal is a `u64` whose bit `l` is the value in lane `l`. The
//! golden reference runs with all lanes equal; the fault-injection engine
//! runs up to 64 single-fault circuits side by side by attaching an
//! [`Overlay`] that perturbs selected lanes.

use std::collections::VecDeque;

use thiserror::Error;

use crate::blif::{CellId, CellKind, MappedNetlist};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("combinational loop through cells {0:?}")]
    CombinationalLoop(Vec<CellId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Input,
    Output,
    Lut(u64),
    Ff,
    Const(u64),
}

#[derive(Debug, Clone)]
pub struct CompiledNetlist {
    ops: Vec<Op>,
    cell_inputs: Vec<Vec<usize>>,
    /// combinational cells in evaluation order
    order: Vec<usize>,
    ffs: Vec<usize>,
    ff_slot: Vec<usize>,
    ff_init: Vec<u64>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

/// Per-lane perturbations of one cell.
#[derive(Debug, Clone, Default)]
pub struct CellOverlay {
    pub tt_flips: Vec<(u8, u64)>,
    pub invert: u64,
    pub pins: Vec<PinOverlay>,
}

/// Lanes in `zero` read 0 on this pin; for each `(aggressor, lanes)` the
/// aggressor's value is OR-ed in on those lanes.
#[derive(Debug, Clone, Default)]
pub struct PinOverlay {
    pub pin: usize,
    pub zero: u64,
    pub ors: Vec<(CellId, u64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Overlay {
    slot: Vec<usize>,
    entries: Vec<CellOverlay>,
}

impl Overlay {
    pub fn new(cells: usize) -> Overlay {
        Overlay {
            slot: vec![usize::MAX; cells],
            entries: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn entry(&mut self, cell: CellId) -> &mut CellOverlay {
        let s = &mut self.slot[cell.0];
        if *s == usize::MAX {
            *s = self.entries.len();
            self.entries.push(CellOverlay::default());
        }
        &mut self.entries[*s]
    }

    fn pin(&mut self, cell: CellId, pin: usize) -> &mut PinOverlay {
        let e = self.entry(cell);
        if let Some(i) = e.pins.iter().position(|p| p.pin == pin) {
            return &mut e.pins[i];
        }
        e.pins.push(PinOverlay {
            pin,
            ..Default::default()
        });
        e.pins.last_mut().unwrap()
    }

    pub fn flip_truth_bit(&mut self, cell: CellId, index: u8, lanes: u64) {
        let e = self.entry(cell);
        match e.tt_flips.iter_mut().find(|(i, _)| *i == index) {
            Some((_, m)) => *m ^= lanes,
            None => e.tt_flips.push((index, lanes)),
        }
    }

    pub fn invert_output(&mut self, cell: CellId, lanes: u64) {
        self.entry(cell).invert ^= lanes;
    }

    pub fn break_pin(&mut self, cell: CellId, pin: usize, lanes: u64) {
        self.pin(cell, pin).zero |= lanes;
    }

    pub fn short_pin(&mut self, cell: CellId, pin: usize, aggressor: CellId, lanes: u64) {
        self.pin(cell, pin).ors.push((aggressor, lanes));
    }

    #[inline]
    fn get(&self, cell: usize) -> Option<&CellOverlay> {
        match self.slot.get(cell) {
            Some(&s) if s != usize::MAX => Some(&self.entries[s]),
            _ => None,
        }
    }
}

/// Simulator state: one word per cell output plus one per flip-flop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneState {
    values: Vec<u64>,
    ff_state: Vec<u64>,
}

impl LaneState {
    pub fn ff_state(&self) -> &[u64] {
        &self.ff_state
    }
}

impl CompiledNetlist {
    pub fn compile(n: &MappedNetlist) -> Result<CompiledNetlist, SimError> {
        let count = n.cells.len();
        let mut ops = Vec::with_capacity(count);
        let mut ffs = Vec::new();
        let mut ff_slot = vec![usize::MAX; count];
        let mut ff_init = Vec::new();
        for (i, c) in n.cells.iter().enumerate() {
            let op = match c.kind {
                CellKind::InputPad => Op::Input,
                CellKind::OutputPad => Op::Output,
                CellKind::Lut { truth } => Op::Lut(truth),
                CellKind::FlipFlop { init } => {
                    ff_slot[i] = ffs.len();
                    ffs.push(i);
                    ff_init.push(if init.reset_value() { !0 } else { 0 });
                    Op::Ff
                }
                CellKind::Const0 => Op::Const(0),
                CellKind::Const1 => Op::Const(!0),
            };
            ops.push(op);
        }
        let is_comb = |op: &Op| matches!(op, Op::Output | Op::Lut(_) | Op::Const(_));
        let cell_inputs: Vec<Vec<usize>> = n
            .cells
            .iter()
            .map(|c| c.inputs.iter().map(|i| i.0).collect())
            .collect();

        // Kahn's algorithm over combinational dependencies only.
        let mut indeg = vec![0usize; count];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (d, ins) in cell_inputs.iter().enumerate() {
            if !is_comb(&ops[d]) {
                continue;
            }
            for &s in ins {
                if is_comb(&ops[s]) {
                    indeg[d] += 1;
                    succ[s].push(d);
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..count).filter(|&i| is_comb(&ops[i]) && indeg[i] == 0).collect();
        let mut order = Vec::new();
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &d in &succ[c] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    queue.push_back(d);
                }
            }
        }
        let comb_total = ops.iter().filter(|o| is_comb(o)).count();
        if order.len() != comb_total {
            let stuck = (0..count)
                .filter(|&i| is_comb(&ops[i]) && indeg[i] > 0)
                .map(CellId)
                .collect();
            return Err(SimError::CombinationalLoop(stuck));
        }

        Ok(CompiledNetlist {
            ops,
            cell_inputs,
            order,
            ffs,
            ff_slot,
            ff_init,
            inputs: n.inputs.iter().map(|c| c.0).collect(),
            outputs: n.outputs.iter().map(|c| c.0).collect(),
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_ffs(&self) -> usize {
        self.ffs.len()
    }

    pub fn num_cells(&self) -> usize {
        self.ops.len()
    }

    /// Index of a flip-flop cell in [`LaneState::ff_state`].
    pub fn ff_slot(&self, cell: CellId) -> Option<usize> {
        match self.ff_slot[cell.0] {
            usize::MAX => None,
            s => Some(s),
        }
    }

    /// Reset state: every flip-flop at its init value (unknown is 0).
    pub fn reset(&self) -> LaneState {
        LaneState {
            values: vec![0; self.ops.len()],
            ff_state: self.ff_init.clone(),
        }
    }

    #[inline]
    fn read_pin(&self, values: &[u64], ov: Option<&CellOverlay>, cell: usize, pin: usize) -> u64 {
        let v = values[self.cell_inputs[cell][pin]];
        match ov {
            None => v,
            Some(o) => match o.pins.iter().find(|p| p.pin == pin) {
                None => v,
                Some(p) => {
                    let mut v = v & !p.zero;
                    for &(aggr, lanes) in &p.ors {
                        v |= values[aggr.0] & lanes;
                    }
                    v
                }
            },
        }
    }

    /// One clock cycle. Shorted aggressors are read from the current value
    /// array, so an aggressor later in evaluation order contributes its
    /// previous-cycle value.
    pub fn step(&self, st: &mut LaneState, inputs: &[u64], overlay: Option<&Overlay>, outputs: &mut [u64]) {
        debug_assert_eq!(inputs.len(), self.inputs.len());
        let cell_ov = |c: usize| overlay.and_then(|o| o.get(c));
        for (k, &c) in self.ffs.iter().enumerate() {
            let inv = cell_ov(c).map_or(0, |o| o.invert);
            st.values[c] = st.ff_state[k] ^ inv;
        }
        for (&c, &v) in self.inputs.iter().zip(inputs) {
            st.values[c] = v;
        }
        let mut words = [0u64; 64];
        for &c in &self.order {
            let ov = cell_ov(c);
            let v = match self.ops[c] {
                Op::Const(v) => v,
                Op::Output => self.read_pin(&st.values, ov, c, 0),
                Op::Lut(truth) => {
                    let k = self.cell_inputs[c].len();
                    let size = 1usize << k;
                    for (j, w) in words[..size].iter_mut().enumerate() {
                        *w = if (truth >> j) & 1 == 1 { !0 } else { 0 };
                    }
                    if let Some(o) = ov {
                        for &(idx, lanes) in &o.tt_flips {
                            if (idx as usize) < size {
                                words[idx as usize] ^= lanes;
                            }
                        }
                    }
                    let mut width = size;
                    for pin in 0..k {
                        let x = self.read_pin(&st.values, ov, c, pin);
                        width /= 2;
                        for j in 0..width {
                            words[j] = (x & words[2 * j + 1]) | (!x & words[2 * j]);
                        }
                    }
                    words[0]
                }
                Op::Input | Op::Ff => unreachable!(),
            };
            st.values[c] = v;
        }
        for (o, &c) in outputs.iter_mut().zip(&self.outputs) {
            *o = st.values[c];
        }
        for (k, &c) in self.ffs.iter().enumerate() {
            st.ff_state[k] = self.read_pin(&st.values, cell_ov(c), c, 0);
        }
    }

    /// Single-lane convenience wrapper from reset.
    pub fn run_scalar(&self, inputs: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let mut st = self.reset();
        let mut words = vec![0u64; self.inputs.len()];
        let mut out = vec![0u64; self.outputs.len()];
        inputs
            .iter()
            .map(|vec| {
                for (w, &b) in words.iter_mut().zip(vec) {
                    *w = if b { !0 } else { 0 };
                }
                self.step(&mut st, &words, None, &mut out);
                out.iter().map(|&w| w & 1 == 1).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blif::{eval_netlist, parse_blif, tech_map};

    fn mapped(text: &str) -> MappedNetlist {
        tech_map(&parse_blif(text).unwrap(), 6).unwrap()
    }

    #[test]
    fn buffer_trace() {
        let m = mapped(".model b\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n");
        let out = eval_netlist(&m, &[vec![false], vec![true], vec![true]]).unwrap();
        assert_eq!(out, vec![vec![false], vec![true], vec![true]]);
    }

    #[test]
    fn toggle_register() {
        let m = mapped(".model t\n.outputs q\n.latch d q re clk 0\n.names q d\n0 1\n.end\n");
        let out = eval_netlist(&m, &vec![vec![]; 4]).unwrap();
        let q: Vec<bool> = out.into_iter().map(|v| v[0]).collect();
        assert_eq!(q, vec![false, true, false, true]);
    }

    #[test]
    fn combinational_loop_detected() {
        let m = mapped(".model l\n.inputs a\n.outputs y\n.names a z y\n11 1\n.names y z\n1 1\n.end\n");
        match CompiledNetlist::compile(&m) {
            Err(SimError::CombinationalLoop(cells)) => {
                let names: Vec<&str> = cells.iter().map(|&c| m.cell(c).name.as_str()).collect();
                assert!(names.contains(&"y") && names.contains(&"z"), "{names:?}");
            }
            other => panic!("expected loop, got {other:?}"),
        }
    }

    #[test]
    fn overlay_lanes_are_independent() {
        let m = mapped(".model a\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n");
        let c = CompiledNetlist::compile(&m).unwrap();
        let lut = m.ids().find(|&i| m.cell(i).is_lut()).unwrap();
        let mut ov = Overlay::new(m.len());
        // lane 1: flip tt bit 0, lane 2: invert nothing but break pin 0
        ov.flip_truth_bit(lut, 0, 0b010);
        ov.break_pin(lut, 0, 0b100);
        let mut st = c.reset();
        let mut out = [0u64];
        c.step(&mut st, &[0, 0], Some(&ov), &mut out);
        assert_eq!(out[0] & 0b111, 0b010);
        c.step(&mut st, &[!0, !0], Some(&ov), &mut out);
        assert_eq!(out[0] & 0b111, 0b011);
    }
}
