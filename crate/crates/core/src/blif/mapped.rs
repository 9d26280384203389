use serde::{Deserialize, Serialize};

use super::LatchInit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub usize);

impl CellId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellKind {
    InputPad,
    OutputPad,
    /// Truth table bit `i` is the output for the input assignment whose bit
    /// `j` is the value of input pin `j` (LSB-first).
    Lut { truth: u64 },
    FlipFlop { init: LatchInit },
    Const0,
    Const1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub kind: CellKind,
    /// Driver of each input pin. Flip-flops have exactly one (data); the
    /// clock is implicit and global.
    pub inputs: Vec<CellId>,
}

impl Cell {
    pub fn is_lut(&self) -> bool {
        matches!(self.kind, CellKind::Lut { .. })
    }

    pub fn is_ff(&self) -> bool {
        matches!(self.kind, CellKind::FlipFlop { .. })
    }

    pub fn is_pad(&self) -> bool {
        matches!(self.kind, CellKind::InputPad | CellKind::OutputPad)
    }

    pub fn is_const(&self) -> bool {
        matches!(self.kind, CellKind::Const0 | CellKind::Const1)
    }

    pub fn truth(&self) -> Option<u64> {
        match self.kind {
            CellKind::Lut { truth } => Some(truth),
            _ => None,
        }
    }
}

/// A fanout branch: `src` drives pin `pin` of `dst`. Every cell has a single
/// output, so the source pin is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: CellId,
    pub dst: CellId,
    pub pin: usize,
}

/// Technology-mapped netlist. Each cell's output is one net, so nets are
/// identified by their driving cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappedNetlist {
    pub name: String,
    pub cells: Vec<Cell>,
    /// Input pads in `.inputs` order.
    pub inputs: Vec<CellId>,
    /// Output pads in `.outputs` order.
    pub outputs: Vec<CellId>,
}

impl MappedNetlist {
    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.0]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len()).map(CellId)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.cells.iter().enumerate().flat_map(|(d, c)| {
            c.inputs.iter().enumerate().map(move |(pin, &src)| Edge {
                src,
                dst: CellId(d),
                pin,
            })
        })
    }

    /// Fanout lists indexed by driver: `(sink, pin)` pairs.
    pub fn fanouts(&self) -> Vec<Vec<(CellId, usize)>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for e in self.edges() {
            out[e.src.0].push((e.dst, e.pin));
        }
        out
    }

    pub fn lut_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_lut()).count()
    }

    pub fn ff_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_ff()).count()
    }

    pub fn max_lut_arity(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.is_lut())
            .map(|c| c.inputs.len())
            .max()
            .unwrap_or(0)
    }
}
