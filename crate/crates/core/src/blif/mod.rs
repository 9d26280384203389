//! Structural BLIF front end.
//!
//! [`parse_blif`] reads the `.model/.inputs/.outputs/.names/.latch/.end`
//! subset used by the MCNC and ISCAS'89 benchmark suites into a [`Netlist`].
//! [`tech_map`] turns that netlist into a [`MappedNetlist`] of K-input LUTs,
//! flip-flops, pads and constants, and [`eval_netlist`] gives the cycle-based
//! reference semantics that the fault-injection engine shares.

mod mapped;
mod parse;
mod techmap;
mod write;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mapped::{Cell, CellId, CellKind, Edge, MappedNetlist};
pub use parse::parse_blif;
pub use techmap::{tech_map, MAX_LUT_K};
pub use write::write_blif;

use crate::sim::{CompiledNetlist, SimError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlifError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unsupported directive `{name}`")]
    UnsupportedDirective { line: usize, name: String },
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("net `{0}` is used but never driven")]
    UndrivenNet(String),
    #[error("LUT size {0} is not supported (must be in 2..={max})", max = MAX_LUT_K)]
    UnsupportedLutSize(usize),
}

/// One literal of a cover cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lit {
    Zero,
    One,
    DontCare,
}

impl Lit {
    pub fn from_char(c: char) -> Option<Lit> {
        match c {
            '0' => Some(Lit::Zero),
            '1' => Some(Lit::One),
            '-' => Some(Lit::DontCare),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Lit::Zero => '0',
            Lit::One => '1',
            Lit::DontCare => '-',
        }
    }

    #[inline]
    pub fn matches(self, v: bool) -> bool {
        match self {
            Lit::Zero => !v,
            Lit::One => v,
            Lit::DontCare => true,
        }
    }
}

/// A row of a `.names` cover.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub lits: Vec<Lit>,
    pub out: bool,
}

/// A single-output sum-of-products gate (one `.names` block).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SopGate {
    pub inputs: Vec<String>,
    pub output: String,
    pub cover: Vec<Cube>,
}

impl SopGate {
    /// Evaluates the cover. Rows with output `0` describe the OFF-set; an
    /// empty cover is constant 0.
    pub fn eval(&self, values: &[bool]) -> bool {
        debug_assert_eq!(values.len(), self.inputs.len());
        let Some(first) = self.cover.first() else {
            return false;
        };
        let hit = self
            .cover
            .iter()
            .any(|cube| cube.lits.iter().zip(values).all(|(l, &v)| l.matches(v)));
        if first.out {
            hit
        } else {
            !hit
        }
    }
}

/// BLIF latch initial value. 2 and 3 both mean "unknown"; simulation treats
/// unknown as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatchInit(pub u8);

impl LatchInit {
    pub const UNKNOWN: LatchInit = LatchInit(3);

    pub fn reset_value(self) -> bool {
        self.0 == 1
    }

    pub fn is_unknown(self) -> bool {
        self.0 >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Latch {
    pub input: String,
    pub output: String,
    pub init: LatchInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Driver {
    Input(usize),
    Gate(usize),
    Latch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sink {
    Gate { gate: usize, pin: usize },
    Latch(usize),
    Output(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetInfo {
    pub driver: Driver,
    pub sinks: Vec<Sink>,
}

/// A parsed, flat BLIF model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: Vec<SopGate>,
    pub latches: Vec<Latch>,
    pub nets: BTreeMap<String, NetInfo>,
}

impl Netlist {
    /// Assembles a netlist and checks the single-driver invariants.
    pub fn new(
        name: String,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<SopGate>,
        latches: Vec<Latch>,
    ) -> Result<Netlist, BlifError> {
        let mut nets: BTreeMap<String, NetInfo> = BTreeMap::new();
        let mut drive = |net: &str, driver: Driver| -> Result<(), BlifError> {
            if nets.contains_key(net) {
                return Err(BlifError::MultipleDrivers(net.to_string()));
            }
            nets.insert(
                net.to_string(),
                NetInfo {
                    driver,
                    sinks: Vec::new(),
                },
            );
            Ok(())
        };
        for (i, n) in inputs.iter().enumerate() {
            drive(n, Driver::Input(i))?;
        }
        for (i, g) in gates.iter().enumerate() {
            drive(&g.output, Driver::Gate(i))?;
        }
        for (i, l) in latches.iter().enumerate() {
            drive(&l.output, Driver::Latch(i))?;
        }

        let mut attach = |net: &str, sink: Sink| -> Result<(), BlifError> {
            match nets.get_mut(net) {
                Some(info) => {
                    info.sinks.push(sink);
                    Ok(())
                }
                None => Err(BlifError::UndrivenNet(net.to_string())),
            }
        };
        for (gi, g) in gates.iter().enumerate() {
            for (pin, n) in g.inputs.iter().enumerate() {
                attach(n, Sink::Gate { gate: gi, pin })?;
            }
        }
        for (li, l) in latches.iter().enumerate() {
            attach(&l.input, Sink::Latch(li))?;
        }
        for (oi, o) in outputs.iter().enumerate() {
            attach(o, Sink::Output(oi))?;
        }

        Ok(Netlist {
            name,
            inputs,
            outputs,
            gates,
            latches,
            nets,
        })
    }

    /// True if any latch init is unknown and was simulated as 0.
    pub fn has_unknown_init(&self) -> bool {
        self.latches.iter().any(|l| l.init.is_unknown())
    }
}

/// Cycle-based evaluation: per cycle the combinational logic settles, outputs
/// are sampled, then every flip-flop loads its data input. Flip-flops start
/// at their init value (unknown is 0).
pub fn eval_netlist(n: &MappedNetlist, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, SimError> {
    let compiled = CompiledNetlist::compile(n)?;
    Ok(compiled.run_scalar(inputs))
}
