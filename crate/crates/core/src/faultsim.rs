//! Single-bit-upset injection campaigns.
//!
//! Each configuration bit is decoded into the functional perturbation it
//! causes on the placed design, up to 64 such faults are simulated side by
//! side, and every bit gets a verdict:
//!
//! * phase 1 runs the faulty circuit from reset and compares outputs with the
//!   golden run; any mismatch makes the bit essential;
//! * phase 2 repairs the bit, keeps the corrupted state and replays the same
//!   stimulus; a mismatch after the settle window makes the bit critical.
//!
//! The settle window is the largest number of flip-flops on any path through
//! cells that are not on a cycle, which is how long a state error outside the
//! cyclic part can survive before being flushed.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitclass::{BitClassification, BitMask};
use crate::blif::{CellId, MappedNetlist};
use crate::design::PlacedDesign;
use crate::fabric::{BitAddr, BitRole, FabricModel, ResourceInstance, Tile};
use crate::graph::{build_graph, find_cyclic_set};
use crate::prng::{Prng, DEFAULT_SEED};
use crate::sim::{CompiledNetlist, LaneState, Overlay, SimError};

pub const DEFAULT_VECTORS: u64 = 10_000;
const LANES: usize = 64;

/// Functional meaning of one upset bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultEffect {
    LutBitFlip { cell: CellId, index: u8 },
    FfPolarityFlip { cell: CellId },
    /// The PIP at `node` of the net driven by `net` opens; every sink below
    /// it reads 0.
    RouteBreak { net: CellId, node: u32 },
    /// The victim net picks up the aggressor as a wired OR.
    RouteShort { victim: CellId, aggressor: CellId },
    NoFunctionalEffect,
}

impl FaultEffect {
    pub fn is_functional(&self) -> bool {
        !matches!(self, FaultEffect::NoFunctionalEffect)
    }
}

/// Bit decoder bound to one design.
pub struct FaultContext<'a> {
    design: &'a PlacedDesign,
    dev: &'a FabricModel,
    slice_at: HashMap<ResourceInstance, usize>,
    /// PIP resource to (net index, node index).
    pip_owner: HashMap<ResourceInstance, (usize, u32)>,
    net_of: HashMap<CellId, usize>,
}

impl<'a> FaultContext<'a> {
    pub fn new(design: &'a PlacedDesign, dev: &'a FabricModel) -> FaultContext<'a> {
        let slice_at = design
            .placement
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, i))
            .collect();
        let mut pip_owner = HashMap::new();
        let mut net_of = HashMap::new();
        for (i, net) in design.routing.nets.iter().enumerate() {
            net_of.insert(net.driver, i);
            for (k, nd) in net.nodes.iter().enumerate() {
                pip_owner.insert(nd.resource(), (i, k as u32));
            }
        }
        FaultContext {
            design,
            dev,
            slice_at,
            pip_owner,
            net_of,
        }
    }

    pub fn decode(&self, bit: &BitAddr) -> FaultEffect {
        match self.dev.decode_bit(bit) {
            Some(BitRole::Slice { slice, local }) => self.decode_slice(&slice, local),
            Some(BitRole::Pip(pip)) => self.decode_pip(&pip),
            None => FaultEffect::NoFunctionalEffect,
        }
    }

    fn decode_slice(&self, site: &ResourceInstance, local: u32) -> FaultEffect {
        let Some(&si) = self.slice_at.get(site) else {
            return FaultEffect::NoFunctionalEffect;
        };
        let slice = &self.design.packing.slices[si];
        let n = &self.design.netlist;
        let per_lut = self.dev.truth_bits_per_lut();
        let luts_end = self.dev.spec().luts_per_slice * per_lut;
        if local < luts_end {
            let (l, t) = ((local / per_lut) as usize, local % per_lut);
            if let Some(&cell) = slice.luts.get(l) {
                if t < 1 << n.cell(cell).inputs.len() {
                    return FaultEffect::LutBitFlip { cell, index: t as u8 };
                }
            }
            return FaultEffect::NoFunctionalEffect;
        }
        let f = (local - luts_end) as usize;
        match slice.ffs.get(f) {
            Some(&cell) => FaultEffect::FfPolarityFlip { cell },
            None => FaultEffect::NoFunctionalEffect,
        }
    }

    fn decode_pip(&self, pip: &ResourceInstance) -> FaultEffect {
        if let Some(&(net, node)) = self.pip_owner.get(pip) {
            return FaultEffect::RouteBreak {
                net: self.design.routing.nets[net].driver,
                node,
            };
        }
        // An unset PIP only matters when it would join two different nets
        // that occupy its neighbours in the same switch box.
        let budget = self.dev.pip_budget();
        if pip.index == 0 || pip.index + 1 >= budget {
            return FaultEffect::NoFunctionalEffect;
        }
        let at = |index| self.pip_owner.get(&ResourceInstance::pip(pip.tile.col, pip.tile.row, index));
        match (at(pip.index - 1), at(pip.index + 1)) {
            (Some(&(v, _)), Some(&(a, _))) if v != a => {
                let nets = &self.design.routing.nets;
                FaultEffect::RouteShort {
                    victim: nets[v].driver,
                    aggressor: nets[a].driver,
                }
            }
            _ => FaultEffect::NoFunctionalEffect,
        }
    }

    /// Adds `effect` to `ov` on the given lanes.
    pub fn apply(&self, effect: &FaultEffect, ov: &mut Overlay, lanes: u64) {
        match *effect {
            FaultEffect::LutBitFlip { cell, index } => ov.flip_truth_bit(cell, index, lanes),
            FaultEffect::FfPolarityFlip { cell } => ov.invert_output(cell, lanes),
            FaultEffect::RouteBreak { net, node } => {
                let net = &self.design.routing.nets[self.net_of[&net]];
                for s in &net.sinks {
                    if net.is_ancestor(node, s.node) {
                        ov.break_pin(s.cell, s.pin, lanes);
                    }
                }
            }
            FaultEffect::RouteShort { victim, aggressor } => {
                let net = &self.design.routing.nets[self.net_of[&victim]];
                for s in &net.sinks {
                    ov.short_pin(s.cell, s.pin, aggressor, lanes);
                }
            }
            FaultEffect::NoFunctionalEffect => {}
        }
    }
}

/// Decodes one bit without keeping the lookup tables around.
pub fn decode_fault(design: &PlacedDesign, dev: &FabricModel, bit: &BitAddr) -> FaultEffect {
    FaultContext::new(design, dev).decode(bit)
}

/// Largest number of flip-flops on a path through non-cyclic cells.
pub fn settle_window(n: &MappedNetlist) -> u64 {
    let g = build_graph(n);
    let cyclic = find_cyclic_set(&g);
    let nodes = g.node_count();
    let mut indeg = vec![0usize; nodes];
    for v in (0..nodes).filter(|&v| !cyclic[v]) {
        indeg[v] = g.predecessors(CellId(v)).iter().filter(|&&u| !cyclic[u]).count();
    }
    let mut depth = vec![0u64; nodes];
    let mut queue: VecDeque<usize> = (0..nodes).filter(|&v| !cyclic[v] && indeg[v] == 0).collect();
    let mut best = 0;
    while let Some(v) = queue.pop_front() {
        if n.cells[v].is_ff() {
            depth[v] += 1;
        }
        best = best.max(depth[v]);
        for &w in g.successors(CellId(v)) {
            if cyclic[w] {
                continue;
            }
            depth[w] = depth[w].max(depth[v]);
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Test vectors per phase.
    pub vectors: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the default pool, 1 runs on the calling thread.
    pub workers: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            vectors: DEFAULT_VECTORS,
            seed: DEFAULT_SEED,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Benign,
    Essential,
    Critical,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Benign => "benign",
            Verdict::Essential => "essential",
            Verdict::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitVerdict {
    pub bit: BitAddr,
    pub effect: FaultEffect,
    pub verdict: Verdict,
    /// First phase-1 cycle whose outputs differed from the golden run.
    pub first_mismatch: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub vectors: u64,
    pub seed: u64,
    pub settle_window: u64,
    pub bits: Vec<BitVerdict>,
}

impl CampaignResult {
    pub fn mask_of(&self, at_least: Verdict) -> BitMask {
        self.bits
            .iter()
            .filter(|b| b.verdict >= at_least)
            .map(|b| b.bit)
            .collect()
    }

    /// Bits observed to be essential (critical ones included).
    pub fn fi_essential(&self) -> BitMask {
        self.mask_of(Verdict::Essential)
    }

    pub fn fi_critical(&self) -> BitMask {
        self.mask_of(Verdict::Critical)
    }

    pub fn simulated(&self) -> usize {
        self.bits.iter().filter(|b| b.effect.is_functional()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bit,verdict,first_mismatch_cycle\n");
        for b in &self.bits {
            let first = b.first_mismatch.map(|c| c.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", b.bit, b.verdict.as_str(), first).unwrap();
        }
        out
    }

    /// Tested bits per decoded effect kind.
    pub fn effect_counts(&self) -> EffectCounts {
        let mut c = EffectCounts::default();
        for b in &self.bits {
            match b.effect {
                FaultEffect::LutBitFlip { .. } => c.lut_bit_flip += 1,
                FaultEffect::FfPolarityFlip { .. } => c.ff_polarity_flip += 1,
                FaultEffect::RouteBreak { .. } => c.route_break += 1,
                FaultEffect::RouteShort { .. } => c.route_short += 1,
                FaultEffect::NoFunctionalEffect => c.no_effect += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectCounts {
    pub lut_bit_flip: usize,
    pub ff_polarity_flip: usize,
    pub route_break: usize,
    pub route_short: usize,
    pub no_effect: usize,
}

/// Static-versus-observed agreement. Soundness means both `*_missed` counts
/// are zero: no observed bit lies outside its static set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub static_essential: usize,
    pub static_critical: usize,
    pub fi_essential: usize,
    pub fi_critical: usize,
    pub essential_missed: usize,
    pub critical_missed: usize,
}

impl Comparison {
    pub fn is_sound(&self) -> bool {
        self.essential_missed == 0 && self.critical_missed == 0
    }
}

/// Compares observed verdicts with the static classification, restricted to
/// the bits the campaign tested.
pub fn compare_to_static(result: &CampaignResult, stat: &BitClassification) -> Comparison {
    let in_static = |m: &BitMask| result.bits.iter().filter(|b| m.contains(&b.bit)).count();
    let fe = result.fi_essential();
    let fc = result.fi_critical();
    Comparison {
        static_essential: in_static(&stat.essential),
        static_critical: in_static(&stat.critical),
        fi_essential: fe.len(),
        fi_critical: fc.len(),
        essential_missed: fe.iter().filter(|b| !stat.essential.contains(b)).count(),
        critical_missed: fc.iter().filter(|b| !stat.critical.contains(b)).count(),
    }
}

/// Golden stimulus and responses shared by every batch.
struct Golden {
    sim: CompiledNetlist,
    ni: usize,
    no: usize,
    inputs: Vec<u64>,
    phase1: Vec<u64>,
    phase2: Vec<u64>,
    end_state: LaneState,
}

impl Golden {
    fn new(n: &MappedNetlist, vectors: u64, seed: u64) -> Result<Golden, SimError> {
        let sim = CompiledNetlist::compile(n)?;
        let (ni, no) = (sim.num_inputs(), sim.num_outputs());
        let t = vectors as usize;
        let mut rng = Prng::new(seed);
        let mut vec = Vec::with_capacity(ni);
        let mut inputs = Vec::with_capacity(t * ni);
        for _ in 0..t {
            rng.input_vector(ni, &mut vec);
            inputs.extend(vec.iter().map(|&b| if b { !0u64 } else { 0 }));
        }
        let mut st = sim.reset();
        let mut phase1 = vec![0u64; t * no];
        for k in 0..t {
            sim.step(&mut st, &inputs[k * ni..(k + 1) * ni], None, &mut phase1[k * no..(k + 1) * no]);
        }
        let end_state = st.clone();
        let mut phase2 = vec![0u64; t * no];
        for k in 0..t {
            sim.step(&mut st, &inputs[k * ni..(k + 1) * ni], None, &mut phase2[k * no..(k + 1) * no]);
        }
        Ok(Golden {
            sim,
            ni,
            no,
            inputs,
            phase1,
            phase2,
            end_state,
        })
    }

    fn vectors(&self) -> usize {
        self.phase1.len() / self.no.max(1)
    }

    fn input(&self, k: usize) -> &[u64] {
        &self.inputs[k * self.ni..(k + 1) * self.ni]
    }

    fn diff(&self, got: &[u64], golden: &[u64], k: usize) -> u64 {
        got.iter()
            .zip(&golden[k * self.no..(k + 1) * self.no])
            .fold(0, |acc, (a, b)| acc | (a ^ b))
    }

    /// Simulates one batch of at most 64 faults; returns per-lane verdicts.
    fn run_batch(&self, ov: &Overlay, lanes: usize, window: u64, t: usize) -> Vec<(Verdict, Option<u64>)> {
        let active = if lanes == LANES { !0 } else { (1u64 << lanes) - 1 };
        let mut out = vec![0u64; self.no];
        let mut st = self.sim.reset();
        let mut first = [None; LANES];
        let mut ess = 0u64;
        for k in 0..t {
            self.sim.step(&mut st, self.input(k), Some(ov), &mut out);
            let new = self.diff(&out, &self.phase1, k) & active & !ess;
            if new != 0 {
                for (l, f) in first.iter_mut().enumerate() {
                    if new >> l & 1 == 1 {
                        *f = Some(k as u64);
                    }
                }
                ess |= new;
            }
        }
        let mut crit = 0u64;
        if ess != 0 {
            for k in 0..t {
                self.sim.step(&mut st, self.input(k), None, &mut out);
                if k as u64 >= window {
                    crit |= self.diff(&out, &self.phase2, k) & ess;
                    if crit == ess {
                        break;
                    }
                }
            }
        }
        (0..lanes)
            .map(|l| {
                let v = if crit >> l & 1 == 1 {
                    Verdict::Critical
                } else if ess >> l & 1 == 1 {
                    Verdict::Essential
                } else {
                    Verdict::Benign
                };
                (v, first[l])
            })
            .collect()
    }
}

fn map_batches<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers != 1 {
            let run = || items.par_iter().map(&f).collect();
            if workers == 0 {
                return run();
            }
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(run);
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    items.iter().map(f).collect()
}

/// Runs a campaign over `bits` (sorted and deduplicated first). Bits with no
/// functional effect are benign without simulation.
pub fn run_campaign(
    design: &PlacedDesign,
    dev: &FabricModel,
    bits: &[BitAddr],
    cfg: &CampaignConfig,
) -> Result<CampaignResult, SimError> {
    let golden = Golden::new(&design.netlist, cfg.vectors, cfg.seed)?;
    let window = settle_window(&design.netlist);
    let ctx = FaultContext::new(design, dev);
    let mut bits = bits.to_vec();
    bits.sort();
    bits.dedup();
    let effects: Vec<FaultEffect> = bits.iter().map(|b| ctx.decode(b)).collect();
    let functional: Vec<usize> = (0..bits.len()).filter(|&i| effects[i].is_functional()).collect();
    let batches: Vec<&[usize]> = functional.chunks(LANES).collect();
    let t = golden.vectors();
    let cells = design.netlist.len();
    let verdicts = map_batches(&batches, cfg.workers, |batch| {
        let mut ov = Overlay::new(cells);
        for (lane, &i) in batch.iter().enumerate() {
            ctx.apply(&effects[i], &mut ov, 1 << lane);
        }
        golden.run_batch(&ov, batch.len(), window, t)
    });

    let mut out: Vec<BitVerdict> = bits
        .iter()
        .zip(&effects)
        .map(|(&bit, &effect)| BitVerdict {
            bit,
            effect,
            verdict: Verdict::Benign,
            first_mismatch: None,
        })
        .collect();
    for (batch, vs) in batches.iter().zip(verdicts) {
        for (&i, (v, first)) in batch.iter().zip(vs) {
            out[i].verdict = v;
            out[i].first_mismatch = first;
        }
    }
    Ok(CampaignResult {
        vectors: cfg.vectors,
        seed: cfg.seed,
        settle_window: window,
        bits: out,
    })
}

/// Runs the golden circuit against itself through the fault path with an
/// empty overlay and counts output mismatches; anything but 0 is a
/// simulator bug.
pub fn zero_fault_control(n: &MappedNetlist, vectors: u64, seed: u64) -> Result<u64, SimError> {
    let golden = Golden::new(n, vectors, seed)?;
    let t = golden.vectors();
    let ov = Overlay::new(n.len());
    let mut st = golden.sim.reset();
    let mut out = vec![0u64; golden.no];
    let mut bad = 0;
    for k in 0..t {
        golden.sim.step(&mut st, golden.input(k), Some(&ov), &mut out);
        bad += (golden.diff(&out, &golden.phase1, k) != 0) as u64;
    }
    for k in 0..t {
        golden.sim.step(&mut st, golden.input(k), None, &mut out);
        bad += (golden.diff(&out, &golden.phase2, k) != 0) as u64;
    }
    debug_assert_eq!(st.ff_state().len(), golden.end_state.ff_state().len());
    Ok(bad)
}

/// Which bits a campaign should cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitSelection {
    Essential,
    Critical,
    /// Every configuration bit of one column/region block.
    Block { column: u32, region: u32 },
    All,
}

pub fn select_bits(sel: BitSelection, dev: &FabricModel, stat: &BitClassification) -> Vec<BitAddr> {
    let frame_bits = |f| {
        (0..dev.spec().bits_per_frame)
            .filter(|&o| !dev.is_reserved_offset(o))
            .map(move |offset| BitAddr { frame: f, offset })
    };
    match sel {
        BitSelection::Essential => stat.essential.iter().collect(),
        BitSelection::Critical => stat.critical.iter().collect(),
        BitSelection::Block { column, region } => dev.block_frames(column, region).flat_map(frame_bits).collect(),
        BitSelection::All => dev.all_frames().flat_map(frame_bits).collect(),
    }
}

/// Tiles whose resources a set of bits touches; handy for reports.
pub fn touched_tiles(dev: &FabricModel, bits: &[BitAddr]) -> Vec<Tile> {
    let mut t: Vec<Tile> = bits
        .iter()
        .filter_map(|b| match dev.decode_bit(b)? {
            BitRole::Slice { slice, .. } => Some(slice.tile),
            BitRole::Pip(p) => Some(p.tile),
        })
        .collect();
    t.sort();
    t.dedup();
    t
}
