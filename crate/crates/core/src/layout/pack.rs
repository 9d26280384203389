use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::LayoutError;
use crate::blif::{CellId, CellKind, MappedNetlist};
use crate::fabric::FabricModel;
use crate::graph::Classification;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedSlice {
    /// LUT in slot `i` is `luts[i]`.
    pub luts: Vec<CellId>,
    pub ffs: Vec<CellId>,
    pub critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRef {
    pub slice: usize,
    /// LUT slot for LUTs, FF slot for flip-flops.
    pub slot: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packing {
    pub slices: Vec<PackedSlice>,
    /// Per cell; `None` for pads and constants.
    pub cell_slot: Vec<Option<SlotRef>>,
}

impl Packing {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// Breadth-first order over the undirected cell adjacency, seeded from the
/// input pads, so connected cells end up close together.
fn connectivity_order(n: &MappedNetlist) -> Vec<CellId> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n.len()];
    for e in n.edges() {
        adj[e.src.0].push(e.dst.0);
        adj[e.dst.0].push(e.src.0);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut seen = vec![false; n.len()];
    let mut order = Vec::with_capacity(n.len());
    let seeds = n.inputs.iter().map(|c| c.0).chain(0..n.len());
    let mut queue = VecDeque::new();
    for s in seeds {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(CellId(v));
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// Greedy packing. LUTs are taken in connectivity order together with the
/// flip-flops they drive; leftover flip-flops join the slice of their driver
/// or first sink when it has room.
pub fn pack(n: &MappedNetlist, c: &Classification, dev: &FabricModel) -> Result<Packing, LayoutError> {
    let spec = dev.spec();
    let (lut_cap, ff_cap) = (spec.luts_per_slice as usize, spec.ffs_per_slice as usize);
    for cell in &n.cells {
        if cell.is_lut() && cell.inputs.len() > spec.lut_k as usize {
            return Err(LayoutError::LutTooWide {
                cell: cell.name.clone(),
                arity: cell.inputs.len(),
                k: spec.lut_k as usize,
            });
        }
    }
    let order = connectivity_order(n);
    let fanouts = n.fanouts();
    let mut slices: Vec<PackedSlice> = Vec::new();
    let mut cell_slot: Vec<Option<SlotRef>> = vec![None; n.len()];

    let add = |slices: &mut Vec<PackedSlice>, cell_slot: &mut Vec<Option<SlotRef>>, s: usize, id: CellId| {
        let sl = &mut slices[s];
        let slot = if n.cell(id).is_lut() {
            sl.luts.push(id);
            sl.luts.len() - 1
        } else {
            sl.ffs.push(id);
            sl.ffs.len() - 1
        };
        sl.critical |= c.is_critical(id);
        cell_slot[id.0] = Some(SlotRef {
            slice: s,
            slot: slot as u32,
        });
    };
    let new_slice = |slices: &mut Vec<PackedSlice>| {
        slices.push(PackedSlice {
            luts: Vec::new(),
            ffs: Vec::new(),
            critical: false,
        });
        slices.len() - 1
    };

    for &id in &order {
        if !n.cell(id).is_lut() {
            continue;
        }
        let paired: Vec<CellId> = fanouts[id.0]
            .iter()
            .map(|&(dst, _)| dst)
            .filter(|&d| n.cell(d).is_ff() && cell_slot[d.0].is_none())
            .take(ff_cap)
            .collect();
        let fits = slices
            .last()
            .is_some_and(|s| s.luts.len() < lut_cap && s.ffs.len() + paired.len() <= ff_cap);
        let s = if fits { slices.len() - 1 } else { new_slice(&mut slices) };
        add(&mut slices, &mut cell_slot, s, id);
        for f in paired {
            if cell_slot[f.0].is_none() {
                add(&mut slices, &mut cell_slot, s, f);
            }
        }
    }

    for &id in &order {
        if !matches!(n.cell(id).kind, CellKind::FlipFlop { .. }) || cell_slot[id.0].is_some() {
            continue;
        }
        let neighbours = n.cell(id).inputs.iter().copied().chain(fanouts[id.0].iter().map(|&(d, _)| d));
        let mut target = None;
        for nb in neighbours {
            if let Some(r) = cell_slot[nb.0] {
                if slices[r.slice].ffs.len() < ff_cap {
                    target = Some(r.slice);
                    break;
                }
            }
        }
        let s = match target {
            Some(s) => s,
            None => match slices.last() {
                Some(l) if l.ffs.len() < ff_cap => slices.len() - 1,
                _ => new_slice(&mut slices),
            },
        };
        add(&mut slices, &mut cell_slot, s, id);
    }

    let available = dev.spec().clb_columns as usize * dev.spec().rows as usize * dev.spec().slices_per_tile as usize;
    if slices.len() > available {
        return Err(LayoutError::CapacityExceeded {
            what: "slices",
            needed: slices.len(),
            available,
        });
    }
    Ok(Packing { slices, cell_slot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blif::{parse_blif, tech_map};
    use crate::fabric::{make_device, DeviceSpec};
    use crate::graph::{build_graph, classify};

    fn packed(text: &str) -> (MappedNetlist, Packing) {
        let m = tech_map(&parse_blif(text).unwrap(), 6).unwrap();
        let c = classify(&build_graph(&m));
        let dev = make_device(DeviceSpec::default()).unwrap();
        let p = pack(&m, &c, &dev).unwrap();
        (m, p)
    }

    #[test]
    fn lut_with_its_ff() {
        let (_, p) = packed(".model t\n.inputs a\n.outputs q\n.latch d q 0\n.names a q d\n10 1\n.end\n");
        assert_eq!(p.len(), 1);
        assert_eq!(p.slices[0].luts.len(), 1);
        assert_eq!(p.slices[0].ffs.len(), 1);
        assert!(p.slices[0].critical);
    }

    #[test]
    fn nine_luts_three_slices() {
        let mut text = String::from(".model n\n.inputs a b\n.outputs");
        for i in 0..9 {
            text.push_str(&format!(" y{i}"));
        }
        text.push('\n');
        for i in 0..9 {
            text.push_str(&format!(".names a b y{i}\n{}{} 1\n", i % 2, (i / 2) % 2));
        }
        text.push_str(".end\n");
        let (m, p) = packed(&text);
        assert_eq!(m.lut_count(), 9);
        assert_eq!(p.len(), 3);
        assert!(p.slices.iter().all(|s| !s.critical));
    }

    #[test]
    fn every_cell_once() {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/s27.blif")).unwrap();
        let (m, p) = packed(&text);
        let mut count = 0;
        for (i, s) in p.slices.iter().enumerate() {
            assert!(s.luts.len() <= 4 && s.ffs.len() <= 8);
            for (slot, &l) in s.luts.iter().enumerate() {
                assert_eq!(p.cell_slot[l.0], Some(SlotRef { slice: i, slot: slot as u32 }));
                count += 1;
            }
            count += s.ffs.len();
        }
        assert_eq!(count, m.lut_count() + m.ff_count());
        let lower = m.lut_count().div_ceil(4).max(m.ff_count().div_ceil(8));
        assert!(p.len() >= lower);
    }
}
