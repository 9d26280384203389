use serde::{Deserialize, Serialize};

use super::{device_sites, LayoutError, Packing, RegionMask};
use crate::blif::{CellId, CellKind, MappedNetlist};
use crate::fabric::{FabricModel, ResourceInstance, Tile};
use crate::prng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadSite {
    pub cell: CellId,
    pub site: ResourceInstance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    /// Site of packed slice `i`.
    pub sites: Vec<ResourceInstance>,
    /// Sorted by cell.
    pub pads: Vec<PadSite>,
}

impl Placement {
    pub fn pad_site(&self, cell: CellId) -> Option<&ResourceInstance> {
        self.pads
            .binary_search_by_key(&cell, |p| p.cell)
            .ok()
            .map(|i| &self.pads[i].site)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceOptions {
    pub seed: u64,
    /// Weight of one occupied frame in the cost, in wirelength units.
    pub lambda: i64,
    pub moves_per_slice: usize,
    pub greedy_sweeps: usize,
}

impl Default for PlaceOptions {
    fn default() -> Self {
        PlaceOptions {
            seed: crate::prng::DEFAULT_SEED,
            lambda: 8,
            moves_per_slice: 200,
            greedy_sweeps: 20,
        }
    }
}

/// Pads fill the left I/O column from row 0, then the right one; inputs
/// first, then outputs.
pub fn place_pads(n: &MappedNetlist, dev: &FabricModel) -> Result<Vec<PadSite>, LayoutError> {
    let per_tile = dev.spec().pads_per_iob_tile;
    let per_column = dev.spec().rows * per_tile;
    let available = 2 * per_column as usize;
    let pads: Vec<CellId> = n.inputs.iter().chain(&n.outputs).copied().collect();
    if pads.len() > available {
        return Err(LayoutError::CapacityExceeded {
            what: "pads",
            needed: pads.len(),
            available,
        });
    }
    let mut out: Vec<PadSite> = pads
        .iter()
        .enumerate()
        .map(|(k, &cell)| {
            let k = k as u32;
            let (col, k) = if k < per_column {
                (0, k)
            } else {
                (dev.spec().clb_columns + 1, k - per_column)
            };
            PadSite {
                cell,
                site: ResourceInstance::iob(col, k / per_tile, k % per_tile),
            }
        })
        .collect();
    out.sort_by_key(|p| p.cell);
    Ok(out)
}

struct Net {
    slices: Vec<usize>,
    fixed: Vec<Tile>,
}

struct Annealer<'a> {
    nets: Vec<Net>,
    slice_nets: Vec<Vec<usize>>,
    net_cost: Vec<i64>,
    sites: &'a [ResourceInstance],
    site_block: Vec<usize>,
    block_count: Vec<u32>,
    site_of: Vec<usize>,
    occupant: Vec<Option<usize>>,
    block_weight: i64,
    scratch: Vec<usize>,
}

impl Annealer<'_> {
    fn hpwl(&self, net: &Net) -> i64 {
        let tiles = net
            .slices
            .iter()
            .map(|&s| self.sites[self.site_of[s]].tile)
            .chain(net.fixed.iter().copied());
        let (mut c0, mut c1, mut r0, mut r1) = (u32::MAX, 0, u32::MAX, 0);
        for t in tiles {
            c0 = c0.min(t.col);
            c1 = c1.max(t.col);
            r0 = r0.min(t.row);
            r1 = r1.max(t.row);
        }
        (c1 - c0 + r1 - r0) as i64
    }

    fn total_cost(&self) -> i64 {
        self.net_cost.iter().sum::<i64>() + self.block_weight * self.block_count.iter().filter(|&&c| c > 0).count() as i64
    }

    fn swap_sites(&mut self, sa: usize, sb: usize) {
        let (a, b) = (self.occupant[sa], self.occupant[sb]);
        self.occupant[sa] = b;
        self.occupant[sb] = a;
        if let Some(a) = a {
            self.site_of[a] = sb;
        }
        if let Some(b) = b {
            self.site_of[b] = sa;
        }
        let (ba, bb) = (self.site_block[sa], self.site_block[sb]);
        if ba != bb {
            let (a_moves, b_moves) = (a.is_some() as u32, b.is_some() as u32);
            self.block_count[ba] = self.block_count[ba] - a_moves + b_moves;
            self.block_count[bb] = self.block_count[bb] - b_moves + a_moves;
        }
    }

    fn occupied_blocks(&self, ba: usize, bb: usize) -> i64 {
        if ba == bb {
            (self.block_count[ba] > 0) as i64
        } else {
            (self.block_count[ba] > 0) as i64 + (self.block_count[bb] > 0) as i64
        }
    }

    /// Performs the swap of `slice` with whatever is at `target` and returns
    /// the cost delta. Net costs are left stale until [`Self::commit`].
    fn try_move(&mut self, slice: usize, target: usize) -> i64 {
        let sa = self.site_of[slice];
        let (ba, bb) = (self.site_block[sa], self.site_block[target]);
        let before_blocks = self.occupied_blocks(ba, bb);
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.slice_nets[slice]);
        if let Some(b) = self.occupant[target] {
            self.scratch.extend_from_slice(&self.slice_nets[b]);
            self.scratch.sort_unstable();
            self.scratch.dedup();
        }
        self.swap_sites(sa, target);
        let after_blocks = self.occupied_blocks(ba, bb);
        let mut delta = self.block_weight * (after_blocks - before_blocks);
        for &n in &self.scratch {
            delta += self.hpwl(&self.nets[n]) - self.net_cost[n];
        }
        delta
    }

    fn commit(&mut self) {
        for i in 0..self.scratch.len() {
            let n = self.scratch[i];
            self.net_cost[n] = self.hpwl(&self.nets[n]);
        }
    }

    fn undo(&mut self, slice: usize, from: usize) {
        let now = self.site_of[slice];
        self.swap_sites(now, from);
    }
}

/// Scanline fill in connectivity order followed by simulated annealing over
/// pairwise swaps (empty sites included) and a greedy descent tail. The cost
/// is half-perimeter wirelength plus `lambda` per frame of every occupied
/// `(column, region)` block.
pub fn place(
    n: &MappedNetlist,
    packing: &Packing,
    dev: &FabricModel,
    mask: Option<&RegionMask>,
    pads: &[PadSite],
    opts: &PlaceOptions,
) -> Result<Placement, LayoutError> {
    let sites = match mask {
        Some(m) => m.sites(dev),
        None => device_sites(dev),
    };
    let count = packing.len();
    if count > sites.len() {
        return Err(LayoutError::CapacityExceeded {
            what: "slice sites",
            needed: count,
            available: sites.len(),
        });
    }
    let pad_tile = |c: CellId| pads.binary_search_by_key(&c, |p| p.cell).ok().map(|i| pads[i].site.tile);

    let mut nets = Vec::new();
    let mut slice_nets = vec![Vec::new(); count];
    for (driver, fo) in n.fanouts().into_iter().enumerate() {
        if fo.is_empty() || matches!(n.cells[driver].kind, CellKind::Const0 | CellKind::Const1) {
            continue;
        }
        let mut net = Net {
            slices: Vec::new(),
            fixed: Vec::new(),
        };
        for c in std::iter::once(CellId(driver)).chain(fo.iter().map(|&(d, _)| d)) {
            if let Some(s) = packing.cell_slot[c.0] {
                net.slices.push(s.slice);
            } else if let Some(t) = pad_tile(c) {
                net.fixed.push(t);
            }
        }
        net.slices.sort_unstable();
        net.slices.dedup();
        net.fixed.sort_unstable();
        net.fixed.dedup();
        if net.slices.is_empty() || net.slices.len() + net.fixed.len() < 2 {
            continue;
        }
        for &s in &net.slices {
            slice_nets[s].push(nets.len());
        }
        nets.push(net);
    }

    let regions = dev.regions() as usize;
    let site_block: Vec<usize> = sites
        .iter()
        .map(|s| s.tile.col as usize * regions + dev.region_of_row(s.tile.row) as usize)
        .collect();
    let mut a = Annealer {
        net_cost: vec![0; nets.len()],
        nets,
        slice_nets,
        sites: &sites,
        block_count: vec![0; dev.total_columns() as usize * regions],
        site_block,
        site_of: (0..count).collect(),
        occupant: (0..sites.len()).map(|i| (i < count).then_some(i)).collect(),
        block_weight: opts.lambda * dev.spec().frames_per_column_region as i64,
        scratch: Vec::new(),
    };
    for s in 0..count {
        a.block_count[a.site_block[s]] += 1;
    }
    for i in 0..a.nets.len() {
        a.net_cost[i] = a.hpwl(&a.nets[i]);
    }

    if count > 0 && sites.len() > 1 {
        let mut rng = Prng::new(opts.seed);
        let propose = |a: &mut Annealer, rng: &mut Prng| {
            let slice = rng.below(count);
            let target = rng.below(sites.len());
            (slice, target, a.site_of[slice])
        };

        let mut deltas = Vec::with_capacity(100);
        for _ in 0..100 {
            let (slice, target, from) = propose(&mut a, &mut rng);
            if target == from {
                continue;
            }
            deltas.push(a.try_move(slice, target) as f64);
            a.undo(slice, from);
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len().max(1) as f64;
        let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / deltas.len().max(1) as f64;
        let mut temp = var.sqrt().max(1.0);

        let total_moves = opts.moves_per_slice * count;
        let mut done = 0;
        while done < total_moves {
            for _ in 0..count.min(total_moves - done) {
                let (slice, target, from) = propose(&mut a, &mut rng);
                done += 1;
                if target == from {
                    continue;
                }
                let delta = a.try_move(slice, target);
                if delta <= 0 || rng.next_f64() < (-(delta as f64) / temp).exp() {
                    a.commit();
                } else {
                    a.undo(slice, from);
                }
            }
            temp *= 0.95;
        }

        for _ in 0..opts.greedy_sweeps {
            let mut improved = false;
            for slice in 0..count {
                for target in 0..sites.len() {
                    let from = a.site_of[slice];
                    if target == from {
                        continue;
                    }
                    if a.try_move(slice, target) < 0 {
                        a.commit();
                        improved = true;
                    } else {
                        a.undo(slice, from);
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    debug_assert_eq!(a.total_cost(), {
        let mut b = 0;
        for net in &a.nets {
            b += a.hpwl(net);
        }
        b + a.block_weight * a.block_count.iter().filter(|&&c| c > 0).count() as i64
    });

    Ok(Placement {
        sites: a.site_of.iter().map(|&s| sites[s]).collect(),
        pads: pads.to_vec(),
    })
}
