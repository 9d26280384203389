//! Packing, frame-aligned region selection, placement and routing.
//!
//! A [`RegionMask`] is a set of `(column, region)` blocks. Placement and
//! routing can be confined to it; routing additionally may use the pad
//! corridor, the L-shaped tile paths from each used pad to the nearest
//! masked tile.

mod pack;
mod place;
mod region;
mod report;
mod route;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blif::CellId;
use crate::fabric::{FabricModel, ResourceInstance, Tile};

pub use pack::{pack, Packing, PackedSlice, SlotRef};
pub use place::{place, place_pads, PadSite, PlaceOptions, Placement};
pub use region::{choose_region, pad_corridor, DEFAULT_SLACK_PERCENT};
pub use report::{frame_report, FrameReport, FrameUtilization};
pub use route::{route, RouteNode, RoutedNet, Routing, SinkAttach};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("design needs {needed} {what} but only {available} are available")]
    CapacityExceeded {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("LUT `{cell}` has {arity} inputs, more than the fabric's {k}")]
    LutTooWide { cell: String, arity: usize, k: usize },
    #[error("net driven by `{0}` cannot be routed inside the allowed area")]
    Unroutable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    pub blocks: BTreeSet<(u32, u32)>,
}

impl RegionMask {
    pub fn new(blocks: impl IntoIterator<Item = (u32, u32)>) -> RegionMask {
        RegionMask {
            blocks: blocks.into_iter().collect(),
        }
    }

    pub fn contains_tile(&self, dev: &FabricModel, t: Tile) -> bool {
        self.blocks.contains(&(t.col, dev.region_of_row(t.row)))
    }

    /// Slice sites inside the mask, row-major (row, then column, then slice).
    pub fn sites(&self, dev: &FabricModel) -> Vec<ResourceInstance> {
        let h = dev.spec().region_height;
        let mut tiles: Vec<Tile> = self
            .blocks
            .iter()
            .filter(|&&(c, _)| dev.is_clb_column(c))
            .flat_map(|&(col, r)| (r * h..(r + 1) * h).map(move |row| Tile { col, row }))
            .collect();
        tiles.sort_by_key(|t| (t.row, t.col));
        expand_sites(dev, &tiles)
    }

    pub fn slice_capacity(&self, dev: &FabricModel) -> usize {
        self.blocks.iter().filter(|&&(c, _)| dev.is_clb_column(c)).count() * dev.slices_per_block() as usize
    }

    /// Adds the free block that touches the mask and lies closest to its
    /// bounding-box center; `false` if the device has no block left.
    pub fn grow(&mut self, dev: &FabricModel) -> bool {
        let mut best: Option<(u32, (u32, u32))> = None;
        let (c0, c1) = (
            self.blocks.iter().map(|b| b.0).min().unwrap_or(1),
            self.blocks.iter().map(|b| b.0).max().unwrap_or(1),
        );
        let (r0, r1) = (
            self.blocks.iter().map(|b| b.1).min().unwrap_or(0),
            self.blocks.iter().map(|b| b.1).max().unwrap_or(0),
        );
        for c in 1..=dev.spec().clb_columns {
            for r in 0..dev.regions() {
                if self.blocks.contains(&(c, r)) {
                    continue;
                }
                let touches = self.blocks.is_empty()
                    || self
                        .blocks
                        .iter()
                        .any(|&(bc, br)| bc.abs_diff(c) + br.abs_diff(r) == 1);
                if !touches {
                    continue;
                }
                let d = (2 * c).abs_diff(c0 + c1) + (2 * r).abs_diff(r0 + r1);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, (c, r)));
                }
            }
        }
        match best {
            Some((_, b)) => {
                self.blocks.insert(b);
                true
            }
            None => false,
        }
    }
}

/// All slice sites of the device in the same row-major order as
/// [`RegionMask::sites`].
pub fn device_sites(dev: &FabricModel) -> Vec<ResourceInstance> {
    let tiles: Vec<Tile> = (0..dev.spec().rows)
        .flat_map(|row| (1..=dev.spec().clb_columns).map(move |col| Tile { col, row }))
        .collect();
    expand_sites(dev, &tiles)
}

fn expand_sites(dev: &FabricModel, tiles: &[Tile]) -> Vec<ResourceInstance> {
    tiles
        .iter()
        .flat_map(|t| (0..dev.spec().slices_per_tile).map(move |i| ResourceInstance::slice(t.col, t.row, i)))
        .collect()
}

/// Tile a cell lives in, if it is placed at all (constants are not).
pub fn cell_tile(packing: &Packing, placement: &Placement, cell: CellId) -> Option<Tile> {
    if let Some(s) = packing.cell_slot[cell.0] {
        return Some(placement.sites[s.slice].tile);
    }
    placement.pad_site(cell).map(|r| r.tile)
}
