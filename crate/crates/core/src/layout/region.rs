use std::collections::BTreeSet;

use super::{LayoutError, RegionMask};
use crate::fabric::{FabricModel, Tile};

pub const DEFAULT_SLACK_PERCENT: u32 = 10;

/// Sum of Manhattan distances from the centers of the blocks in the
/// rectangle to the pad centroid, scaled by `2 * pads` so it stays integral.
fn rect_distance(dev: &FabricModel, pads: &[Tile], c0: u32, r0: u32, w: u32, h: u32) -> u64 {
    let n = pads.len().max(1) as i64;
    let (sx, sy) = pads
        .iter()
        .fold((0i64, 0i64), |(x, y), t| (x + t.col as i64, y + t.row as i64));
    let rh = dev.spec().region_height as i64;
    let mut total = 0u64;
    for c in c0..c0 + w {
        for r in r0..r0 + h {
            let bx = 2 * c as i64;
            let by = 2 * r as i64 * rh + rh;
            total += (n * bx - 2 * sx).unsigned_abs() + (n * by - 2 * sy).unsigned_abs();
        }
    }
    total
}

/// Smallest rectangle of `(column, region)` blocks whose slice capacity
/// covers `demand` plus the slack, nearest to the pad centroid. Ties go to
/// the lower column, then the lower region, then the flatter shape.
pub fn choose_region(
    dev: &FabricModel,
    demand: usize,
    pads: &[Tile],
    slack_percent: u32,
) -> Result<RegionMask, LayoutError> {
    let per_block = dev.slices_per_block() as usize;
    let cols = dev.spec().clb_columns;
    let regions = dev.regions();
    let need = (demand * (100 + slack_percent as usize)).div_ceil(100).max(1);
    let blocks_needed = need.div_ceil(per_block);
    let total_blocks = (cols * regions) as usize;
    if blocks_needed > total_blocks {
        return Err(LayoutError::CapacityExceeded {
            what: "slices (with slack)",
            needed: need,
            available: total_blocks * per_block,
        });
    }
    for area in blocks_needed..=total_blocks {
        // (distance, column, region, height)
        let mut best: Option<(u64, u32, u32, u32)> = None;
        for h in 1..=regions {
            if area % h as usize != 0 {
                continue;
            }
            let w = (area / h as usize) as u32;
            if w > cols {
                continue;
            }
            for c0 in 1..=cols - w + 1 {
                for r0 in 0..=regions - h {
                    let cand = (rect_distance(dev, pads, c0, r0, w, h), c0, r0, h);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
        }
        if let Some((_, c0, r0, h)) = best {
            let w = area as u32 / h;
            return Ok(RegionMask::new(
                (c0..c0 + w).flat_map(|c| (r0..r0 + h).map(move |r| (c, r))),
            ));
        }
    }
    unreachable!("the full device is always a rectangle")
}

/// Tiles outside the mask that routing may use to reach the pads: from each
/// pad, along its I/O column to the row of the nearest masked tile, then
/// across to it.
pub fn pad_corridor(dev: &FabricModel, mask: &RegionMask, pads: &[Tile]) -> BTreeSet<Tile> {
    let h = dev.spec().region_height;
    let masked: Vec<Tile> = mask
        .blocks
        .iter()
        .flat_map(|&(col, r)| (r * h..(r + 1) * h).map(move |row| Tile { col, row }))
        .collect();
    let mut out = BTreeSet::new();
    for &p in pads {
        let Some(&target) = masked.iter().min_by_key(|t| (p.manhattan(**t), t.col, t.row)) else {
            continue;
        };
        let (lo, hi) = (p.row.min(target.row), p.row.max(target.row));
        for row in lo..=hi {
            out.insert(Tile { col: p.col, row });
        }
        let (lo, hi) = (p.col.min(target.col), p.col.max(target.col));
        for col in lo..=hi {
            out.insert(Tile { col, row: target.row });
        }
    }
    out.retain(|t| !mask.contains_tile(dev, *t));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{make_device, DeviceSpec};

    fn dev() -> FabricModel {
        make_device(DeviceSpec::default()).unwrap()
    }

    #[test]
    fn one_block_near_left_pads() {
        let d = dev();
        let pads: Vec<Tile> = (0..10).map(|row| Tile { col: 0, row }).collect();
        let m = choose_region(&d, 1, &pads, 10).unwrap();
        assert_eq!(m.blocks.iter().copied().collect::<Vec<_>>(), vec![(1, 0)]);
        let pads_low: Vec<Tile> = (70..80).map(|row| Tile { col: 0, row }).collect();
        let m = choose_region(&d, 1, &pads_low, 10).unwrap();
        assert_eq!(m.blocks.iter().copied().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn slack_is_applied() {
        let d = dev();
        // 80 slices per block; 73 * 1.1 = 80.3 -> two blocks
        assert_eq!(choose_region(&d, 72, &[], 10).unwrap().blocks.len(), 1);
        assert_eq!(choose_region(&d, 73, &[], 10).unwrap().blocks.len(), 2);
    }

    #[test]
    fn three_blocks_match_exhaustive_windows() {
        let d = dev();
        let pads = [Tile { col: 21, row: 50 }, Tile { col: 21, row: 60 }, Tile { col: 0, row: 3 }];
        let demand = 200;
        let m = choose_region(&d, demand, &pads, 10).unwrap();
        assert_eq!(m.blocks.len(), 3);
        // oracle: every contiguous 3x1 window, float centroid distance
        let cx = pads.iter().map(|p| p.col as f64).sum::<f64>() / 3.0;
        let cy = pads.iter().map(|p| p.row as f64).sum::<f64>() / 3.0;
        let mut best = (f64::INFINITY, 0, 0);
        for r in 0..2u32 {
            for c0 in 1..=18u32 {
                let dist: f64 = (c0..c0 + 3)
                    .map(|c| (c as f64 - cx).abs() + ((r * 40) as f64 + 20.0 - cy).abs())
                    .sum();
                if dist < best.0 - 1e-9 {
                    best = (dist, c0, r);
                }
            }
        }
        let expect: BTreeSet<(u32, u32)> = (best.1..best.1 + 3).map(|c| (c, best.2)).collect();
        assert_eq!(m.blocks, expect);
    }

    #[test]
    fn too_big() {
        let d = dev();
        assert!(matches!(
            choose_region(&d, 3200, &[], 10),
            Err(LayoutError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn corridor_is_l_shaped() {
        let d = dev();
        let mask = RegionMask::new([(5, 1)]);
        let c = pad_corridor(&d, &mask, &[Tile { col: 0, row: 10 }]);
        // vertical 10..=40 in column 0, then columns 1..=4 in row 40
        assert_eq!(c.len(), 31 + 4);
        assert!(c.contains(&Tile { col: 0, row: 40 }));
        assert!(c.contains(&Tile { col: 4, row: 40 }));
        assert!(!c.contains(&Tile { col: 5, row: 40 }));
    }
}
