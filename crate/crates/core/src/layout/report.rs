use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Packing, Placement, RegionMask};
use crate::bitclass::{BitClassification, BitMask};
use crate::fabric::{FabricModel, FrameAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameUtilization {
    pub frame: FrameAddr,
    pub essential_bits: usize,
    pub critical_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameReport {
    pub n_fr_total: u64,
    pub n_fr_used: usize,
    pub n_fr_ff: usize,
    /// Used frames outside the region mask (pad corridor); 0 without a mask.
    pub corridor_frames: usize,
    pub n_e: usize,
    pub n_c: usize,
    /// Used frames, most essential bits first (ties by address).
    pub frames: Vec<FrameUtilization>,
}

impl FrameReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,essential_bits,critical_bits\n");
        for f in &self.frames {
            writeln!(out, "{},{},{}", f.frame, f.essential_bits, f.critical_bits).unwrap();
        }
        out
    }
}

/// Frame accounting for a routed design, from its bit classification.
pub fn frame_report(
    dev: &FabricModel,
    packing: &Packing,
    placement: &Placement,
    mask: Option<&RegionMask>,
    bits: &BitClassification,
) -> FrameReport {
    let mut frames: Vec<FrameUtilization> = bits
        .essential
        .frames()
        .map(|frame| FrameUtilization {
            frame,
            essential_bits: bits.essential.frame_len(&frame),
            critical_bits: bits.critical.frame_len(&frame),
        })
        .collect();
    frames.sort_by(|a, b| b.essential_bits.cmp(&a.essential_bits).then(a.frame.cmp(&b.frame)));

    let ff_bits: BitMask = packing
        .slices
        .iter()
        .zip(&placement.sites)
        .flat_map(|(s, site)| (0..s.ffs.len() as u32).map(move |f| dev.slice_bit_addr(site, dev.ff_bit(f))))
        .collect();
    let corridor_frames = match mask {
        Some(m) => frames
            .iter()
            .filter(|f| !m.blocks.contains(&(f.frame.column, f.frame.region)))
            .count(),
        None => 0,
    };
    FrameReport {
        n_fr_total: dev.total_frames(),
        n_fr_used: frames.len(),
        n_fr_ff: ff_bits.frame_count(),
        corridor_frames,
        n_e: bits.n_e(),
        n_c: bits.n_c(),
        frames,
    }
}
