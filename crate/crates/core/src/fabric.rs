//! Abstract frame-organized FPGA fabric and its public bit map.
//!
//! The device is a grid of tiles: column 0 and the last column are I/O
//! columns, everything in between is CLB tiles holding `slices_per_tile`
//! slices. Configuration memory is split into frames, one per
//! `(column, clock region, minor)`. Inside a frame each tile row of the
//! region owns a 64-bit slot at `row_in_region * 64`, shifted by one 32-bit
//! word for rows in the upper half of the region (the reserved mid-frame
//! word).
//!
//! Within a tile's slots:
//! * minors `[0, routing_minors)` hold PIP bits; PIP `p` sits in minor
//!   `p % routing_minors` at slot bit `p / routing_minors`.
//! * minors `[routing_minors, frames_per_column_region)` hold slice bits.
//!   Each slice owns a lane of `64 / slices_per_tile` bits in every slot;
//!   slice-local bit `j` goes to minor `routing_minors + j % slice_minors`
//!   at lane bit `j / slice_minors`. Local bits `[0, luts * 2^k)` are LUT
//!   truth tables (`lut * 2^k + index`), the next `ffs_per_slice` bits are
//!   flip-flop configuration bits. The rest of the lane is reserved.
//!
//! I/O columns carry only PIP bits; pad sites themselves have none.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SLOT_BITS: u32 = 64;
pub const RESERVED_WORD_BITS: u32 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FabricError {
    #[error("invalid device spec: {0}")]
    InvalidSpec(String),
    #[error("resource {0} is not on the device")]
    OffDevice(ResourceInstance),
    #[error("bad address `{0}`")]
    BadAddress(String),
}

fn d_clb_columns() -> u32 {
    20
}
fn d_rows() -> u32 {
    80
}
fn d_region_height() -> u32 {
    40
}
fn d_frames() -> u32 {
    36
}
fn d_bits() -> u32 {
    2592
}
fn d_slices() -> u32 {
    2
}
fn d_luts() -> u32 {
    4
}
fn d_ffs() -> u32 {
    8
}
fn d_lut_k() -> u32 {
    6
}
fn d_routing_minors() -> u32 {
    12
}
fn d_pads() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    #[serde(default = "d_clb_columns")]
    pub clb_columns: u32,
    #[serde(default = "d_rows")]
    pub rows: u32,
    #[serde(default = "d_region_height")]
    pub region_height: u32,
    #[serde(default = "d_frames")]
    pub frames_per_column_region: u32,
    #[serde(default = "d_bits")]
    pub bits_per_frame: u32,
    #[serde(default = "d_slices")]
    pub slices_per_tile: u32,
    #[serde(default = "d_luts")]
    pub luts_per_slice: u32,
    #[serde(default = "d_ffs")]
    pub ffs_per_slice: u32,
    #[serde(default = "d_lut_k")]
    pub lut_k: u32,
    #[serde(default = "d_routing_minors")]
    pub routing_minors: u32,
    #[serde(default = "d_pads")]
    pub pads_per_iob_tile: u32,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        DeviceSpec {
            clb_columns: d_clb_columns(),
            rows: d_rows(),
            region_height: d_region_height(),
            frames_per_column_region: d_frames(),
            bits_per_frame: d_bits(),
            slices_per_tile: d_slices(),
            luts_per_slice: d_luts(),
            ffs_per_slice: d_ffs(),
            lut_k: d_lut_k(),
            routing_minors: d_routing_minors(),
            pads_per_iob_tile: d_pads(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameAddr {
    pub column: u32,
    pub region: u32,
    pub minor: u32,
}

impl fmt::Display for FrameAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.column, self.region, self.minor)
    }
}

impl FromStr for FrameAddr {
    type Err = FabricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FabricError::BadAddress(s.to_string());
        let mut it = s.split('/').map(|p| p.parse::<u32>().map_err(|_| bad()));
        let (Some(c), Some(r), Some(m), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        Ok(FrameAddr {
            column: c?,
            region: r?,
            minor: m?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BitAddr {
    pub frame: FrameAddr,
    pub offset: u32,
}

impl fmt::Display for BitAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.frame, self.offset)
    }
}

impl FromStr for BitAddr {
    type Err = FabricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (frame, off) = s.split_once(':').ok_or_else(|| FabricError::BadAddress(s.to_string()))?;
        Ok(BitAddr {
            frame: frame.parse()?,
            offset: off.parse().map_err(|_| FabricError::BadAddress(s.to_string()))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Slice,
    Pip,
    Iob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tile {
    pub col: u32,
    pub row: u32,
}

impl Tile {
    pub fn manhattan(self, other: Tile) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResourceInstance {
    pub kind: ResourceKind,
    pub tile: Tile,
    pub index: u32,
}

impl ResourceInstance {
    pub fn slice(col: u32, row: u32, index: u32) -> Self {
        ResourceInstance {
            kind: ResourceKind::Slice,
            tile: Tile { col, row },
            index,
        }
    }

    pub fn pip(col: u32, row: u32, index: u32) -> Self {
        ResourceInstance {
            kind: ResourceKind::Pip,
            tile: Tile { col, row },
            index,
        }
    }

    pub fn iob(col: u32, row: u32, index: u32) -> Self {
        ResourceInstance {
            kind: ResourceKind::Iob,
            tile: Tile { col, row },
            index,
        }
    }
}

impl fmt::Display for ResourceInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ResourceKind::Slice => "slice",
            ResourceKind::Pip => "pip",
            ResourceKind::Iob => "iob",
        };
        write!(f, "{k}@{},{}#{}", self.tile.col, self.tile.row, self.index)
    }
}

/// What a configuration bit configures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitRole {
    /// Slice-local bit `local` of `slice`.
    Slice { slice: ResourceInstance, local: u32 },
    Pip(ResourceInstance),
}

/// Immutable device model built from a validated [`DeviceSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FabricModel {
    spec: DeviceSpec,
    regions: u32,
    lane_width: u32,
    slice_minors: u32,
    slice_bits: u32,
    fingerprint: String,
}

impl FabricModel {
    pub fn new(spec: DeviceSpec) -> Result<FabricModel, FabricError> {
        make_device(spec)
    }

    pub fn spec(&self) -> &DeviceSpec {
        &self.spec
    }

    pub fn regions(&self) -> u32 {
        self.regions
    }

    /// CLB columns plus the two I/O columns.
    pub fn total_columns(&self) -> u32 {
        self.spec.clb_columns + 2
    }

    pub fn is_iob_column(&self, col: u32) -> bool {
        col == 0 || col == self.spec.clb_columns + 1
    }

    pub fn is_clb_column(&self, col: u32) -> bool {
        col >= 1 && col <= self.spec.clb_columns
    }

    pub fn total_frames(&self) -> u64 {
        self.total_columns() as u64 * self.regions as u64 * self.spec.frames_per_column_region as u64
    }

    /// Total configuration bits over all frames.
    pub fn total_bits(&self) -> u64 {
        self.total_frames() * self.spec.bits_per_frame as u64
    }

    pub fn region_of_row(&self, row: u32) -> u32 {
        row / self.spec.region_height
    }

    pub fn slice_bits(&self) -> u32 {
        self.slice_bits
    }

    pub fn slice_minors(&self) -> u32 {
        self.slice_minors
    }

    pub fn lane_width(&self) -> u32 {
        self.lane_width
    }

    pub fn pip_budget(&self) -> u32 {
        self.spec.routing_minors * SLOT_BITS
    }

    pub fn truth_bits_per_lut(&self) -> u32 {
        1 << self.spec.lut_k
    }

    pub fn slices_per_block(&self) -> u32 {
        self.spec.region_height * self.spec.slices_per_tile
    }

    pub fn lut_bit(&self, lut: u32, index: u32) -> u32 {
        lut * self.truth_bits_per_lut() + index
    }

    pub fn ff_bit(&self, ff: u32) -> u32 {
        self.spec.luts_per_slice * self.truth_bits_per_lut() + ff
    }

    /// Short hex digest of the spec, stamped into mask files.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn contains_tile(&self, t: Tile) -> bool {
        t.col < self.total_columns() && t.row < self.spec.rows
    }

    fn reserved_word_start(&self) -> u32 {
        (self.spec.region_height / 2) * SLOT_BITS
    }

    fn slot_offset(&self, row_in_region: u32) -> u32 {
        let base = row_in_region * SLOT_BITS;
        if base >= self.reserved_word_start() {
            base + RESERVED_WORD_BITS
        } else {
            base
        }
    }

    /// Offsets inside a frame that no tile slot covers.
    pub fn is_reserved_offset(&self, offset: u32) -> bool {
        let r = self.reserved_word_start();
        (r..r + RESERVED_WORD_BITS).contains(&offset) || offset >= self.slot_offset(self.spec.region_height - 1) + SLOT_BITS
    }

    fn frame_at(&self, t: Tile, minor: u32) -> FrameAddr {
        FrameAddr {
            column: t.col,
            region: self.region_of_row(t.row),
            minor,
        }
    }

    fn check(&self, r: &ResourceInstance) -> Result<(), FabricError> {
        let ok = self.contains_tile(r.tile)
            && match r.kind {
                ResourceKind::Slice => self.is_clb_column(r.tile.col) && r.index < self.spec.slices_per_tile,
                ResourceKind::Pip => r.index < self.pip_budget(),
                ResourceKind::Iob => self.is_iob_column(r.tile.col) && r.index < self.spec.pads_per_iob_tile,
            };
        if ok {
            Ok(())
        } else {
            Err(FabricError::OffDevice(*r))
        }
    }

    /// Address of slice-local bit `local`.
    pub fn slice_bit_addr(&self, slice: &ResourceInstance, local: u32) -> BitAddr {
        debug_assert!(local < self.slice_bits);
        let minor = self.spec.routing_minors + local % self.slice_minors;
        let lane_bit = local / self.slice_minors;
        BitAddr {
            frame: self.frame_at(slice.tile, minor),
            offset: self.slot_offset(slice.tile.row % self.spec.region_height) + slice.index * self.lane_width + lane_bit,
        }
    }

    pub fn pip_bit_addr(&self, pip: &ResourceInstance) -> BitAddr {
        let minor = pip.index % self.spec.routing_minors;
        let slot_bit = pip.index / self.spec.routing_minors;
        BitAddr {
            frame: self.frame_at(pip.tile, minor),
            offset: self.slot_offset(pip.tile.row % self.spec.region_height) + slot_bit,
        }
    }

    /// The public `fmap`: configuration bits of one resource instance.
    pub fn fmap_bits(&self, r: &ResourceInstance) -> Result<Vec<BitAddr>, FabricError> {
        self.check(r)?;
        Ok(match r.kind {
            ResourceKind::Slice => (0..self.slice_bits).map(|j| self.slice_bit_addr(r, j)).collect(),
            ResourceKind::Pip => vec![self.pip_bit_addr(r)],
            ResourceKind::Iob => Vec::new(),
        })
    }

    /// Inverse of the bit map; `None` for reserved or unmapped bits.
    pub fn decode_bit(&self, b: &BitAddr) -> Option<BitRole> {
        let s = &self.spec;
        let f = b.frame;
        if f.column >= self.total_columns() || f.region >= self.regions || f.minor >= s.frames_per_column_region {
            return None;
        }
        if b.offset >= s.bits_per_frame || self.is_reserved_offset(b.offset) {
            return None;
        }
        let off = if b.offset >= self.reserved_word_start() + RESERVED_WORD_BITS {
            b.offset - RESERVED_WORD_BITS
        } else {
            b.offset
        };
        let row_in_region = off / SLOT_BITS;
        let slot_bit = off % SLOT_BITS;
        let tile = Tile {
            col: f.column,
            row: f.region * s.region_height + row_in_region,
        };
        if f.minor < s.routing_minors {
            return Some(BitRole::Pip(ResourceInstance {
                kind: ResourceKind::Pip,
                tile,
                index: slot_bit * s.routing_minors + f.minor,
            }));
        }
        if !self.is_clb_column(f.column) {
            return None;
        }
        let index = slot_bit / self.lane_width;
        let local = (slot_bit % self.lane_width) * self.slice_minors + (f.minor - s.routing_minors);
        (local < self.slice_bits).then_some(BitRole::Slice {
            slice: ResourceInstance {
                kind: ResourceKind::Slice,
                tile,
                index,
            },
            local,
        })
    }

    pub fn frame_index(&self, f: &FrameAddr) -> u64 {
        ((f.column as u64 * self.regions as u64) + f.region as u64) * self.spec.frames_per_column_region as u64
            + f.minor as u64
    }

    pub fn contains_frame(&self, f: &FrameAddr) -> bool {
        f.column < self.total_columns() && f.region < self.regions && f.minor < self.spec.frames_per_column_region
    }

    pub fn contains_bit(&self, b: &BitAddr) -> bool {
        self.contains_frame(&b.frame) && b.offset < self.spec.bits_per_frame
    }

    pub fn all_frames(&self) -> impl Iterator<Item = FrameAddr> + '_ {
        let s = &self.spec;
        (0..self.total_columns()).flat_map(move |column| {
            (0..self.regions).flat_map(move |region| {
                (0..s.frames_per_column_region).map(move |minor| FrameAddr { column, region, minor })
            })
        })
    }

    /// The frames of one `(column, region)` block.
    pub fn block_frames(&self, column: u32, region: u32) -> impl Iterator<Item = FrameAddr> {
        (0..self.spec.frames_per_column_region).map(move |minor| FrameAddr { column, region, minor })
    }
}

/// Validates a spec and derives the fabric geometry.
pub fn make_device(spec: DeviceSpec) -> Result<FabricModel, FabricError> {
    let bad = |m: String| Err(FabricError::InvalidSpec(m));
    let counts = [
        ("clb_columns", spec.clb_columns),
        ("rows", spec.rows),
        ("region_height", spec.region_height),
        ("frames_per_column_region", spec.frames_per_column_region),
        ("bits_per_frame", spec.bits_per_frame),
        ("slices_per_tile", spec.slices_per_tile),
        ("luts_per_slice", spec.luts_per_slice),
        ("ffs_per_slice", spec.ffs_per_slice),
        ("lut_k", spec.lut_k),
        ("routing_minors", spec.routing_minors),
        ("pads_per_iob_tile", spec.pads_per_iob_tile),
    ];
    for (name, v) in counts {
        if v == 0 {
            return bad(format!("{name} must be at least 1"));
        }
    }
    if !spec.rows.is_multiple_of(spec.region_height) {
        return bad(format!(
            "rows ({}) is not a multiple of region_height ({})",
            spec.rows, spec.region_height
        ));
    }
    let needed = spec.region_height as u64 * SLOT_BITS as u64 + RESERVED_WORD_BITS as u64;
    if (spec.bits_per_frame as u64) < needed {
        return bad(format!(
            "bits_per_frame ({}) cannot hold {} tile slots plus the reserved word ({needed} bits)",
            spec.bits_per_frame, spec.region_height
        ));
    }
    if !(2..=6).contains(&spec.lut_k) {
        return bad(format!("lut_k ({}) must be in 2..=6", spec.lut_k));
    }
    if spec.routing_minors >= spec.frames_per_column_region {
        return bad("routing_minors must leave at least one slice minor".into());
    }
    if !SLOT_BITS.is_multiple_of(spec.slices_per_tile) {
        return bad(format!("slices_per_tile ({}) must divide 64", spec.slices_per_tile));
    }
    let lane_width = SLOT_BITS / spec.slices_per_tile;
    let slice_minors = spec.frames_per_column_region - spec.routing_minors;
    let slice_bits = spec.luts_per_slice * (1 << spec.lut_k) + spec.ffs_per_slice;
    if slice_bits > slice_minors * lane_width {
        return bad(format!(
            "a slice needs {slice_bits} bits but only {} fit in its lane",
            slice_minors * lane_width
        ));
    }
    let digest = Sha256::digest(serde_json::to_vec(&spec).expect("spec serializes"));
    let fingerprint = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok(FabricModel {
        regions: spec.rows / spec.region_height,
        lane_width,
        slice_minors,
        slice_bits,
        fingerprint,
        spec,
    })
}

/// Projection of a bit set onto its frames.
pub fn frames_of<'a>(bits: impl IntoIterator<Item = &'a BitAddr>) -> BTreeSet<FrameAddr> {
    bits.into_iter().map(|b| b.frame).collect()
}

/// Machine-readable description of the bit layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FabricDescription {
    pub spec: DeviceSpec,
    pub fingerprint: String,
    pub total_columns: u32,
    pub regions: u32,
    pub total_frames: u64,
    pub slot_bits: u32,
    pub reserved_word: [u32; 2],
    pub routing_minors: [u32; 2],
    pub slice_minors: [u32; 2],
    pub slice_lane_width: u32,
    pub slice_bits: u32,
    pub lut_truth_bits: [u32; 2],
    pub ff_config_bits: [u32; 2],
    pub pip_budget_per_tile: u32,
    pub notes: Vec<String>,
}

pub fn describe(dev: &FabricModel) -> FabricDescription {
    let s = dev.spec();
    let r = dev.reserved_word_start();
    let lut_end = s.luts_per_slice * dev.truth_bits_per_lut();
    FabricDescription {
        spec: s.clone(),
        fingerprint: dev.fingerprint().to_string(),
        total_columns: dev.total_columns(),
        regions: dev.regions(),
        total_frames: dev.total_frames(),
        slot_bits: SLOT_BITS,
        reserved_word: [r, r + RESERVED_WORD_BITS],
        routing_minors: [0, s.routing_minors],
        slice_minors: [s.routing_minors, s.frames_per_column_region],
        slice_lane_width: dev.lane_width(),
        slice_bits: dev.slice_bits(),
        lut_truth_bits: [0, lut_end],
        ff_config_bits: [lut_end, lut_end + s.ffs_per_slice],
        pip_budget_per_tile: dev.pip_budget(),
        notes: vec![
            "slot offset = row_in_region*64, +32 for rows at or above region_height/2".into(),
            "pip p: minor = p % routing_minors, slot bit = p / routing_minors".into(),
            "slice bit j: minor = routing_minors + j % slice_minors, lane bit = j / slice_minors, offset = slot + slice*lane_width + lane bit".into(),
            "the routing/slice minor split is an assumption of this fabric model".into(),
        ],
    }
}

/// One row per configuration bit of every resource in `tile`:
/// `resource,col,row,index,local_bit,bit`.
pub fn describe_tile_csv(dev: &FabricModel, tile: Tile) -> Result<String, FabricError> {
    let mut out = String::from("resource,col,row,index,local_bit,bit\n");
    let mut resources = Vec::new();
    if dev.is_clb_column(tile.col) {
        resources.extend((0..dev.spec().slices_per_tile).map(|i| ResourceInstance::slice(tile.col, tile.row, i)));
    }
    resources.extend((0..dev.pip_budget()).map(|i| ResourceInstance::pip(tile.col, tile.row, i)));
    for r in resources {
        for (local, b) in dev.fmap_bits(&r)?.iter().enumerate() {
            let kind = match r.kind {
                ResourceKind::Slice => "slice",
                ResourceKind::Pip => "pip",
                ResourceKind::Iob => "iob",
            };
            out.push_str(&format!("{kind},{},{},{},{local},{b}\n", tile.col, tile.row, r.index));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn dev() -> FabricModel {
        make_device(DeviceSpec::default()).unwrap()
    }

    #[test]
    fn default_frame_total() {
        let d = dev();
        assert_eq!(d.total_frames(), 22 * 2 * 36);
        assert_eq!(d.total_frames(), 1584);
        assert_eq!(d.all_frames().count() as u64, d.total_frames());
        let distinct: BTreeSet<_> = d.all_frames().collect();
        assert_eq!(distinct.len(), 1584);
    }

    #[test]
    fn single_region() {
        let d = make_device(DeviceSpec {
            region_height: 80,
            bits_per_frame: 80 * 64 + 32,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.regions(), 1);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            make_device(DeviceSpec {
                bits_per_frame: 1000,
                ..Default::default()
            }),
            Err(FabricError::InvalidSpec(_))
        ));
        assert!(make_device(DeviceSpec {
            rows: 81,
            ..Default::default()
        })
        .is_err());
        assert!(make_device(DeviceSpec {
            clb_columns: 0,
            ..Default::default()
        })
        .is_err());
        assert!(make_device(DeviceSpec {
            routing_minors: 30,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn slices_are_disjoint_and_span_24_minors() {
        let d = dev();
        let a: BTreeSet<_> = d.fmap_bits(&ResourceInstance::slice(3, 5, 0)).unwrap().into_iter().collect();
        let b: BTreeSet<_> = d.fmap_bits(&ResourceInstance::slice(3, 5, 1)).unwrap().into_iter().collect();
        assert_eq!(a.len(), 264);
        assert!(a.is_disjoint(&b));
        let minors: BTreeSet<u32> = a.iter().map(|x| x.frame.minor).collect();
        assert_eq!(minors.len(), 24);
        assert_eq!(frames_of(&a).len(), 24);
        let regions: BTreeSet<(u32, u32)> = a.iter().map(|x| (x.frame.column, x.frame.region)).collect();
        assert_eq!(regions.len(), 1);
        let both: BTreeSet<_> = a.union(&b).copied().collect();
        assert_eq!(frames_of(&both).len(), 24);
        assert!(frames_of(std::iter::empty::<&BitAddr>()).is_empty());
    }

    #[test]
    fn lut_bit_formula() {
        // truth bit 5 of LUT 2, slice 1, row 3 of region 1, column 4
        let d = dev();
        let s = ResourceInstance::slice(4, 43, 1);
        let local = d.lut_bit(2, 5);
        assert_eq!(local, 133);
        let b = d.slice_bit_addr(&s, local);
        // 133 % 24 = 13 -> minor 25; 133 / 24 = 5 -> lane bit 5; slot 3*64
        assert_eq!(
            b,
            BitAddr {
                frame: FrameAddr {
                    column: 4,
                    region: 1,
                    minor: 25
                },
                offset: 3 * 64 + 32 + 5
            }
        );
        assert_eq!(d.decode_bit(&b), Some(BitRole::Slice { slice: s, local }));
    }

    #[test]
    fn upper_half_rows_skip_reserved_word() {
        let d = dev();
        let lo = d.pip_bit_addr(&ResourceInstance::pip(1, 19, 0));
        let hi = d.pip_bit_addr(&ResourceInstance::pip(1, 20, 0));
        assert_eq!(lo.offset, 19 * 64);
        assert_eq!(hi.offset, 20 * 64 + 32);
        assert!(d.is_reserved_offset(1280));
        assert!(d.is_reserved_offset(1311));
        assert!(!d.is_reserved_offset(1312));
        let last = d.pip_bit_addr(&ResourceInstance::pip(1, 39, 767));
        assert_eq!(last.offset, 2591);
    }

    #[test]
    fn emit_and_invert_small_device() {
        let d = make_device(DeviceSpec {
            clb_columns: 2,
            rows: 4,
            region_height: 2,
            bits_per_frame: 2 * 64 + 32,
            ..Default::default()
        })
        .unwrap();
        let mut table: HashMap<BitAddr, (ResourceInstance, u32)> = HashMap::new();
        for col in 0..d.total_columns() {
            for row in 0..d.spec().rows {
                let mut rs: Vec<ResourceInstance> = (0..d.pip_budget()).map(|i| ResourceInstance::pip(col, row, i)).collect();
                if d.is_clb_column(col) {
                    rs.extend((0..2).map(|i| ResourceInstance::slice(col, row, i)));
                } else {
                    rs.extend((0..2).map(|i| ResourceInstance::iob(col, row, i)));
                }
                for r in rs {
                    for (j, b) in d.fmap_bits(&r).unwrap().into_iter().enumerate() {
                        assert!(d.contains_bit(&b));
                        assert!(!d.is_reserved_offset(b.offset));
                        let prev = table.insert(b, (r, j as u32));
                        assert!(prev.is_none(), "bit {b} emitted twice");
                    }
                }
            }
        }
        for (b, (r, j)) in &table {
            let role = d.decode_bit(b).unwrap();
            match role {
                BitRole::Pip(p) => assert_eq!(&p, r),
                BitRole::Slice { slice, local } => {
                    assert_eq!(&slice, r);
                    assert_eq!(local, *j);
                }
            }
        }
        // every bit not in the table decodes to None
        for f in d.all_frames() {
            for offset in 0..d.spec().bits_per_frame {
                let b = BitAddr { frame: f, offset };
                assert_eq!(d.decode_bit(&b).is_some(), table.contains_key(&b), "{b}");
            }
        }
    }

    #[test]
    fn off_device() {
        let d = dev();
        assert!(matches!(
            d.fmap_bits(&ResourceInstance::slice(0, 0, 0)),
            Err(FabricError::OffDevice(_))
        ));
        assert!(d.fmap_bits(&ResourceInstance::slice(1, 80, 0)).is_err());
        assert!(d.fmap_bits(&ResourceInstance::slice(1, 0, 2)).is_err());
        assert!(d.fmap_bits(&ResourceInstance::pip(1, 0, 768)).is_err());
        assert_eq!(d.fmap_bits(&ResourceInstance::iob(0, 0, 1)).unwrap(), vec![]);
    }

    #[test]
    fn addresses_parse() {
        let b: BitAddr = "3/1/17:40".parse().unwrap();
        assert_eq!(b.to_string(), "3/1/17:40");
        assert!("3/1:40".parse::<BitAddr>().is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let s: DeviceSpec = serde_json::from_str("{\"clb_columns\": 4}").unwrap();
        assert_eq!(s.clb_columns, 4);
        assert_eq!(s.rows, 80);
        assert!(serde_json::from_str::<DeviceSpec>("{\"bogus\": 1}").is_err());
    }
}
