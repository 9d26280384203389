//! Essential and critical configuration-bit sets and their mask files.
//!
//! A mask file is plain text:
//!
//! ```text
//! scrubmask v1 frames=1584 bits=2592 device=3f2a...
//! # optional comment lines
//! 1/0/12 000...0001
//! ```
//!
//! One line per frame with at least one set bit, in frame order. The bitmap
//! is hexadecimal with bit 0 of the frame in the lowest nibble of the last
//! digit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blif::MappedNetlist;
use crate::fabric::{BitAddr, FabricModel, FrameAddr};
use crate::graph::Classification;
use crate::layout::{Packing, Placement, Routing};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("mask was written for device {found}, expected {expected}")]
    DeviceMismatch { expected: String, found: String },
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
}

/// A set of configuration bits stored as one bitmap per touched frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitMask {
    frames: BTreeMap<FrameAddr, Vec<u64>>,
}

impl BitMask {
    pub fn new() -> BitMask {
        BitMask::default()
    }

    pub fn insert(&mut self, b: BitAddr) -> bool {
        let words = self.frames.entry(b.frame).or_default();
        let w = (b.offset / 64) as usize;
        if words.len() <= w {
            words.resize(w + 1, 0);
        }
        let m = 1u64 << (b.offset % 64);
        let fresh = words[w] & m == 0;
        words[w] |= m;
        fresh
    }

    pub fn contains(&self, b: &BitAddr) -> bool {
        self.frames
            .get(&b.frame)
            .and_then(|w| w.get((b.offset / 64) as usize))
            .is_some_and(|w| (w >> (b.offset % 64)) & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.frames
            .values()
            .flat_map(|w| w.iter())
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.values().all(|w| w.iter().all(|&x| x == 0))
    }

    /// Set bits of one frame.
    pub fn frame_len(&self, f: &FrameAddr) -> usize {
        self.frames
            .get(f)
            .map_or(0, |w| w.iter().map(|x| x.count_ones() as usize).sum())
    }

    /// Frames holding at least one set bit, ascending.
    pub fn frames(&self) -> impl Iterator<Item = FrameAddr> + '_ {
        self.frames
            .iter()
            .filter(|(_, w)| w.iter().any(|&x| x != 0))
            .map(|(f, _)| *f)
    }

    pub fn frame_count(&self) -> usize {
        self.frames().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = BitAddr> + '_ {
        self.frames.iter().flat_map(|(&frame, words)| {
            words.iter().enumerate().flat_map(move |(i, &w)| {
                (0..64)
                    .filter(move |b| (w >> b) & 1 == 1)
                    .map(move |b| BitAddr {
                        frame,
                        offset: i as u32 * 64 + b,
                    })
            })
        })
    }

    pub fn is_subset(&self, other: &BitMask) -> bool {
        self.frames.iter().all(|(f, words)| {
            let o = other.frames.get(f);
            words.iter().enumerate().all(|(i, &w)| {
                let ow = o.and_then(|o| o.get(i)).copied().unwrap_or(0);
                w & !ow == 0
            })
        })
    }

    /// Bits of the given frames only.
    pub fn restrict(&self, keep: impl Fn(&FrameAddr) -> bool) -> BitMask {
        BitMask {
            frames: self
                .frames
                .iter()
                .filter(|(f, _)| keep(f))
                .map(|(f, w)| (*f, w.clone()))
                .collect(),
        }
    }
}

impl FromIterator<BitAddr> for BitMask {
    fn from_iter<I: IntoIterator<Item = BitAddr>>(iter: I) -> Self {
        let mut m = BitMask::new();
        for b in iter {
            m.insert(b);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitClassification {
    pub essential: BitMask,
    pub critical: BitMask,
    pub fingerprint: String,
}

impl BitClassification {
    pub fn n_e(&self) -> usize {
        self.essential.len()
    }

    pub fn n_c(&self) -> usize {
        self.critical.len()
    }
}

/// `B_e` is every bit of every placed slice and every claimed PIP. `B_c` is
/// every bit of slices holding a critical cell, plus the PIPs on the route
/// tree paths from each net's driver to its critical sinks.
pub fn classify_bits(
    dev: &FabricModel,
    n: &MappedNetlist,
    packing: &Packing,
    placement: &Placement,
    routing: &Routing,
    c: &Classification,
) -> Result<BitClassification, MaskError> {
    let bad = |m: String| Err(MaskError::InconsistentInputs(m));
    if c.node_count() != n.len() || packing.cell_slot.len() != n.len() {
        return bad(format!(
            "netlist has {} cells, classification {}, packing {}",
            n.len(),
            c.node_count(),
            packing.cell_slot.len()
        ));
    }
    if placement.sites.len() != packing.len() {
        return bad(format!(
            "{} packed slices but {} placed sites",
            packing.len(),
            placement.sites.len()
        ));
    }
    let mut essential = BitMask::new();
    let mut critical = BitMask::new();
    for (slice, site) in packing.slices.iter().zip(&placement.sites) {
        let members = slice.luts.iter().chain(&slice.ffs);
        let mut is_critical = false;
        for m in members {
            if m.0 >= n.len() {
                return bad(format!("packed cell {} is not in the netlist", m.0));
            }
            is_critical |= c.is_critical(*m);
        }
        let bits = dev.fmap_bits(site).map_err(|e| MaskError::InconsistentInputs(e.to_string()))?;
        for b in bits {
            essential.insert(b);
            if is_critical {
                critical.insert(b);
            }
        }
    }
    for net in &routing.nets {
        let pip_bits: Vec<BitAddr> = net.nodes.iter().map(|nd| dev.pip_bit_addr(&nd.resource())).collect();
        for &b in &pip_bits {
            essential.insert(b);
        }
        for s in &net.sinks {
            if s.cell.0 >= n.len() {
                return bad(format!("routed sink {} is not in the netlist", s.cell.0));
            }
            if c.is_critical(s.cell) {
                for node in net.path_to(s.node) {
                    critical.insert(pip_bits[node as usize]);
                }
            }
        }
    }
    Ok(BitClassification {
        essential,
        critical,
        fingerprint: dev.fingerprint().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Essential,
    Critical,
}

/// Note written into critical masks about what the set contains.
pub const CRITICAL_NOTE: &str =
    "critical = all bits of slices holding a critical cell + route PIPs on paths from the driver to critical sinks";

fn hex_digit(v: u64) -> char {
    char::from_digit(v as u32, 16).unwrap()
}

pub fn write_mask(mask: &BitMask, dev: &FabricModel, comments: &[&str]) -> String {
    let bpf = dev.spec().bits_per_frame;
    let digits = bpf.div_ceil(4) as usize;
    let mut out = format!(
        "scrubmask v1 frames={} bits={} device={}\n",
        dev.total_frames(),
        bpf,
        dev.fingerprint()
    );
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    for (f, words) in &mask.frames {
        if words.iter().all(|&w| w == 0) {
            continue;
        }
        write!(out, "{f} ").unwrap();
        for d in (0..digits).rev() {
            let bit = d * 4;
            let w = words.get(bit / 64).copied().unwrap_or(0);
            out.push(hex_digit((w >> (bit % 64)) & 0xf));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskFile {
    pub frames_total: u64,
    pub bits_per_frame: u32,
    pub device: String,
    pub mask: BitMask,
}

/// Parses a mask file. With `dev`, the header must match that device.
pub fn read_mask(text: &str, dev: Option<&FabricModel>) -> Result<MaskFile, MaskError> {
    let fail = |line: usize, msg: &str| MaskError::Format {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| fail(1, "missing header"))?;
    let mut parts = header.split(' ');
    if parts.next() != Some("scrubmask") || parts.next() != Some("v1") {
        return Err(fail(1, "expected `scrubmask v1`"));
    }
    let mut field = |name: &str| -> Result<&str, MaskError> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(name))
            .and_then(|p| p.strip_prefix('='))
            .ok_or_else(|| fail(1, &format!("missing `{name}=`")))
    };
    let frames_total: u64 = field("frames")?.parse().map_err(|_| fail(1, "bad frame count"))?;
    let bits_per_frame: u32 = field("bits")?.parse().map_err(|_| fail(1, "bad bit count"))?;
    let device = field("device")?.to_string();
    if parts.next().is_some() {
        return Err(fail(1, "trailing header fields"));
    }
    if let Some(d) = dev {
        if d.fingerprint() != device {
            return Err(MaskError::DeviceMismatch {
                expected: d.fingerprint().to_string(),
                found: device,
            });
        }
        if d.spec().bits_per_frame != bits_per_frame || d.total_frames() != frames_total {
            return Err(fail(1, "frame geometry differs from the device"));
        }
    }
    let digits = bits_per_frame.div_ceil(4) as usize;
    let mut mask = BitMask::new();
    let mut last: Option<FrameAddr> = None;
    for (no, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let (addr, hex) = line.split_once(' ').ok_or_else(|| fail(no, "expected `<frame> <bitmap>`"))?;
        let frame: FrameAddr = addr.parse().map_err(|_| fail(no, "bad frame address"))?;
        if let Some(d) = dev {
            if !d.contains_frame(&frame) {
                return Err(fail(no, "frame is not on the device"));
            }
        }
        if last.is_some_and(|l| l >= frame) {
            return Err(fail(no, "frames out of order or repeated"));
        }
        last = Some(frame);
        if hex.len() != digits {
            return Err(fail(no, &format!("bitmap must have {digits} hex digits")));
        }
        let mut words = vec![0u64; (bits_per_frame as usize).div_ceil(64)];
        for (i, ch) in hex.chars().rev().enumerate() {
            let v = ch.to_digit(16).ok_or_else(|| fail(no, "bad hex digit"))? as u64;
            let bit = i * 4;
            if v != 0 && bit + (64 - v.leading_zeros() as usize) > bits_per_frame as usize {
                return Err(fail(no, "bit beyond the frame end"));
            }
            words[bit / 64] |= v << (bit % 64);
        }
        while words.last() == Some(&0) {
            words.pop();
        }
        if words.is_empty() {
            return Err(fail(no, "empty frame line"));
        }
        mask.frames.insert(frame, words);
    }
    Ok(MaskFile {
        frames_total,
        bits_per_frame,
        device,
        mask,
    })
}
