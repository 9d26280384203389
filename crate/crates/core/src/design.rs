//! A placed and routed design as stored in the design JSON file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitclass::{classify_bits, BitClassification, MaskError};
use crate::blif::MappedNetlist;
use crate::fabric::{DeviceSpec, FabricError, FabricModel};
use crate::graph::{build_graph, classify, Classification};
use crate::layout::{frame_report, FrameReport, Packing, Placement, RegionMask, Routing};

/// Implementation flow: `a` unconstrained, `b` placement confined to the
/// region mask, `c` placement and routing confined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    A,
    B,
    C,
}

impl Flow {
    pub const ALL: [Flow; 3] = [Flow::A, Flow::B, Flow::C];

    pub fn constrains_placement(self) -> bool {
        self != Flow::A
    }

    pub fn constrains_routing(self) -> bool {
        self == Flow::C
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flow::A => "a",
            Flow::B => "b",
            Flow::C => "c",
        })
    }
}

impl FromStr for Flow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(Flow::A),
            "b" => Ok(Flow::B),
            "c" => Ok(Flow::C),
            _ => Err(format!("unknown flow `{s}` (expected a, b or c)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedDesign {
    pub spec: DeviceSpec,
    pub flow: Flow,
    pub seed: u64,
    pub netlist: MappedNetlist,
    pub packing: Packing,
    pub placement: Placement,
    pub mask: Option<RegionMask>,
    pub routing: Routing,
    /// Times the mask was enlarged to make routing succeed.
    pub mask_growths: u32,
}

/// Everything derived from a design without further optimization.
#[derive(Debug, Clone)]
pub struct DesignAnalysis {
    pub classification: Classification,
    pub bits: BitClassification,
    pub frames: FrameReport,
}

impl PlacedDesign {
    pub fn device(&self) -> Result<FabricModel, FabricError> {
        FabricModel::new(self.spec.clone())
    }

    /// The region mask, when the flow confines placement.
    pub fn placement_mask(&self) -> Option<&RegionMask> {
        self.mask.as_ref()
    }

    pub fn analyze(&self, dev: &FabricModel) -> Result<DesignAnalysis, MaskError> {
        let classification = classify(&build_graph(&self.netlist));
        let bits = classify_bits(
            dev,
            &self.netlist,
            &self.packing,
            &self.placement,
            &self.routing,
            &classification,
        )?;
        let frames = frame_report(dev, &self.packing, &self.placement, self.mask.as_ref(), &bits);
        Ok(DesignAnalysis {
            classification,
            bits,
            frames,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("design serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<PlacedDesign> {
        serde_json::from_str(text)
    }
}
