//! Reliability-aware floorplanning for SRAM-based FPGAs: netlist ingestion,
//! cell-graph criticality, a synthetic fabric, constrained placement and
//! routing, configuration-bit classification, scrubber MTTR models and
//! fault-injection validation.

pub mod bitclass;
pub mod blif;
pub mod design;
pub mod fabric;
pub mod faultsim;
pub mod graph;
pub mod layout;
pub mod pipeline;
pub mod prng;
pub mod reliability;
pub mod sim;
