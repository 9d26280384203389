//! End-to-end flow: netlist in, placed design and reports out.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitclass::{write_mask, MaskError, CRITICAL_NOTE};
use crate::blif::{BlifError, MappedNetlist};
use crate::design::{Flow, PlacedDesign};
use crate::fabric::{FabricError, FabricModel};
use crate::graph::{build_graph, classify};
use crate::layout::{
    choose_region, pack, place, place_pads, route, LayoutError, PlaceOptions, DEFAULT_SLACK_PERCENT,
};
use crate::reliability::{analyze_row, mttr_table_csv, AnalyzeRow, ConstrainedBits, FlowFrames, ReliabilityError, Timing};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Blif(#[from] BlifError),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub place: PlaceOptions,
    pub slack_percent: u32,
    /// How many times flow c may enlarge the mask by one block after a
    /// routing failure.
    pub max_mask_growth: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            place: PlaceOptions::default(),
            slack_percent: DEFAULT_SLACK_PERCENT,
            max_mask_growth: 8,
        }
    }
}

/// Packs, places and routes `netlist` under one flow.
pub fn implement(
    netlist: &MappedNetlist,
    dev: &FabricModel,
    flow: Flow,
    opts: &FlowOptions,
) -> Result<PlacedDesign, PipelineError> {
    let classification = classify(&build_graph(netlist));
    let packing = pack(netlist, &classification, dev)?;
    let pads = place_pads(netlist, dev)?;
    let mut mask = if flow.constrains_placement() {
        let pad_tiles: Vec<_> = pads.iter().map(|p| p.site.tile).collect();
        Some(choose_region(dev, packing.len(), &pad_tiles, opts.slack_percent)?)
    } else {
        None
    };
    let mut growths = 0;
    loop {
        let placement = place(netlist, &packing, dev, mask.as_ref(), &pads, &opts.place)?;
        let route_mask = if flow.constrains_routing() { mask.as_ref() } else { None };
        match route(netlist, &packing, &placement, dev, route_mask) {
            Ok(routing) => {
                return Ok(PlacedDesign {
                    spec: dev.spec().clone(),
                    flow,
                    seed: opts.place.seed,
                    netlist: netlist.clone(),
                    packing,
                    placement,
                    mask,
                    routing,
                    mask_growths: growths,
                })
            }
            Err(LayoutError::Unroutable(net)) if flow.constrains_routing() && growths < opts.max_mask_growth => {
                let m = mask.as_mut().expect("flow c has a mask");
                if !m.grow(dev) {
                    return Err(LayoutError::Unroutable(net).into());
                }
                growths += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Frame and bit counts of one flow, as compared across flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flow: Flow,
    pub slices: usize,
    pub n_fr_used: usize,
    pub n_fr_ff: usize,
    pub corridor_frames: usize,
    pub n_e: usize,
    pub n_c: usize,
    pub pips: usize,
    pub mask_blocks: usize,
    pub mask_growths: u32,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub design: PlacedDesign,
    pub summary: FlowSummary,
}

pub fn run_flow(
    netlist: &MappedNetlist,
    dev: &FabricModel,
    flow: Flow,
    opts: &FlowOptions,
) -> Result<FlowRun, PipelineError> {
    let design = implement(netlist, dev, flow, opts)?;
    let a = design.analyze(dev)?;
    let summary = FlowSummary {
        flow,
        slices: design.packing.len(),
        n_fr_used: a.frames.n_fr_used,
        n_fr_ff: a.frames.n_fr_ff,
        corridor_frames: a.frames.corridor_frames,
        n_e: a.bits.n_e(),
        n_c: a.bits.n_c(),
        pips: design.routing.pip_count(),
        mask_blocks: design.mask.as_ref().map_or(0, |m| m.blocks.len()),
        mask_growths: design.mask_growths,
    };
    Ok(FlowRun { design, summary })
}

fn pct(base: usize, new: usize) -> f64 {
    if base == 0 {
        0.0
    } else {
        (base as f64 - new as f64) / base as f64 * 100.0
    }
}

pub fn flows_csv(summaries: &[FlowSummary]) -> String {
    let mut out = String::from(
        "flow,slices,n_fr_used,n_fr_ff,corridor_frames,n_e,n_c,pips,mask_blocks,delta_vs_a_pct\n",
    );
    let base = summaries.iter().find(|s| s.flow == Flow::A).map(|s| s.n_fr_used);
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.1}",
            s.flow,
            s.slices,
            s.n_fr_used,
            s.n_fr_ff,
            s.corridor_frames,
            s.n_e,
            s.n_c,
            s.pips,
            s.mask_blocks,
            base.map_or(0.0, |b| pct(b, s.n_fr_used))
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Flow whose design, masks and frame report are emitted.
    pub flow: Flow,
    pub options: FlowOptions,
    pub timing: Timing,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            flow: Flow::C,
            options: FlowOptions::default(),
            timing: Timing::default(),
        }
    }
}

/// MTTR inputs from per-flow summaries: scrubber types a to c see the
/// unconstrained design, type d the fully constrained one.
pub fn mttr_row(circuit: &str, summaries: &[FlowSummary]) -> Result<AnalyzeRow, ReliabilityError> {
    let get = |f: Flow| {
        summaries
            .iter()
            .find(|s| s.flow == f)
            .ok_or_else(|| ReliabilityError::MissingInput(format!("no summary for flow {f}")))
    };
    let (a, b, c) = (get(Flow::A)?, get(Flow::B)?, get(Flow::C)?);
    Ok(AnalyzeRow {
        circuit: circuit.to_string(),
        n_e: a.n_e as u64,
        n_c: a.n_c as u64,
        n_fr_ff: a.n_fr_ff as u64,
        n_fr_used: FlowFrames {
            a: a.n_fr_used as u64,
            b: b.n_fr_used as u64,
            c: c.n_fr_used as u64,
        },
        constrained_bits: Some(ConstrainedBits {
            n_e: c.n_e as u64,
            n_c: c.n_c as u64,
            n_fr_ff: c.n_fr_ff as u64,
        }),
        published_mttr_us: None,
        published_delta_pct: None,
    })
}

/// Output files of a full run, by file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub summaries: Vec<FlowSummary>,
}

/// Runs all three flows and renders every report. The MTTR table uses the
/// unconstrained flow for scrubber types a to c and the constrained flow
/// for type d.
pub fn run_all(netlist: &MappedNetlist, dev: &FabricModel, cfg: &RunConfig) -> Result<Artifacts, PipelineError> {
    let mut runs = Vec::new();
    for flow in Flow::ALL {
        runs.push(run_flow(netlist, dev, flow, &cfg.options)?);
    }
    let summaries: Vec<FlowSummary> = runs.iter().map(|r| r.summary).collect();
    let chosen = &runs[cfg.flow as usize].design;
    let analysis = chosen.analyze(dev)?;

    let row = mttr_row(&netlist.name, &summaries)?;
    let mttr = analyze_row(&row, dev.total_frames(), cfg.timing)?;

    let mut files = BTreeMap::new();
    files.insert("design.json".to_string(), chosen.to_json());
    files.insert("essential.mask".to_string(), write_mask(&analysis.bits.essential, dev, &[]));
    files.insert(
        "critical.mask".to_string(),
        write_mask(&analysis.bits.critical, dev, &[CRITICAL_NOTE]),
    );
    files.insert("frames.csv".to_string(), analysis.frames.to_csv());
    files.insert("flows.csv".to_string(), flows_csv(&summaries));
    files.insert("mttr.csv".to_string(), mttr_table_csv(std::slice::from_ref(&mttr)));
    files.insert(
        "summary.json".to_string(),
        serde_json::to_string_pretty(&serde_json::json!({
            "design": netlist.name,
            "device": dev.fingerprint(),
            "emitted_flow": cfg.flow,
            "flows": summaries,
            "mttr": mttr,
            "unknown_latch_init": netlist.cells.iter().any(|c| matches!(c.kind, crate::blif::CellKind::FlipFlop { init } if init.is_unknown())),
        }))
        .expect("summary serializes")
            + "\n",
    );
    Ok(Artifacts { files, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blif::{parse_blif, tech_map};
    use proptest::prelude::*;

    fn mapped(text: &str) -> MappedNetlist {
        tech_map(&parse_blif(text).unwrap(), 6).unwrap()
    }

    fn bench(name: &str) -> MappedNetlist {
        let path = format!("{}/../../benchmarks/{name}.blif", env!("CARGO_MANIFEST_DIR"));
        mapped(&std::fs::read_to_string(path).unwrap())
    }

    fn dev() -> FabricModel {
        FabricModel::new(Default::default()).unwrap()
    }

    /// Random registered logic: `gates` 2-input gates over earlier signals,
    /// some of them latched and fed back.
    fn random_blif(seed: u64, gates: usize) -> String {
        let mut rng = crate::prng::Prng::new(seed);
        let mut t = String::from(".model r\n.inputs i0 i1 i2\n.outputs o\n");
        let mut sigs: Vec<String> = vec!["i0".into(), "i1".into(), "i2".into()];
        let fb = gates / 3;
        for k in 0..fb {
            sigs.push(format!("f{k}"));
        }
        for g in 0..gates {
            let a = sigs[rng.below(sigs.len())].clone();
            let b = sigs[rng.below(sigs.len())].clone();
            let rows = ["11 1", "10 1\n01 1", "1- 1\n-1 1", "00 1"][rng.below(4)];
            t.push_str(&format!(".names {a} {b} g{g}\n{rows}\n"));
            sigs.push(format!("g{g}"));
        }
        for k in 0..fb {
            t.push_str(&format!(".latch g{} f{k} 0\n", rng.below(gates)));
        }
        t.push_str(&format!(".names g{} o\n1 1\n.end\n", gates - 1));
        t
    }

    #[test]
    fn design_json_round_trip() {
        let d = dev();
        let design = implement(&bench("s27"), &d, Flow::C, &FlowOptions::default()).unwrap();
        let back = PlacedDesign::from_json(&design.to_json()).unwrap();
        assert_eq!(back, design);
        assert_eq!(back.to_json(), design.to_json());
    }

    #[test]
    fn flows_differ_only_in_constraints() {
        let d = dev();
        let n = bench("seqdet");
        let a = implement(&n, &d, Flow::A, &FlowOptions::default()).unwrap();
        assert!(a.mask.is_none());
        for flow in [Flow::B, Flow::C] {
            let x = implement(&n, &d, flow, &FlowOptions::default()).unwrap();
            let mask = x.mask.as_ref().unwrap();
            assert_eq!(x.packing, a.packing);
            assert!(x.placement.sites.iter().all(|s| mask.contains_tile(&d, s.tile)));
        }
    }

    #[test]
    fn constrained_routes_stay_in_mask_or_corridor() {
        let d = dev();
        let x = implement(&bench("crc8"), &d, Flow::C, &FlowOptions::default()).unwrap();
        let mask = x.mask.as_ref().unwrap();
        for net in &x.routing.nets {
            for nd in &net.nodes {
                assert!(mask.contains_tile(&d, nd.tile) || x.routing.corridor.contains(&nd.tile));
            }
        }
    }

    #[test]
    fn run_all_summarizes_three_flows() {
        let d = dev();
        let art = run_all(&bench("s27"), &d, &RunConfig::default()).unwrap();
        assert_eq!(art.summaries.iter().map(|s| s.flow).collect::<Vec<_>>(), Flow::ALL);
        let csv = &art.files["flows.csv"];
        assert_eq!(csv.lines().count(), 4);
        assert!(art.files["mttr.csv"].lines().nth(1).unwrap().starts_with("s27,"));
        assert!(art.files["critical.mask"].contains(CRITICAL_NOTE));
    }

    #[test]
    fn missing_flow_is_reported() {
        let d = dev();
        let run = run_flow(&bench("s27"), &d, Flow::A, &FlowOptions::default()).unwrap();
        assert!(matches!(mttr_row("s27", &[run.summary]), Err(ReliabilityError::MissingInput(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn random_designs_keep_bit_partition(seed in any::<u64>(), gates in 4usize..60) {
            let d = dev();
            let n = mapped(&random_blif(seed, gates));
            for flow in [Flow::A, Flow::C] {
                let opts = FlowOptions { place: PlaceOptions { seed, ..Default::default() }, ..Default::default() };
                let r = run_flow(&n, &d, flow, &opts).unwrap();
                let a = r.design.analyze(&d).unwrap();
                prop_assert!(a.bits.critical.is_subset(&a.bits.essential));
                prop_assert_eq!(a.frames.n_fr_used, a.bits.essential.frame_count());
                prop_assert_eq!(a.frames.frames.iter().map(|f| f.essential_bits).sum::<usize>(), a.bits.n_e());
            }
        }
    }
}
