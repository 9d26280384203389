use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use scrubplan::bitclass::{write_mask, CRITICAL_NOTE};
use scrubplan::blif::{parse_blif, tech_map, MappedNetlist};
use scrubplan::design::{Flow, PlacedDesign};
use scrubplan::fabric::{describe, describe_tile_csv, DeviceSpec, FabricModel, Tile};
use scrubplan::faultsim::{compare_to_static, run_campaign, select_bits, BitSelection, CampaignConfig, DEFAULT_VECTORS};
use scrubplan::graph::{build_graph, classify, classify_report};
use scrubplan::pipeline::{mttr_row, run_all, FlowOptions, FlowSummary, RunConfig};
use scrubplan::prng::DEFAULT_SEED;
use scrubplan::reliability::{analyze_row, published_input, mttr_table, mttr_table_csv, AnalyzeInput, Timing};

#[derive(Parser)]
#[command(name = "scrubplan", version, about = "Reliability-aware floorplanning and scrubbing analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and technology-map a BLIF file and print netlist statistics.
    Parse {
        blif: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Also write the mapped netlist as JSON.
        #[arg(long)]
        mapped: Option<PathBuf>,
    },
    /// Critical/essential classification of every cell and net, as JSON.
    Classify {
        blif: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all three flows and write design, masks and reports.
    Run(RunArgs),
    /// MTTR table from bit and frame counts.
    Analyze(AnalyzeArgs),
    /// Fault-injection campaign on a placed design.
    Inject(InjectArgs),
    /// Fabric geometry as JSON, or the bit layout of one tile as CSV.
    DescribeFabric {
        #[arg(long)]
        device: Option<PathBuf>,
        /// Tile as COL,ROW.
        #[arg(long, value_parser = parse_tile)]
        tile: Option<Tile>,
    },
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long)]
    t_check_ns: Option<u64>,
    #[arg(long)]
    t_repair_e_ns: Option<u64>,
    #[arg(long)]
    t_repair_c_ns: Option<u64>,
}

impl TimingArgs {
    fn apply(&self, mut t: Timing) -> Timing {
        if let Some(v) = self.t_check_ns {
            t.t_check_ns = v;
        }
        if let Some(v) = self.t_repair_e_ns {
            t.t_repair_e_ns = v;
        }
        if let Some(v) = self.t_repair_c_ns {
            t.t_repair_c_ns = v;
        }
        t
    }
}

#[derive(Args)]
struct RunArgs {
    blif: PathBuf,
    #[arg(long)]
    device: Option<PathBuf>,
    /// Flow whose design and masks are written (all three are compared).
    #[arg(long, default_value = "c")]
    flow: Flow,
    #[arg(long, env = "SCRUBPLAN_SEED", value_parser = parse_seed)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, short, default_value = "scrubplan_out")]
    out: PathBuf,
    /// Write the essential and critical masks to this directory as well.
    #[arg(long)]
    emit_masks: Option<PathBuf>,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Parameters JSON (n_fr_total, timing, rows).
    #[arg(long, conflicts_with_all = ["published", "run"])]
    input: Option<PathBuf>,
    /// Use the bundled transcribed table.
    #[arg(long)]
    published: bool,
    /// Output directory of a previous `run`.
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    design: PathBuf,
    /// essential, critical, all, or `region COL/REG`.
    #[arg(long, num_args = 1..=2, default_values_t = ["essential".to_string()])]
    bits: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_VECTORS)]
    vectors: u64,
    #[arg(long, env = "SCRUBPLAN_SEED", value_parser = parse_seed)]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, short, default_value = "inject_out")]
    out: PathBuf,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(&h.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    r.map_err(|e| format!("bad seed `{s}`: {e}"))
}

fn parse_tile(s: &str) -> Result<Tile, String> {
    let (c, r) = s.split_once(',').ok_or("expected COL,ROW")?;
    Ok(Tile {
        col: c.trim().parse().map_err(|e| format!("{e}"))?,
        row: r.trim().parse().map_err(|e| format!("{e}"))?,
    })
}

fn parse_selection(words: &[String]) -> Result<BitSelection> {
    let sel = match words {
        [w] if w == "essential" => BitSelection::Essential,
        [w] if w == "critical" => BitSelection::Critical,
        [w] if w == "all" => BitSelection::All,
        [w, at] if w == "region" => {
            let (c, r) = at.split_once('/').context("region wants COL/REG")?;
            BitSelection::Block {
                column: c.parse().context("region column")?,
                region: r.parse().context("region index")?,
            }
        }
        _ => bail!("--bits expects essential, critical, all or `region COL/REG`, got {words:?}"),
    };
    Ok(sel)
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_netlist(path: &Path, k: usize) -> Result<MappedNetlist> {
    let text = read(path)?;
    let n = parse_blif(&text).with_context(|| format!("parsing {}", path.display()))?;
    tech_map(&n, k).with_context(|| format!("mapping {}", path.display()))
}

fn load_device(path: Option<&Path>) -> Result<FabricModel> {
    let spec = match path {
        Some(p) => {
            let text = read(p)?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize::<_, DeviceSpec>(de)
                .with_context(|| format!("device spec {}", p.display()))?
        }
        None => DeviceSpec::default(),
    };
    Ok(FabricModel::new(spec)?)
}

fn cmd_parse(blif: &Path, k: usize, mapped: Option<&Path>) -> Result<()> {
    let n = load_netlist(blif, k)?;
    if let Some(p) = mapped {
        write(p, &serde_json::to_string_pretty(&n)?)?;
    }
    let summary = json!({
        "model": n.name,
        "inputs": n.inputs.len(),
        "outputs": n.outputs.len(),
        "luts": n.lut_count(),
        "ffs": n.ff_count(),
        "cells": n.len(),
        "max_lut_arity": n.max_lut_arity(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_classify(blif: &Path, k: usize, out: Option<&Path>) -> Result<()> {
    let n = load_netlist(blif, k)?;
    let g = build_graph(&n);
    let c = classify(&g);
    let text = serde_json::to_string_pretty(&classify_report(&n, &g, &c))? + "\n";
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let n = load_netlist(&a.blif, a.k)?;
    let dev = load_device(a.device.as_deref())?;
    let mut options = FlowOptions::default();
    options.place.seed = a.seed.unwrap_or(DEFAULT_SEED);
    let cfg = RunConfig {
        flow: a.flow,
        options,
        timing: a.timing.apply(Timing::default()),
    };
    let art = run_all(&n, &dev, &cfg).with_context(|| format!("implementing {}", a.blif.display()))?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    for (name, text) in &art.files {
        write(&a.out.join(name), text)?;
    }
    if let Some(dir) = &a.emit_masks {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for name in ["essential.mask", "critical.mask"] {
            write(&dir.join(name), &art.files[name])?;
        }
    }
    for s in &art.summaries {
        eprintln!(
            "flow {}: {} slices, N_fr_used {}, n_e {}, n_c {}",
            s.flow, s.slices, s.n_fr_used, s.n_e, s.n_c
        );
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let reports = if let Some(dir) = &a.run {
        let path = dir.join("summary.json");
        let v: serde_json::Value = serde_json::from_str(&read(&path)?)?;
        let flows: Vec<FlowSummary> =
            serde_path_to_error::deserialize(&v["flows"]).with_context(|| format!("{}: /flows", path.display()))?;
        let dev: FabricModel = match dir.join("design.json") {
            p if p.exists() => PlacedDesign::from_json(&read(&p)?)?.device()?,
            _ => FabricModel::new(DeviceSpec::default())?,
        };
        let circuit = v["design"].as_str().unwrap_or("design");
        let row = mttr_row(circuit, &flows)?;
        vec![analyze_row(&row, dev.total_frames(), a.timing.apply(Timing::default()))?]
    } else {
        let mut input: AnalyzeInput = if a.published {
            published_input()
        } else {
            let Some(path) = &a.input else {
                bail!("give one of --input FILE, --published or --run DIR");
            };
            let text = read(path)?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                anyhow::anyhow!("{}: schema error at {}: {}", path.display(), json_pointer(e.path()), e.inner())
            })?
        };
        input.timing = a.timing.apply(input.timing);
        mttr_table(&input)?
    };
    let csv = mttr_table_csv(&reports);
    match &a.csv {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &a.json {
        write(p, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(())
}

fn cmd_inject(a: &InjectArgs) -> Result<()> {
    let design = PlacedDesign::from_json(&read(&a.design)?).with_context(|| format!("design {}", a.design.display()))?;
    let dev = design.device()?;
    let stat = design.analyze(&dev)?.bits;
    let sel = parse_selection(&a.bits)?;
    let bits = select_bits(sel, &dev, &stat);
    let cfg = CampaignConfig {
        vectors: a.vectors,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        workers: a.workers,
    };
    let result = run_campaign(&design, &dev, &bits, &cfg)?;
    let cmp = compare_to_static(&result, &stat);
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write(&a.out.join("campaign.csv"), &result.to_csv())?;
    let summary = json!({
        "design": design.netlist.name,
        "flow": design.flow,
        "bits": a.bits.join(" "),
        "vectors": result.vectors,
        "seed": result.seed,
        "settle_window": result.settle_window,
        "bits_tested": result.bits.len(),
        "simulated": result.simulated(),
        "effects": result.effect_counts(),
        "comparison": cmp,
        "sound": cmp.is_sound(),
    });
    write(&a.out.join("campaign.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    write(&a.out.join("fi_essential.mask"), &write_mask(&result.fi_essential(), &dev, &[]))?;
    write(
        &a.out.join("fi_critical.mask"),
        &write_mask(&result.fi_critical(), &dev, &[CRITICAL_NOTE]),
    )?;
    eprintln!(
        "{} bits, {} essential, {} critical observed; {}",
        result.bits.len(),
        cmp.fi_essential,
        cmp.fi_critical,
        if cmp.is_sound() { "sound" } else { "UNSOUND" }
    );
    Ok(())
}

fn cmd_describe(device: Option<&Path>, tile: Option<Tile>) -> Result<()> {
    let dev = load_device(device)?;
    match tile {
        Some(t) => print!("{}", describe_tile_csv(&dev, t)?),
        None => println!("{}", serde_json::to_string_pretty(&describe(&dev))?),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Parse { blif, k, mapped } => cmd_parse(blif, *k, mapped.as_deref()),
        Cmd::Classify { blif, k, out } => cmd_classify(blif, *k, out.as_deref()),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Inject(a) => cmd_inject(a),
        Cmd::DescribeFabric { device, tile } => cmd_describe(device.as_deref(), *tile),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
