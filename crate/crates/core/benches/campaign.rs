use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scrubplan::blif::{parse_blif, tech_map};
use scrubplan::design::Flow;
use scrubplan::fabric::FabricModel;
use scrubplan::faultsim::{run_campaign, select_bits, BitSelection, CampaignConfig};
use scrubplan::pipeline::{implement, FlowOptions};
use scrubplan::prng::DEFAULT_SEED;

fn campaign(c: &mut Criterion) {
    let dev = FabricModel::new(Default::default()).unwrap();
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    for name in ["lfsr16", "crc8"] {
        let path = format!("{}/../../benchmarks/{name}.blif", env!("CARGO_MANIFEST_DIR"));
        let n = tech_map(&parse_blif(&std::fs::read_to_string(path).unwrap()).unwrap(), 6).unwrap();
        let design = implement(&n, &dev, Flow::C, &FlowOptions::default()).unwrap();
        let stat = design.analyze(&dev).unwrap().bits;
        let bits = select_bits(BitSelection::Essential, &dev, &stat);
        // workers = 1 is the sequential path; 0 uses the rayon pool when the
        // `parallel` feature is on
        for (label, workers) in [("sequential", 1), ("parallel", 0)] {
            let cfg = CampaignConfig {
                vectors: 2_000,
                seed: DEFAULT_SEED,
                workers,
            };
            group.bench_with_input(BenchmarkId::new(label, name), &cfg, |b, cfg| {
                b.iter(|| run_campaign(&design, &dev, &bits, cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
