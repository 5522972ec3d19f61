//! GCN aggregation traffic: bulk feature reads plus cacheline adjacency
//! reads, against the direct-to-DRAM baseline.
//!
//! `cargo run --release --example gcn_workload -- [edges]`

use memctl::baseline::run_baseline;
use memctl::workloads::{expected_adjacency_reuse, GcnParams, GcnStream};
use memctl::{ControllerConfig, DramTimingConfig, SimOptions};

fn main() {
    let edges = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24_000);
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    let p = GcnParams {
        num_edges: edges,
        ..Default::default()
    };
    p.validate().unwrap();
    println!(
        "{} vertices, {} edges (average degree {:.1}), {} B features",
        p.num_vertices,
        p.num_edges,
        p.average_degree(),
        p.feature_bytes
    );
    println!("expected adjacency reuse {:.3}", expected_adjacency_reuse(&p, &cfg));
    let r = memctl::simulate(&cfg, &t, GcnStream::new(p, &cfg, 1), SimOptions::default())
        .unwrap()
        .report;
    let b = run_baseline(&cfg, &t, GcnStream::new(p, &cfg, 1)).unwrap();
    print!("{}", r.with_baseline(b.total_cycles).to_text());
}
