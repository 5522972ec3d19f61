//! Single CNN layer: input bands by DMA, shared filter weights through the
//! cache.

use memctl::baseline::run_baseline;
use memctl::workloads::{class_counts, gen_cnn, CnnParams};
use memctl::{ControllerConfig, DramTimingConfig, SimOptions};

fn main() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    let p = CnnParams::default();
    let trace = gen_cnn(&p, &cfg, 1);
    println!(
        "{}x{}x{} input, {} filters of {}x{}: {:?}",
        p.image_width,
        p.image_height,
        p.in_channels,
        p.out_channels,
        p.kernel,
        p.kernel,
        class_counts(&trace)
    );
    let r = memctl::simulate(&cfg, &t, trace.requests.iter().cloned(), SimOptions::default())
        .unwrap()
        .report;
    let b = run_baseline(&cfg, &t, trace.requests).unwrap();
    print!("{}", r.with_baseline(b.total_cycles).to_text());
}
