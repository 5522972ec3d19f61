//! Moving 16 KB through a narrow PE interface: one DMA transfer against a
//! stream of cacheline requests.

use memctl::workloads::gen_sequential;
use memctl::{AccessClass, ControllerConfig, DramTimingConfig, SimOptions};

fn main() {
    let t = DramTimingConfig::default();
    let total = 16 * 1024;
    println!("{:>6} {:>10} {:>12} {:>7}", "width", "dma", "cache-only", "ratio");
    for width in [1u32, 2, 4, 8, 16, 32, 64] {
        let cfg = ControllerConfig {
            app_io_data_width: width,
            ..Default::default()
        };
        let bulk = gen_sequential(total, total, AccessClass::Bulk, 0, &cfg, 1);
        let dma = memctl::simulate(&cfg, &t, bulk.requests, SimOptions::default()).unwrap().report;
        let cache_cfg = ControllerConfig {
            enable_dma: false,
            ..cfg
        };
        let lines = gen_sequential(total, u64::from(width), AccessClass::Cacheline, 0, &cache_cfg, 1);
        let cache = memctl::simulate(&cache_cfg, &t, lines.requests, SimOptions::default())
            .unwrap()
            .report;
        println!(
            "{width:>6} {:>10} {:>12} {:>7.1}",
            dma.total_cycles,
            cache.total_cycles,
            cache.total_cycles as f64 / dma.total_cycles as f64
        );
    }
}
