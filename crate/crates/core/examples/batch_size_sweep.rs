//! Total time against scheduler batch size on saturated random traffic.

use memctl::report::sweep_text;
use memctl::sweep::sweep;
use memctl::workloads::{gen_random, RandomParams};
use memctl::{ControllerConfig, DramTimingConfig};

fn main() {
    let cfg = ControllerConfig {
        allow_out_of_range: true,
        ..Default::default()
    };
    let t = DramTimingConfig::default();
    let trace = gen_random(&RandomParams::cacheline(20_000, 1 << 20), &cfg, 9);
    let values: Vec<String> = [4, 8, 16, 32, 64, 128, 256, 512].iter().map(|n: &u32| n.to_string()).collect();
    let rows = sweep(&cfg, &t, &trace.requests, "sched.batch_size", &values, true).unwrap();
    print!("{}", sweep_text("sched.batch_size", &rows));
}
