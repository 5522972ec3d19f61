//! Cache engine: the functional LRU model, the analytic access time and a
//! timed run of a cacheline trace.

use memctl::cache::{cache_time, CacheOutcome, FunctionalCache};
use memctl::workloads::{gen_random, RandomParams};
use memctl::{ControllerConfig, DramTimingConfig, Op, SimOptions};

fn main() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    println!(
        "{} lines x {} B, {}-way, {} sets",
        cfg.cache_num_lines,
        cfg.cache_line_bytes(),
        cfg.cache_associativity,
        cfg.cache_num_sets()
    );

    let mut f = FunctionalCache::new(&cfg);
    let stride = cfg.cache_line_bytes() * cfg.cache_num_sets() as u64;
    for (i, addr) in [0, stride, 2 * stride, 3 * stride, 4 * stride, 0].iter().enumerate() {
        let op = if i % 2 == 0 { Op::Write } else { Op::Read };
        println!("{op} {addr:#9x}: {:?}", f.access(*addr, op));
    }

    let miss = CacheOutcome::Miss { t_sch: 9, t_mem_acc: 9 };
    for run in [
        vec![CacheOutcome::Hit],
        vec![miss],
        vec![miss, CacheOutcome::HitUnderMiss, CacheOutcome::Hit],
    ] {
        println!("analytic time {:?} = {}", run, cache_time(&run, &cfg));
    }

    for space in [1u64 << 17, 1 << 20, 1 << 24] {
        let trace = gen_random(&RandomParams::cacheline(20_000, space), &cfg, 1);
        let r = memctl::simulate(&cfg, &t, trace.requests, SimOptions::default())
            .unwrap()
            .report;
        println!(
            "random over {:>5} KB: hit rate {:.3}, {} writebacks, {} cycles",
            space >> 10,
            r.cache.hit_rate(),
            r.cache.writebacks,
            r.total_cycles
        );
    }
}
