//! Configuration documents and trace files: render, edit, parse, validate.

use memctl::config::{load_config, render, set_key, validate};
use memctl::workloads::{gen_random, read_trace, write_trace, RandomParams};
use memctl::{AccessClass, ControllerConfig, DramTimingConfig};

fn main() {
    let (mut c, mut t) = (ControllerConfig::default(), DramTimingConfig::default());
    set_key(&mut c, &mut t, "sched.batch_size", "32").unwrap();
    set_key(&mut c, &mut t, "dram.t_cl", "16").unwrap();
    let doc = render(&c, &t);
    print!("{doc}");
    assert_eq!(load_config(&doc).unwrap(), (c.clone(), t.clone()));

    c.cache_associativity = 3;
    for v in validate(&c, &t).violations {
        println!("rejected: {v}");
    }
    println!("{}", load_config("sched.batch_size = 12").unwrap_err());

    let p = RandomParams {
        class: AccessClass::Bulk,
        size: 1024,
        write_fraction: 0.5,
        ..RandomParams::cacheline(4, 1 << 20)
    };
    let trace = gen_random(&p, &ControllerConfig::default(), 42);
    let text = write_trace(&trace);
    print!("{text}");
    let back = read_trace(&text).unwrap();
    println!("parsed {} requests, payloads regenerated: {}", back.len(), back.requests == trace.requests);
}
