//! Event log of a mixed cache/DMA trace and the consistency checker run
//! over it.

use memctl::checker::consistency_order;
use memctl::events::EventLog;
use memctl::{ControllerConfig, DramTimingConfig, MemRequest, SimOptions};

fn main() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    let trace = vec![
        MemRequest::cache_read(0, 0x100, 64).at(0, 0),
        MemRequest::bulk_read(1, 0x4_0000, 2048, 64).at(1, 1),
        MemRequest::cache_write(2, 0x200, vec![5; 64]).at(2, 2),
        MemRequest::bulk_read(3, 0x8_0000, 1024, 64).at(3, 3),
        MemRequest::cache_read(0, 0x200, 64).at(4, 4),
    ];
    let out = memctl::simulate(&cfg, &t, trace, SimOptions { track_data: false, event_log: true }).unwrap();
    let log = out.log.unwrap();
    let text = log.render();
    for line in text.lines().filter(|l| !l.contains("dram-issued")) {
        println!("{line}");
    }
    let order: Vec<u64> = out.completions.iter().map(|c| c.seq_no).collect();
    println!("completion order {order:?}");
    println!("checker: {:?}", consistency_order(&log, 64));

    // Swap two completions and check again.
    let mut bad = EventLog::parse(&text).unwrap();
    let pos: Vec<usize> = bad
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.kind, memctl::events::EventKind::Completed))
        .map(|(i, _)| i)
        .collect();
    let (a, b) = (bad.events[pos[0]].seq_no, bad.events[pos[1]].seq_no);
    bad.events[pos[0]].seq_no = b;
    bad.events[pos[1]].seq_no = a;
    for v in consistency_order(&bad, 64).unwrap_err() {
        println!("tampered log: {v}");
    }
}
