//! Batch formation and bitonic reordering, driven by hand.

use memctl::dram::{decode_address, encode_address, DecodedAddress};
use memctl::scheduler::{network_stages, schedule_cycles, MemAccess, Origin, Scheduler};
use memctl::{ControllerConfig, DramTimingConfig, Op};

fn main() {
    let t = DramTimingConfig::default();
    let cfg = ControllerConfig {
        sched_batch_size: 8,
        sched_bypass_window: 0,
        ..Default::default()
    };
    for n in [4usize, 8, 16, 32, 64, 128] {
        let c = ControllerConfig {
            sched_batch_size: n,
            ..cfg.clone()
        };
        println!(
            "N={n:<4} stages={:<3} schedule_cycles={}",
            network_stages(n),
            schedule_cycles(n, &c)
        );
    }

    let mut s = Scheduler::new(&cfg, &t);
    let rows = [9u64, 2, 9, 5, 2, 7, 5, 9];
    for (seq, &row) in rows.iter().enumerate() {
        let address = encode_address(DecodedAddress { row, bank: 1, column: seq as u64 * 64 }, &t);
        let access = MemAccess {
            address,
            bytes: 64,
            op: Op::Read,
            seq_no: seq as u64,
            origin: Origin::Writeback,
            data: Vec::new(),
        };
        println!("cycle 0: enqueue seq {seq} row {row} -> {:?}", s.enqueue(access, 0).unwrap());
    }
    let mut cycle = 0;
    let mut out = Vec::new();
    while out.len() < rows.len() {
        cycle += 1;
        s.tick(cycle);
        while let Some(a) = s.pop_ready() {
            out.push((decode_address(a.address, &t).row, a.seq_no, cycle));
        }
    }
    for (row, seq, c) in out {
        println!("cycle {c}: issue row {row} (seq {seq})");
    }
    println!("{:?}", s.stats);
}
