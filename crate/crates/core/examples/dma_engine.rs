//! DMA engine: analytic transfer times and timed bulk transfers.

use memctl::dma::{classify_runs, dma_transfer_time, element_count, AccessKind};
use memctl::workloads::payload_bytes;
use memctl::{ControllerConfig, DramTimingConfig, MemRequest, SimOptions};

fn main() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    for total in [64u64, 1024, 16 * 1024] {
        let n = element_count(total, &cfg);
        println!(
            "{total:>6} B = {n:>3} elements: sequential {} cycles, random {} cycles",
            dma_transfer_time(n, AccessKind::Seq, &cfg, &t),
            dma_transfer_time(n, AccessKind::Rand, &cfg, &t)
        );
    }
    println!("runs {:?}", classify_runs(&[0, 64, 128, 4096, 8192, 8256], 64));

    // Four buffers in flight, then a read-back of the first write.
    let data = payload_bytes(0x10_0000, 4096, 3);
    let mut trace: Vec<MemRequest> = (0..4u64)
        .map(|i| MemRequest::bulk_write(i as usize, 0x10_0000 + i * 4096, payload_bytes(0x10_0000 + i * 4096, 4096, 3), 64).at(0, i))
        .collect();
    trace.push(MemRequest::bulk_read(0, 0x10_0000, 4096, 64).at(1, 4));
    let out = memctl::simulate(&cfg, &t, trace, SimOptions { track_data: true, event_log: false }).unwrap();
    for c in &out.completions {
        println!("seq {} ({}) done at cycle {}", c.seq_no, c.op, c.cycle);
    }
    let back = out.completions.iter().find(|c| c.seq_no == 4).unwrap();
    println!("read-back matches: {}", back.data == data);
    println!("{:?}, DMA share {:.3}", out.report.dma, out.report.dma_share);
}
