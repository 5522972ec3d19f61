//! Reference memory interface: PEs wired straight to DRAM.
//!
//! Every request is split into PE-interface elements of `app_io_data_width`
//! bytes. A PE issues one element per cycle, starting no earlier than the
//! request's arrival and its previous element. Elements from all PEs enter a
//! single FIFO in `(cycle, pe)` order and are served one at a time by the
//! open-row DRAM model. There is no cache, reordering or DMA staging.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::config::{validate, ControllerConfig, DramTimingConfig};
use crate::controller::SimError;
use crate::dram::{decode_address, BankState};
use crate::report::SimReport;
use crate::request::{AccessClass, MemRequest, Op};

struct Stream {
    req: MemRequest,
    next_elem: u64,
    elems: u64,
}

/// Runs a trace through the baseline and returns its report.
pub fn run_baseline(
    cfg: &ControllerConfig,
    timing: &DramTimingConfig,
    trace: impl IntoIterator<Item = MemRequest>,
) -> Result<SimReport, SimError> {
    let v = validate(cfg, timing);
    if !v.is_ok() {
        return Err(SimError::Config(v.violations));
    }
    let width = u64::from(cfg.app_io_data_width.max(1));
    let beat = u64::from(cfg.mem_if_data_width.max(1));
    let mut input = trace.into_iter().peekable();
    let mut queued: Vec<VecDeque<MemRequest>> = vec![VecDeque::new(); cfg.num_pes.max(1)];
    let mut current: Vec<Option<Stream>> = (0..cfg.num_pes.max(1)).map(|_| None).collect();
    let mut pe_free = vec![0u64; cfg.num_pes.max(1)];
    // (element issue cycle, pe)
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut banks = BankState::new(timing.num_banks);
    let mut dram_free = 0u64;
    let mut report = SimReport::new("baseline");
    let mut total = 0u64;
    let mut last_arrival = 0u64;

    let start = |pe: usize,
                 queued: &mut Vec<VecDeque<MemRequest>>,
                 current: &mut Vec<Option<Stream>>,
                 pe_free: &[u64],
                 heap: &mut BinaryHeap<Reverse<(u64, usize)>>| {
        if current[pe].is_none() {
            if let Some(req) = queued[pe].pop_front() {
                let t = req.arrival_cycle.max(pe_free[pe]);
                let elems = req.total_size.div_ceil(width);
                current[pe] = Some(Stream {
                    req,
                    next_elem: 0,
                    elems,
                });
                heap.push(Reverse((t, pe)));
            }
        }
    };

    loop {
        // Pull ahead only while some PE is idle and the next request could
        // issue before the earliest pending element.
        while let Some(r) = input.peek() {
            let need = match heap.peek() {
                None => true,
                Some(Reverse((h, _))) => {
                    r.arrival_cycle <= *h
                        && current
                            .iter()
                            .zip(&queued)
                            .any(|(c, q)| c.is_none() && q.is_empty())
                }
            };
            if !need {
                break;
            }
            let r = input.next().unwrap();
            if r.arrival_cycle < last_arrival {
                return Err(SimError::Unordered(r.seq_no));
            }
            last_arrival = r.arrival_cycle;
            r.check(cfg)?;
            match r.access_class {
                AccessClass::Cacheline => report.cache_requests += 1,
                AccessClass::Bulk => report.bulk_requests += 1,
            }
            match r.op {
                Op::Read => report.reads += 1,
                Op::Write => report.writes += 1,
            }
            report.bytes += r.total_size;
            let pe = r.pe_id;
            queued[pe].push_back(r);
            start(pe, &mut queued, &mut current, &pe_free, &mut heap);
        }
        let Some(Reverse((t, pe))) = heap.pop() else {
            if input.peek().is_none() {
                break;
            }
            continue;
        };
        let s = current[pe].as_mut().expect("stream for heap entry");
        let off = s.next_elem * width;
        let bytes = width.min(s.req.total_size - off);
        let addr = s.req.address + off;
        let first_beat = addr / beat;
        let last_beat = (addr + bytes - 1) / beat;
        let mut latency = 0;
        for b in first_beat..=last_beat {
            latency += banks.access(decode_address(b * beat, timing), timing);
        }
        let begin = t.max(dram_free);
        dram_free = begin + latency;
        s.next_elem += 1;
        if s.next_elem == s.elems {
            total = total.max(dram_free);
            pe_free[pe] = t + 1;
            current[pe] = None;
            start(pe, &mut queued, &mut current, &pe_free, &mut heap);
        } else {
            heap.push(Reverse((t + 1, pe)));
        }
    }
    report.total_cycles = total;
    report.row = banks.stats;
    report.finalize();
    Ok(report)
}
