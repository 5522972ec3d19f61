//! Weak-consistency checker over an event log.
//!
//! Rules, with cache (C) and DMA (D) requests numbered in submission order:
//!
//! * `a`: cache requests complete in submission order.
//! * `b`: DMA requests complete in submission order.
//! * `c`: a cache request submitted while no earlier DMA was outstanding
//!   completes before every later DMA.
//! * `d`: a cache request submitted while an earlier DMA was outstanding
//!   completes after every earlier DMA.
//! * `e`: at each address, DRAM sees one engine's accesses in submission
//!   order whenever a write is involved. Cache and DMA traffic to the same
//!   address is left to the PEs to avoid and is not ordered here.
//!
//! Every submitted request must also complete exactly once.

use std::collections::HashMap;
use std::fmt;

use crate::events::{EventKind, EventLog, IssueSource};
use crate::request::{AccessClass, Op};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyViolation {
    pub rule: char,
    pub first: u64,
    pub second: u64,
    pub detail: String,
}

impl fmt::Display for ConsistencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rule {}: requests {} and {}: {}",
            self.rule, self.first, self.second, self.detail
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    lo: u64,
    hi: u64,
    max_any: u64,
    max_write: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
struct Req {
    class: AccessClass,
    submit: u64,
    complete: Option<(u64, usize)>,
}

/// Checks a log. Rule `e` compares exact byte ranges, bucketed by
/// `granule` bytes (normally the memory interface width).
pub fn consistency_order(log: &EventLog, granule: u64) -> Result<(), Vec<ConsistencyViolation>> {
    let granule = granule.max(1);
    let mut v = Vec::new();
    let mut reqs: HashMap<u64, Req> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    let mut completions = 0usize;
    // Per (granule, engine): byte range within the granule, highest seq and
    // highest write seq seen for exactly that range.
    let mut addr: HashMap<(u64, bool), Vec<Span>> = HashMap::new();

    for e in &log.events {
        match e.kind {
            EventKind::Submitted { class, .. } => {
                if reqs
                    .insert(
                        e.seq_no,
                        Req {
                            class,
                            submit: e.cycle,
                            complete: None,
                        },
                    )
                    .is_some()
                {
                    v.push(violation('-', e.seq_no, e.seq_no, "submitted twice"));
                }
                order.push(e.seq_no);
            }
            EventKind::Completed => match reqs.get_mut(&e.seq_no) {
                Some(r) if r.complete.is_none() => {
                    r.complete = Some((e.cycle, completions));
                    completions += 1;
                }
                Some(_) => v.push(violation('-', e.seq_no, e.seq_no, "completed twice")),
                None => v.push(violation('-', e.seq_no, e.seq_no, "completed without submission")),
            },
            EventKind::DramIssued {
                op,
                address,
                bytes,
                source,
            } => {
                let dma = source == IssueSource::Dma;
                let first = address / granule;
                let last = (address + u64::from(bytes.max(1)) - 1) / granule;
                let end = address + u64::from(bytes.max(1));
                for g in first..=last {
                    let lo = address.max(g * granule);
                    let hi = end.min((g + 1) * granule);
                    let spans = addr.entry((g, dma)).or_default();
                    let worst = spans
                        .iter()
                        .filter(|s| s.lo < hi && lo < s.hi)
                        .filter_map(|s| match op {
                            Op::Write => Some(s.max_any),
                            Op::Read => s.max_write,
                        })
                        .max();
                    if let Some(w) = worst.filter(|&w| w > e.seq_no) {
                        v.push(violation(
                            'e',
                            w,
                            e.seq_no,
                            &format!("address {lo:#x} reached DRAM out of order"),
                        ));
                    }
                    match spans.iter_mut().find(|s| s.lo == lo && s.hi == hi) {
                        Some(s) => {
                            s.max_any = s.max_any.max(e.seq_no);
                            if op == Op::Write {
                                s.max_write = Some(s.max_write.map_or(e.seq_no, |w| w.max(e.seq_no)));
                            }
                        }
                        None => spans.push(Span {
                            lo,
                            hi,
                            max_any: e.seq_no,
                            max_write: (op == Op::Write).then_some(e.seq_no),
                        }),
                    }
                }
            }
            _ => {}
        }
    }

    order.sort_unstable();
    for &s in &order {
        if reqs[&s].complete.is_none() {
            v.push(violation('-', s, s, "never completed"));
        }
    }
    let done = |s: u64| reqs[&s].complete;

    // Rules a and b: completion index increases with seq within a class.
    for class in [AccessClass::Cacheline, AccessClass::Bulk] {
        let rule = if class == AccessClass::Cacheline { 'a' } else { 'b' };
        let mut prev: Option<(u64, usize)> = None;
        for &s in order.iter().filter(|s| reqs[s].class == class) {
            let Some((_, idx)) = done(s) else { continue };
            if let Some((p, pidx)) = prev {
                if idx < pidx {
                    v.push(violation(rule, p, s, "completed out of submission order"));
                }
            }
            prev = Some((s, idx));
        }
    }

    // Rules c and d.
    let dmas: Vec<u64> = order
        .iter()
        .copied()
        .filter(|s| reqs[s].class == AccessClass::Bulk)
        .collect();
    for &c in order.iter().filter(|s| reqs[s].class == AccessClass::Cacheline) {
        let cr = reqs[&c];
        let Some((_, cidx)) = cr.complete else { continue };
        let outstanding = dmas
            .iter()
            .take_while(|&&d| d < c)
            .any(|&d| done(d).is_none_or(|(t, _)| t >= cr.submit));
        if outstanding {
            for &d in dmas.iter().take_while(|&&d| d < c) {
                if let Some((_, didx)) = done(d) {
                    if didx > cidx {
                        v.push(violation('d', d, c, "cache request finished before an earlier DMA"));
                    }
                }
            }
        } else {
            for &d in dmas.iter().filter(|&&d| d > c) {
                if let Some((_, didx)) = done(d) {
                    if didx < cidx {
                        v.push(violation('c', c, d, "later DMA finished before the cache request"));
                    }
                }
            }
        }
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn violation(rule: char, first: u64, second: u64, detail: &str) -> ConsistencyViolation {
    ConsistencyViolation {
        rule,
        first,
        second,
        detail: detail.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn submit(log: &mut EventLog, cycle: u64, seq: u64, class: AccessClass) {
        log.push(
            cycle,
            seq,
            EventKind::Submitted {
                pe_id: 0,
                class,
                op: Op::Read,
                address: seq * 4096,
                size: 64,
            },
        );
    }

    #[test]
    fn c_d_c_in_order_passes() {
        let mut log = EventLog::default();
        submit(&mut log, 0, 0, AccessClass::Cacheline);
        submit(&mut log, 1, 1, AccessClass::Bulk);
        submit(&mut log, 2, 2, AccessClass::Cacheline);
        log.push(20, 0, EventKind::Completed);
        log.push(300, 1, EventKind::Completed);
        log.push(320, 2, EventKind::Completed);
        assert!(consistency_order(&log, 64).is_ok());
    }

    #[test]
    fn cache_overtaking_dma_is_flagged() {
        let mut log = EventLog::default();
        submit(&mut log, 0, 0, AccessClass::Bulk);
        submit(&mut log, 1, 1, AccessClass::Cacheline);
        log.push(20, 1, EventKind::Completed);
        log.push(300, 0, EventKind::Completed);
        let v = consistency_order(&log, 64).unwrap_err();
        assert_eq!((v[0].rule, v[0].first, v[0].second), ('d', 0, 1));
    }

    #[test]
    fn dma_overtaking_earlier_cache_is_flagged() {
        let mut log = EventLog::default();
        submit(&mut log, 0, 0, AccessClass::Cacheline);
        submit(&mut log, 1, 1, AccessClass::Bulk);
        log.push(200, 1, EventKind::Completed);
        log.push(300, 0, EventKind::Completed);
        let v = consistency_order(&log, 64).unwrap_err();
        assert_eq!(v[0].rule, 'c');
    }

    #[test]
    fn fifo_and_loss() {
        let mut log = EventLog::default();
        submit(&mut log, 0, 0, AccessClass::Cacheline);
        submit(&mut log, 0, 1, AccessClass::Cacheline);
        submit(&mut log, 0, 2, AccessClass::Cacheline);
        log.push(5, 1, EventKind::Completed);
        log.push(6, 0, EventKind::Completed);
        let v = consistency_order(&log, 64).unwrap_err();
        let rules: Vec<char> = v.iter().map(|x| x.rule).collect();
        assert!(rules.contains(&'a'));
        assert!(rules.contains(&'-'));
    }

    #[test]
    fn same_address_write_reorder_is_flagged() {
        let mut log = EventLog::default();
        for (seq, op) in [(3, Op::Write), (2, Op::Read)] {
            log.push(
                seq,
                seq,
                EventKind::DramIssued {
                    op,
                    address: 0x100,
                    bytes: 64,
                    source: crate::events::IssueSource::Dma,
                },
            );
        }
        let v = consistency_order(&log, 64).unwrap_err();
        assert_eq!(v[0].rule, 'e');
    }

    #[test]
    fn cross_engine_overlap_is_not_ordered() {
        let mut log = EventLog::default();
        for (seq, source) in [(3, IssueSource::Dma), (2, IssueSource::Fill)] {
            log.push(
                seq,
                seq,
                EventKind::DramIssued {
                    op: if seq == 3 { Op::Write } else { Op::Read },
                    address: 0x100,
                    bytes: 64,
                    source,
                },
            );
        }
        assert!(consistency_order(&log, 64).is_ok());
    }
}
