//! Top-level cycle-stepped controller model.
//!
//! Each cycle runs, in order: request submission on the input port, the
//! scheduler tick, DRAM completion and issue, the cache and DMA engines, and
//! the arbiter that moves one engine access into the scheduler. Cycles in
//! which nothing can change are skipped.
//!
//! Ordering between the engines: a cache request submitted while any DMA
//! transfer is outstanding is held at the front end until the DMA queue
//! drains, and a DMA transfer starts only after every earlier cache request
//! that was not held has completed.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::cache::CacheEngine;
use crate::config::{validate, ControllerConfig, DramTimingConfig, Violation};
use crate::dma::DmaEngine;
use crate::dram::{decode_address, BankState, DataStore};
use crate::events::{EventKind, EventLog};
use crate::report::SimReport;
use crate::request::{flit_encode, route_class, AccessClass, Destination, Flit, MemRequest, Op, RequestError};
use crate::scheduler::{schedule_cycles, MemAccess, Origin, Scheduler};

/// Cache requests waiting at the front end for a DMA burst to finish.
pub const HELD_CAPACITY: usize = 64;
/// Requests queued in front of the cache PE pipeline.
pub const CACHE_INPUT_DEPTH: usize = 16;
/// Cycles without progress or a pending event before a run is declared stuck.
const STUCK_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Carry data through the model and return read bytes.
    pub track_data: bool,
    pub event_log: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<Violation>),
    #[error("trace: {0}")]
    Trace(#[from] RequestError),
    #[error("trace: arrival cycles go backwards at request {0}")]
    Unordered(u64),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grant {
    Cache,
    Dma,
    None,
}

/// DRAM-issue arbitration between the engines. The cache wins unless a DMA
/// transfer has started; an active transfer keeps the grant until it is done.
pub fn arbitrate(cache_pending: bool, dma_armed: bool, dma_active: bool) -> Grant {
    if dma_active {
        if dma_armed {
            Grant::Dma
        } else {
            Grant::None
        }
    } else if cache_pending {
        Grant::Cache
    } else if dma_armed {
        Grant::Dma
    } else {
        Grant::None
    }
}

/// A finished request as seen by its PE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub seq_no: u64,
    pub pe_id: usize,
    pub op: Op,
    pub cycle: u64,
    /// Cache outcome for cacheline requests; `None` for bulk.
    pub cache_hit: Option<bool>,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct SimOutput {
    pub report: SimReport,
    pub log: Option<EventLog>,
    /// Completions in completion order; filled only when tracking data or
    /// logging.
    pub completions: Vec<Completion>,
}

/// Request being moved through the input port flit by flit.
struct PortState {
    req: MemRequest,
    dest: Destination,
    flits: VecDeque<Flit>,
    held: bool,
}

struct Sim<'a> {
    cfg: &'a ControllerConfig,
    timing: &'a DramTimingConfig,
    opts: SimOptions,
    cycle: u64,
    progress: u64,
    sched: Scheduler,
    cache: CacheEngine,
    dma: DmaEngine,
    banks: BankState,
    store: DataStore,
    dram_busy: Option<(u64, MemAccess)>,
    dma_stage: Option<MemAccess>,
    port: Option<PortState>,
    held: VecDeque<MemRequest>,
    /// Delivered, uncompleted cache requests.
    active_cache: BTreeSet<u64>,
    /// Cache addresses in flight (held or delivered), for overlap warnings.
    cache_addrs: HashMap<u64, (u64, u32)>,
    dma_ranges: HashMap<u64, (u64, u64)>,
    outstanding: u64,
    last_completion: u64,
    report: SimReport,
    log: Option<EventLog>,
    completions: Vec<Completion>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ControllerConfig, timing: &'a DramTimingConfig, opts: SimOptions) -> Self {
        let log = opts.event_log.then(EventLog::default);
        Self {
            cfg,
            timing,
            cycle: 0,
            progress: 0,
            sched: Scheduler::new(cfg, timing),
            cache: CacheEngine::new(cfg, opts.track_data),
            dma: DmaEngine::new(cfg, opts.track_data),
            banks: BankState::new(timing.num_banks),
            store: DataStore::default(),
            dram_busy: None,
            dma_stage: None,
            port: None,
            held: VecDeque::new(),
            active_cache: BTreeSet::new(),
            cache_addrs: HashMap::new(),
            dma_ranges: HashMap::new(),
            outstanding: 0,
            last_completion: 0,
            report: SimReport::new("controller"),
            log,
            completions: Vec::new(),
            opts,
        }
    }

    fn event(&mut self, seq: u64, kind: EventKind) {
        if let Some(l) = &mut self.log {
            l.push(self.cycle, seq, kind);
        }
    }

    fn overlaps_dma(&self, addr: u64, size: u64) -> bool {
        self.dma_ranges.values().any(|&(lo, hi)| addr < hi && lo < addr + size)
    }

    fn overlaps_cache(&self, addr: u64, size: u64) -> bool {
        self.cache_addrs
            .values()
            .any(|&(a, n)| a < addr + size && addr < a + u64::from(n))
    }

    /// Tries to start the next request on the input port.
    fn admit(&mut self, req: MemRequest) -> Result<Option<MemRequest>, SimError> {
        req.check(self.cfg)?;
        let dest = route_class(req.access_class, self.cfg)?;
        let held = match dest {
            Destination::CacheEngine => {
                let held = self.dma.pending() || !self.held.is_empty();
                let room = if held {
                    self.held.len() < HELD_CAPACITY
                } else {
                    self.cache.queued() < CACHE_INPUT_DEPTH
                };
                if !room {
                    return Ok(Some(req));
                }
                held
            }
            Destination::DmaEngine => {
                if !self.dma.can_accept_header(req.pe_id) {
                    self.dma.stats.backpressure_cycles += 1;
                    return Ok(Some(req));
                }
                false
            }
        };
        let overlap = match dest {
            Destination::CacheEngine => self.overlaps_dma(req.address, req.total_size),
            Destination::DmaEngine => self.overlaps_cache(req.address, req.total_size),
        };
        if overlap {
            self.report.overlap_warnings += 1;
        }
        self.event(
            req.seq_no,
            EventKind::Submitted {
                pe_id: req.pe_id,
                class: req.access_class,
                op: req.op,
                address: req.address,
                size: req.total_size,
            },
        );
        self.event(req.seq_no, EventKind::Routed(dest));
        match req.access_class {
            AccessClass::Cacheline => {
                self.report.cache_requests += 1;
                self.cache_addrs
                    .insert(req.seq_no, (req.address, req.total_size as u32));
            }
            AccessClass::Bulk => {
                self.report.bulk_requests += 1;
                self.dma_ranges
                    .insert(req.seq_no, (req.address, req.address + req.total_size));
            }
        }
        match req.op {
            Op::Read => self.report.reads += 1,
            Op::Write => self.report.writes += 1,
        }
        self.report.bytes += req.total_size;
        self.outstanding += 1;
        let mut flits: VecDeque<Flit> = match (dest, req.op) {
            (Destination::DmaEngine, _) | (_, Op::Write) => flit_encode(&req, self.cfg)?.into(),
            _ => VecDeque::new(),
        };
        if dest == Destination::DmaEngine {
            let header = flits.pop_front().expect("header flit");
            self.dma
                .dma_accept(&header, self.cycle + self.cfg.ctrl_overhead)
                .map_err(|e| SimError::Invariant(e.to_string()))?;
        } else if !flits.is_empty() {
            flits.pop_front();
        }
        let state = PortState {
            req,
            dest,
            flits,
            held,
        };
        if state.flits.is_empty() {
            self.finish_port(state);
        } else {
            self.port = Some(state);
        }
        Ok(None)
    }

    fn finish_port(&mut self, p: PortState) {
        if p.dest == Destination::CacheEngine {
            if p.held {
                self.held.push_back(p.req);
            } else {
                self.active_cache.insert(p.req.seq_no);
                let ready = self.cycle + self.cfg.ctrl_overhead;
                self.cache.deliver(p.req, ready);
            }
        }
    }

    /// Moves one payload flit through the port.
    fn feed_payload(&mut self) -> Result<(), SimError> {
        let mut p = self.port.take().expect("port busy");
        let flit = p.flits.pop_front().expect("payload flit");
        if p.dest == Destination::DmaEngine {
            self.dma
                .dma_accept(&flit, self.cycle + self.cfg.ctrl_overhead)
                .map_err(|e| SimError::Invariant(e.to_string()))?;
        }
        if p.flits.is_empty() {
            self.finish_port(p);
        } else {
            self.port = Some(p);
        }
        Ok(())
    }

    fn release_held(&mut self) {
        if self.dma.pending() || self.held.is_empty() {
            return;
        }
        let ready = self.cycle;
        while let Some(r) = self.held.pop_front() {
            self.active_cache.insert(r.seq_no);
            self.cache.deliver(r, ready);
        }
        self.progress += 1;
    }

    fn dram(&mut self) {
        if let Some((done, _)) = &self.dram_busy {
            if *done <= self.cycle {
                let (_, a) = self.dram_busy.take().unwrap();
                self.progress += 1;
                match a.origin {
                    Origin::CacheFill { line } => self.cache.fill_arrived(line, a.data),
                    Origin::Dma { buffer, element } => {
                        self.dma.element_done(buffer, element, &a.data, self.cycle)
                    }
                    Origin::Writeback => {}
                }
            }
        }
        if self.dram_busy.is_none() {
            if let Some(mut a) = self.sched.pop_ready() {
                self.progress += 1;
                let beat = u64::from(self.cfg.mem_if_data_width);
                let beats = u64::from(a.bytes).div_ceil(beat).max(1);
                let mut latency = 0;
                for k in 0..beats {
                    latency += self
                        .banks
                        .access(decode_address(a.address + k * beat, self.timing), self.timing);
                }
                if self.opts.track_data {
                    match a.op {
                        Op::Write => {
                            if !a.data.is_empty() {
                                self.store.write(a.address, &a.data);
                            }
                        }
                        Op::Read => {
                            let mut buf = vec![0; a.bytes as usize];
                            self.store.read(a.address, &mut buf);
                            a.data = buf;
                        }
                    }
                }
                self.event(
                    a.seq_no,
                    EventKind::DramIssued {
                        op: a.op,
                        address: a.address,
                        bytes: a.bytes,
                        source: a.origin.into(),
                    },
                );
                self.dram_busy = Some((self.cycle + latency.max(1), a));
            }
        }
    }

    fn complete(&mut self, c: Completion) {
        self.progress += 1;
        self.outstanding -= 1;
        self.last_completion = self.cycle;
        self.event(c.seq_no, EventKind::Completed);
        if self.opts.track_data || self.opts.event_log {
            self.completions.push(c);
        }
    }

    fn engines(&mut self) {
        if self.cache.step(self.cycle) != crate::cache::PipelineGrant::Idle {
            self.progress += 1;
        }
        for c in self.cache.retire(self.cycle) {
            self.active_cache.remove(&c.seq_no);
            self.cache_addrs.remove(&c.seq_no);
            self.complete(Completion {
                seq_no: c.seq_no,
                pe_id: c.pe_id,
                op: c.op,
                cycle: c.cycle,
                cache_hit: Some(c.hit),
                data: c.data,
            });
        }
        for d in self.dma.retire(self.cycle) {
            self.dma_ranges.remove(&d.seq_no);
            self.complete(Completion {
                seq_no: d.seq_no,
                pe_id: d.pe_id,
                op: d.op,
                cycle: d.cycle,
                cache_hit: None,
                data: d.data,
            });
        }
        self.release_held();
    }

    fn arbitrate_issue(&mut self) {
        if self.dma_stage.is_none() {
            let cycle = self.cycle;
            let active: Option<u64> = self.active_cache.first().copied();
            let cache_traffic = self.cache.has_dram_traffic();
            self.dma_stage = self.dma.next_element(cycle, |s| {
                active.is_none_or(|a| a > s) && !cache_traffic
            });
            if self.dma_stage.is_some() {
                self.progress += 1;
            }
        }
        let grant = arbitrate(
            self.cache.peek_outbox().is_some(),
            self.dma_stage.is_some(),
            self.dma.transferring(),
        );
        let candidate = match grant {
            Grant::Cache => self.cache.peek_outbox().cloned(),
            Grant::Dma => self.dma_stage.clone(),
            Grant::None => None,
        };
        let Some(a) = candidate else { return };
        if !self.sched.can_accept(&a, self.cycle) {
            return;
        }
        if self.sched.enqueue(a, self.cycle).is_ok() {
            self.progress += 1;
            match grant {
                Grant::Cache => {
                    self.cache.pop_outbox();
                }
                Grant::Dma => self.dma_stage = None,
                Grant::None => {}
            }
        }
    }

    fn busy_accounting(&mut self, dt: u64) {
        if self.dma.transferring() {
            self.report.dma_busy_cycles += dt;
        } else if self.cache.in_flight() || !self.held.is_empty() {
            self.report.cache_busy_cycles += dt;
        }
    }

    fn run(mut self, trace: impl IntoIterator<Item = MemRequest>) -> Result<SimOutput, SimError> {
        let mut input = trace.into_iter().peekable();
        let mut waiting: Option<MemRequest> = None;
        let mut last_arrival = 0;
        let mut idle_since = 0;
        loop {
            let before = self.progress;
            // Submission.
            if self.port.is_some() {
                self.feed_payload()?;
                self.progress += 1;
            } else {
                if waiting.is_none() {
                    if let Some(r) = input.next() {
                        if r.arrival_cycle < last_arrival {
                            return Err(SimError::Unordered(r.seq_no));
                        }
                        last_arrival = r.arrival_cycle;
                        waiting = Some(r);
                    }
                }
                if let Some(r) = waiting.take() {
                    if r.arrival_cycle <= self.cycle {
                        waiting = self.admit(r)?;
                        if waiting.is_none() {
                            self.progress += 1;
                        }
                    } else {
                        waiting = Some(r);
                    }
                }
            }
            // Scheduler.
            if self.sched.tick(self.cycle).is_some() {
                self.progress += 1;
            }
            self.dram();
            self.engines();
            self.arbitrate_issue();
            for b in self.sched.drain_formed() {
                self.event(0, EventKind::Batched { fill: b.fill, op: b.op });
            }

            if waiting.is_none() && self.port.is_none() && self.outstanding == 0 && input.peek().is_none() {
                self.busy_accounting(1);
                break;
            }
            let next = if self.progress != before {
                idle_since = self.cycle;
                self.cycle + 1
            } else {
                let t = self.next_event(waiting.as_ref());
                match t {
                    Some(t) if t > self.cycle => t,
                    _ => {
                        if self.cycle - idle_since > STUCK_LIMIT {
                            return Err(SimError::Invariant(format!(
                                "no progress since cycle {idle_since} with {} requests outstanding",
                                self.outstanding
                            )));
                        }
                        self.cycle + 1
                    }
                }
            };
            self.busy_accounting(next - self.cycle);
            self.cycle = next;
        }
        Ok(self.finish())
    }

    /// Earliest future cycle at which some component can act.
    fn next_event(&self, waiting: Option<&MemRequest>) -> Option<u64> {
        let mut t: Option<u64> = None;
        let mut at = |c: Option<u64>| {
            if let Some(c) = c {
                if c > self.cycle {
                    t = Some(t.map_or(c, |x| x.min(c)));
                }
            }
        };
        at(self.dram_busy.as_ref().map(|(d, _)| *d));
        at(waiting.map(|r| r.arrival_cycle));
        at(self.sched.next_event());
        at(self.cache.next_event());
        at(self.dma.next_event());
        t
    }

    fn finish(mut self) -> SimOutput {
        let r = &mut self.report;
        r.total_cycles = if self.outstanding == 0 && r.cache_requests + r.bulk_requests == 0 {
            0
        } else {
            self.last_completion
        };
        if r.total_cycles == 0 {
            r.cache_busy_cycles = 0;
            r.dma_busy_cycles = 0;
        }
        r.row = self.banks.stats;
        r.sched = self.sched.stats;
        r.schedule_cycles = schedule_cycles(self.cfg.sched_batch_size, self.cfg);
        r.cache = self.cache.stats;
        r.dma = self.dma.stats;
        r.finalize();
        SimOutput {
            report: self.report,
            log: self.log,
            completions: self.completions,
        }
    }
}

/// Runs a trace through the controller model.
pub fn simulate(
    cfg: &ControllerConfig,
    timing: &DramTimingConfig,
    trace: impl IntoIterator<Item = MemRequest>,
    opts: SimOptions,
) -> Result<SimOutput, SimError> {
    let v = validate(cfg, timing);
    if !v.is_ok() {
        return Err(SimError::Config(v.violations));
    }
    Sim::new(cfg, timing, opts).run(trace)
}
