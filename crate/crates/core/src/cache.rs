//! Set-associative cache engine.
//!
//! A four-stage PE pipeline looks up tags and a three-stage MEM pipeline
//! installs fills; both share the tag, data and LRU arrays and the MEM
//! pipeline wins when both are ready. The cache is write-back and
//! write-allocate. Misses allocate their way at lookup time so that the
//! hit/miss sequence matches a functional LRU cache run over the same
//! requests; outstanding misses are tracked per line and later accesses to a
//! pending line attach to the existing entry. Replies leave in request order.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::config::ControllerConfig;
use crate::request::{MemRequest, Op};
use crate::scheduler::{MemAccess, Origin};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Way {
    pub tag: u64,
    pub valid: bool,
    pub dirty: bool,
    /// Allocated to an outstanding miss; data not yet present.
    pub pending: bool,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct CacheState {
    line_bytes: u64,
    num_sets: u64,
    ways: Vec<Vec<Way>>,
    /// Way indices per set, least recently used first.
    lru: Vec<Vec<usize>>,
}

impl CacheState {
    pub fn new(cfg: &ControllerConfig) -> Self {
        let sets = cfg.cache_num_sets().max(1);
        let assoc = cfg.cache_associativity.max(1);
        Self {
            line_bytes: cfg.cache_line_bytes().max(1),
            num_sets: sets as u64,
            ways: vec![vec![Way::default(); assoc]; sets],
            lru: vec![(0..assoc).collect(); sets],
        }
    }

    pub fn line_bytes(&self) -> u64 {
        self.line_bytes
    }

    /// Line number, set index and tag of a byte address.
    pub fn locate(&self, addr: u64) -> (u64, usize, u64) {
        let line = addr / self.line_bytes;
        (line, (line % self.num_sets) as usize, line / self.num_sets)
    }

    fn line_of(&self, set: usize, tag: u64) -> u64 {
        tag * self.num_sets + set as u64
    }

    pub fn lookup(&self, set: usize, tag: u64) -> Option<usize> {
        self.ways[set].iter().position(|w| w.valid && w.tag == tag)
    }

    pub fn touch(&mut self, set: usize, way: usize) {
        let order = &mut self.lru[set];
        let pos = order.iter().position(|&w| w == way).expect("way in LRU order");
        order.remove(pos);
        order.push(way);
    }

    /// An invalid way if any, else the least recently used one.
    pub fn victim(&self, set: usize) -> usize {
        self.lru[set]
            .iter()
            .copied()
            .find(|&w| !self.ways[set][w].valid)
            .unwrap_or(self.lru[set][0])
    }

    pub fn way(&self, set: usize, way: usize) -> &Way {
        &self.ways[set][way]
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (s, ways) in self.ways.iter().enumerate() {
            let mut tags = HashSet::new();
            for w in ways.iter().filter(|w| w.valid) {
                if !tags.insert(w.tag) {
                    return Err(format!("set {s}: duplicate tag {:#x}", w.tag));
                }
            }
            if ways.iter().any(|w| w.dirty && !w.valid) {
                return Err(format!("set {s}: dirty invalid way"));
            }
            let mut order = self.lru[s].clone();
            order.sort_unstable();
            if order != (0..ways.len()).collect::<Vec<_>>() {
                return Err(format!("set {s}: LRU order is not a permutation"));
            }
        }
        Ok(())
    }
}

/// Result of a functional cache access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionalOutcome {
    pub hit: bool,
    /// Line number evicted by this access and whether it was dirty.
    pub evicted: Option<(u64, bool)>,
}

/// Untimed write-back, write-allocate LRU cache.
#[derive(Debug, Clone)]
pub struct FunctionalCache {
    line_bytes: u64,
    num_sets: u64,
    assoc: usize,
    /// Per set: (line, dirty), most recently used last.
    sets: Vec<Vec<(u64, bool)>>,
}

impl FunctionalCache {
    pub fn new(cfg: &ControllerConfig) -> Self {
        let num_sets = cfg.cache_num_sets().max(1);
        Self {
            line_bytes: cfg.cache_line_bytes().max(1),
            num_sets: num_sets as u64,
            assoc: cfg.cache_associativity.max(1),
            sets: vec![Vec::new(); num_sets],
        }
    }

    pub fn access(&mut self, addr: u64, op: Op) -> FunctionalOutcome {
        let line = addr / self.line_bytes;
        let set = &mut self.sets[(line % self.num_sets) as usize];
        let write = op == Op::Write;
        if let Some(pos) = set.iter().position(|&(l, _)| l == line) {
            let (_, dirty) = set.remove(pos);
            set.push((line, dirty || write));
            return FunctionalOutcome {
                hit: true,
                evicted: None,
            };
        }
        let evicted = if set.len() == self.assoc {
            Some(set.remove(0))
        } else {
            None
        };
        set.push((line, write));
        FunctionalOutcome {
            hit: false,
            evicted,
        }
    }
}

/// Outstanding miss for one line.
#[derive(Debug, Clone)]
pub struct MissEntry {
    pub set: usize,
    pub way: usize,
    pub pe_id: usize,
    pub issue_cycle: u64,
    /// Requests waiting on the fill, in arrival order.
    pub waiters: Vec<u64>,
    /// Dirty victim displaced by this miss, released when the fill lands.
    pub writeback: Option<MemAccess>,
}

#[derive(Debug, Clone, Default)]
pub struct MissStatus {
    entries: HashMap<u64, MissEntry>,
}

impl MissStatus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, line: u64) -> bool {
        self.entries.contains_key(&line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineGrant {
    RunMem,
    RunPe,
    Idle,
}

pub fn arbitrate_pipelines(pe_ready: bool, mem_ready: bool) -> PipelineGrant {
    if mem_ready {
        PipelineGrant::RunMem
    } else if pe_ready {
        PipelineGrant::RunPe
    } else {
        PipelineGrant::Idle
    }
}

/// Per-access label for the analytic cache time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    HitUnderMiss,
    /// Miss with its scheduler and DRAM costs.
    Miss { t_sch: u64, t_mem_acc: u64 },
}

/// Analytic cache time for a run of accesses.
pub fn cache_time(outcomes: &[CacheOutcome], cfg: &ControllerConfig) -> u64 {
    let body: u64 = outcomes
        .iter()
        .map(|o| match *o {
            CacheOutcome::Hit => 1,
            CacheOutcome::HitUnderMiss => 0,
            CacheOutcome::Miss { t_sch, t_mem_acc } => cfg.mem_pipeline_fill + t_sch + t_mem_acc,
        })
        .sum();
    cfg.ctrl_overhead + cfg.cache_pipeline_fill + body
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheCompletion {
    pub seq_no: u64,
    pub pe_id: usize,
    pub op: Op,
    pub cycle: u64,
    /// Served without a DRAM fill of its own (coalesced misses count).
    pub hit: bool,
    /// Read data when data tracking is on.
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CacheStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub writebacks: u64,
    pub stall_cycles: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    req: MemRequest,
    hit: bool,
    done_at: Option<u64>,
    data: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct CacheEngine {
    state: CacheState,
    mshr: MissStatus,
    max_misses: usize,
    pe_latency: u64,
    mem_latency: u64,
    track_data: bool,
    input: VecDeque<(MemRequest, u64)>,
    order: VecDeque<u64>,
    pending: HashMap<u64, Pending>,
    fills: VecDeque<(u64, Vec<u8>)>,
    outbox: VecDeque<MemAccess>,
    /// Lines whose dirty data is held with an outstanding miss.
    held: HashSet<u64>,
    pub stats: CacheStats,
}

impl CacheEngine {
    pub fn new(cfg: &ControllerConfig, track_data: bool) -> Self {
        Self {
            state: CacheState::new(cfg),
            mshr: MissStatus::default(),
            max_misses: cfg.cache_max_outstanding_misses.max(1),
            pe_latency: cfg.cache_pipeline_fill,
            mem_latency: cfg.mem_pipeline_fill,
            track_data,
            input: VecDeque::new(),
            order: VecDeque::new(),
            pending: HashMap::new(),
            fills: VecDeque::new(),
            outbox: VecDeque::new(),
            held: HashSet::new(),
            stats: CacheStats::default(),
        }
    }

    pub fn state(&self) -> &CacheState {
        &self.state
    }

    pub fn miss_status(&self) -> &MissStatus {
        &self.mshr
    }

    /// Queues a request that reaches the PE pipeline at `ready_at`.
    pub fn deliver(&mut self, req: MemRequest, ready_at: u64) {
        self.input.push_back((req, ready_at));
    }

    pub fn queued(&self) -> usize {
        self.input.len()
    }

    /// Any request accepted but not yet replied to.
    pub fn in_flight(&self) -> bool {
        !self.input.is_empty() || !self.order.is_empty()
    }

    /// Outstanding DRAM traffic owned by the cache (fills or writebacks not
    /// yet handed to the scheduler).
    pub fn has_dram_traffic(&self) -> bool {
        !self.mshr.is_empty() || !self.outbox.is_empty() || !self.fills.is_empty()
    }

    pub fn peek_outbox(&self) -> Option<&MemAccess> {
        self.outbox.front()
    }

    pub fn pop_outbox(&mut self) -> Option<MemAccess> {
        self.outbox.pop_front()
    }

    /// A line fill finished in DRAM.
    pub fn fill_arrived(&mut self, line: u64, data: Vec<u8>) {
        self.fills.push_back((line, data));
    }

    /// Earliest future cycle at which the engine can act on its own.
    pub fn next_event(&self) -> Option<u64> {
        let input = self.input.front().map(|&(_, at)| at);
        let reply = self
            .order
            .front()
            .and_then(|s| self.pending[s].done_at);
        match (input, reply) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Runs one pipeline slot.
    pub fn step(&mut self, cycle: u64) -> PipelineGrant {
        let pe_ready = self.input.front().is_some_and(|&(_, at)| at <= cycle);
        let grant = arbitrate_pipelines(pe_ready, !self.fills.is_empty());
        match grant {
            PipelineGrant::RunMem => {
                let (line, data) = self.fills.pop_front().expect("fill ready");
                self.mem_fill(line, data, cycle)
                    .expect("fill matches an outstanding miss");
                if pe_ready {
                    self.stats.stall_cycles += 1;
                }
            }
            PipelineGrant::RunPe => {
                if !self.pe_access(cycle) {
                    self.stats.stall_cycles += 1;
                }
            }
            PipelineGrant::Idle => {}
        }
        grant
    }

    fn read_slice(&self, set: usize, way: usize, req: &MemRequest) -> Vec<u8> {
        if !self.track_data {
            return Vec::new();
        }
        let off = (req.address % self.state.line_bytes) as usize;
        self.state.ways[set][way].data[off..off + req.total_size as usize].to_vec()
    }

    fn apply_write(&mut self, set: usize, way: usize, req: &MemRequest) {
        let w = &mut self.state.ways[set][way];
        w.dirty = true;
        if self.track_data {
            let off = (req.address % self.state.line_bytes) as usize;
            w.data[off..off + req.payload.len()].copy_from_slice(&req.payload);
        }
    }

    /// Looks up the head request. Returns false if the pipeline stalls.
    fn pe_access(&mut self, cycle: u64) -> bool {
        let (req, _) = self.input.front().expect("request ready");
        let (line, set, tag) = self.state.locate(req.address);
        if self.held.contains(&line) {
            return false;
        }
        if let Some(e) = self.mshr.entries.get_mut(&line) {
            let (req, _) = self.input.pop_front().unwrap();
            e.waiters.push(req.seq_no);
            let way = e.way;
            self.state.touch(set, way);
            self.stats.accesses += 1;
            self.stats.hits += 1;
            self.track(req, true, None, Vec::new());
            return true;
        }
        if let Some(way) = self.state.lookup(set, tag) {
            let (req, _) = self.input.pop_front().unwrap();
            self.state.touch(set, way);
            self.stats.accesses += 1;
            self.stats.hits += 1;
            let data = match req.op {
                Op::Read => self.read_slice(set, way, &req),
                Op::Write => {
                    self.apply_write(set, way, &req);
                    Vec::new()
                }
            };
            self.track(req, true, Some(cycle + self.pe_latency), data);
            return true;
        }
        if self.mshr.len() >= self.max_misses {
            return false;
        }
        let way = self.state.victim(set);
        if self.state.ways[set][way].pending {
            return false;
        }
        let (req, _) = self.input.pop_front().unwrap();
        self.stats.accesses += 1;
        self.stats.misses += 1;
        let old = std::mem::take(&mut self.state.ways[set][way]);
        let mut writeback = None;
        if old.valid {
            self.stats.evictions += 1;
            if old.dirty {
                let victim_line = self.state.line_of(set, old.tag);
                self.held.insert(victim_line);
                writeback = Some(MemAccess {
                    address: victim_line * self.state.line_bytes,
                    bytes: self.state.line_bytes as u32,
                    op: Op::Write,
                    seq_no: req.seq_no,
                    origin: Origin::Writeback,
                    data: old.data,
                });
            }
        }
        self.state.ways[set][way] = Way {
            tag,
            valid: true,
            dirty: false,
            pending: true,
            data: Vec::new(),
        };
        self.state.touch(set, way);
        self.outbox.push_back(MemAccess {
            address: line * self.state.line_bytes,
            bytes: self.state.line_bytes as u32,
            op: Op::Read,
            seq_no: req.seq_no,
            origin: Origin::CacheFill { line },
            data: Vec::new(),
        });
        self.mshr.entries.insert(
            line,
            MissEntry {
                set,
                way,
                pe_id: req.pe_id,
                issue_cycle: cycle,
                waiters: vec![req.seq_no],
                writeback,
            },
        );
        self.track(req, false, None, Vec::new());
        true
    }

    fn track(&mut self, req: MemRequest, hit: bool, done_at: Option<u64>, data: Vec<u8>) {
        self.order.push_back(req.seq_no);
        self.pending.insert(
            req.seq_no,
            Pending {
                req,
                hit,
                done_at,
                data,
            },
        );
    }

    /// Installs a fill, replies to its waiters and releases the displaced
    /// dirty line, if any, toward DRAM.
    pub fn mem_fill(&mut self, line: u64, data: Vec<u8>, cycle: u64) -> Result<Option<MemAccess>, String> {
        let entry = self
            .mshr
            .entries
            .remove(&line)
            .ok_or_else(|| format!("fill for line {line:#x} with no outstanding miss"))?;
        let (set, way) = (entry.set, entry.way);
        {
            let w = &mut self.state.ways[set][way];
            w.pending = false;
            if self.track_data {
                w.data = if data.is_empty() {
                    vec![0; self.state.line_bytes as usize]
                } else {
                    data
                };
            }
        }
        let done = cycle + self.mem_latency;
        for seq in entry.waiters {
            let req = self.pending[&seq].req.clone();
            let out = match req.op {
                Op::Read => self.read_slice(set, way, &req),
                Op::Write => {
                    self.apply_write(set, way, &req);
                    Vec::new()
                }
            };
            let p = self.pending.get_mut(&seq).expect("waiter tracked");
            p.done_at = Some(done);
            p.data = out;
        }
        let wb = entry.writeback;
        if let Some(w) = &wb {
            self.held.remove(&(w.address / self.state.line_bytes));
            self.stats.writebacks += 1;
            self.outbox.push_back(w.clone());
        }
        Ok(wb)
    }

    /// Replies whose latency has elapsed, in request order.
    pub fn retire(&mut self, cycle: u64) -> Vec<CacheCompletion> {
        let mut out = Vec::new();
        while let Some(&seq) = self.order.front() {
            match self.pending[&seq].done_at {
                Some(t) if t <= cycle => {}
                _ => break,
            }
            self.order.pop_front();
            let p = self.pending.remove(&seq).unwrap();
            out.push(CacheCompletion {
                seq_no: seq,
                pe_id: p.req.pe_id,
                op: p.req.op,
                cycle,
                hit: p.hit,
                data: p.data,
            });
        }
        out
    }
}
