//! Synthetic traces and the trace file format.
//!
//! Arrival cycles come from per-PE issue clocks: a request keeps its PE busy
//! for one cycle per `app_io_data_width` bytes, plus an optional gap, and the
//! per-PE streams are merged by `(clock, pe)`.
//!
//! Trace files are line oriented:
//!
//! ```text
//! #generator=random
//! #seed=7
//! 0 3 R C 0x1f40 64
//! 0 4 W D 0x20000 4096
//! ```
//!
//! Write payloads are not stored; they are derived from the address and the
//! `seed` header.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cache::FunctionalCache;
use crate::config::ControllerConfig;
use crate::request::{AccessClass, MemRequest, Op};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Header metadata in insertion order.
    pub meta: Vec<(String, String)>,
    pub requests: Vec<MemRequest>,
}

impl Trace {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.meta.push((key.to_string(), v)),
        }
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

/// Deterministic write data for `len` bytes at `address`.
pub fn payload_bytes(address: u64, len: usize, seed: u64) -> Vec<u8> {
    (0..len as u64)
        .map(|i| {
            let mut x = (address + i) ^ seed.rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
            x = (x ^ (x >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
            x = (x ^ (x >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
            (x ^ (x >> 33)) as u8
        })
        .collect()
}

/// One request before arrival cycles and sequence numbers are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub pe_id: usize,
    pub op: Op,
    pub class: AccessClass,
    pub address: u64,
    pub size: u64,
}

impl Access {
    fn into_request(self, cfg: &ControllerConfig, seed: u64) -> MemRequest {
        let element = cfg.app_io_data_width.max(1);
        match (self.class, self.op) {
            (AccessClass::Cacheline, Op::Read) => MemRequest::cache_read(self.pe_id, self.address, self.size as u32),
            (AccessClass::Cacheline, Op::Write) => MemRequest::cache_write(
                self.pe_id,
                self.address,
                payload_bytes(self.address, self.size as usize, seed),
            ),
            (AccessClass::Bulk, Op::Read) => MemRequest::bulk_read(
                self.pe_id,
                self.address,
                self.size,
                element.min(self.size as u32),
            ),
            (AccessClass::Bulk, Op::Write) => MemRequest::bulk_write(
                self.pe_id,
                self.address,
                payload_bytes(self.address, self.size as usize, seed),
                element.min(self.size as u32),
            ),
        }
    }
}

/// PE cycles spent issuing a request.
fn issue_cycles(size: u64, cfg: &ControllerConfig) -> u64 {
    size.div_ceil(u64::from(cfg.app_io_data_width.max(1)))
}

/// Merges per-PE access streams by issue clock into a trace.
pub fn merge_streams(per_pe: Vec<Vec<Access>>, gap: u64, cfg: &ControllerConfig, seed: u64) -> Vec<MemRequest> {
    let mut heap = BinaryHeap::new();
    let mut next = vec![0usize; per_pe.len()];
    for (pe, s) in per_pe.iter().enumerate() {
        if !s.is_empty() {
            heap.push(Reverse((0u64, pe)));
        }
    }
    let mut out = Vec::with_capacity(per_pe.iter().map(Vec::len).sum());
    while let Some(Reverse((clock, pe))) = heap.pop() {
        let a = per_pe[pe][next[pe]];
        next[pe] += 1;
        let seq = out.len() as u64;
        out.push(a.into_request(cfg, seed).at(clock, seq));
        if next[pe] < per_pe[pe].len() {
            heap.push(Reverse((clock + issue_cycles(a.size, cfg) + gap, pe)));
        }
    }
    out
}

fn finish(generator: &str, seed: u64, params: &[(&str, String)], requests: Vec<MemRequest>, cfg: &ControllerConfig) -> Trace {
    let mut t = Trace::default();
    t.set_meta("generator", generator);
    t.set_meta("seed", seed);
    t.set_meta("element_bytes", cfg.app_io_data_width);
    for (k, v) in params {
        t.set_meta(k, v);
    }
    t.requests = requests;
    t
}

/// Consecutive requests of `stride` bytes covering `total_bytes`, all from
/// PE 0.
pub fn gen_sequential(
    total_bytes: u64,
    stride: u64,
    class: AccessClass,
    base: u64,
    cfg: &ControllerConfig,
    seed: u64,
) -> Trace {
    assert!(total_bytes > 0 && stride > 0);
    let stream: Vec<Access> = (0..total_bytes.div_ceil(stride))
        .map(|i| Access {
            pe_id: 0,
            op: Op::Read,
            class,
            address: base + i * stride,
            size: stride.min(total_bytes - i * stride),
        })
        .collect();
    let reqs = merge_streams(vec![stream], 0, cfg, seed);
    finish(
        "sequential",
        seed,
        &[
            ("total_bytes", total_bytes.to_string()),
            ("stride", stride.to_string()),
            ("class", class.to_string()),
        ],
        reqs,
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub count: usize,
    /// Bytes of address space, starting at `base`.
    pub address_space: u64,
    pub base: u64,
    /// Bytes per request; cacheline requests are clamped to the PE
    /// interface width.
    pub size: u64,
    pub class: AccessClass,
    pub write_fraction: f64,
    pub gap: u64,
}

impl RandomParams {
    pub fn cacheline(count: usize, address_space: u64) -> Self {
        Self {
            count,
            address_space,
            base: 0,
            size: 64,
            class: AccessClass::Cacheline,
            write_fraction: 0.0,
            gap: 0,
        }
    }
}

/// Uniformly random, size-aligned addresses spread round-robin over the PEs.
pub fn gen_random(p: &RandomParams, cfg: &ControllerConfig, seed: u64) -> Trace {
    assert!(p.count > 0);
    let size = match p.class {
        AccessClass::Cacheline => p
            .size
            .min(u64::from(cfg.app_io_data_width))
            .min(cfg.cache_line_bytes()),
        AccessClass::Bulk => p.size,
    }
    .max(1);
    let slots = (p.address_space / size).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pes = cfg.num_pes.max(1);
    let mut streams = vec![Vec::new(); pes];
    for i in 0..p.count {
        let op = if rng.gen_bool(p.write_fraction.clamp(0.0, 1.0)) {
            Op::Write
        } else {
            Op::Read
        };
        streams[i % pes].push(Access {
            pe_id: i % pes,
            op,
            class: p.class,
            address: p.base + rng.gen_range(0..slots) * size,
            size,
        });
    }
    let reqs = merge_streams(streams, p.gap, cfg, seed);
    finish(
        "random",
        seed,
        &[
            ("count", p.count.to_string()),
            ("address_space", p.address_space.to_string()),
            ("size", size.to_string()),
            ("class", p.class.to_string()),
        ],
        reqs,
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnParams {
    pub num_vertices: u64,
    pub num_edges: u64,
    pub feature_bytes: u64,
    pub adjacency_bytes: u64,
    pub num_pes: usize,
    pub feature_base: u64,
    pub adjacency_base: u64,
}

impl Default for GcnParams {
    fn default() -> Self {
        Self {
            num_vertices: 16 * 1024,
            num_edges: 2_400_000,
            feature_bytes: 4096,
            adjacency_bytes: 128,
            num_pes: 8,
            feature_base: 0,
            adjacency_base: 1 << 28,
        }
    }
}

impl GcnParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_vertices == 0 {
            return Err("num_vertices must be non-zero".into());
        }
        if !(1024..=8192).contains(&self.feature_bytes) {
            return Err(format!("feature_bytes {} outside 1 KB..8 KB", self.feature_bytes));
        }
        if !(128..=512).contains(&self.adjacency_bytes) {
            return Err(format!("adjacency_bytes {} outside 128..512 B", self.adjacency_bytes));
        }
        if self.num_pes == 0 {
            return Err("num_pes must be non-zero".into());
        }
        let feat_end = self.feature_base + self.num_vertices * self.feature_bytes;
        let adj_end = self.adjacency_base + self.num_vertices * self.adjacency_bytes;
        if self.feature_base < adj_end && self.adjacency_base < feat_end {
            return Err("feature and adjacency regions overlap".into());
        }
        Ok(())
    }

    pub fn graph_bytes(&self) -> u64 {
        self.num_vertices * self.adjacency_bytes
    }

    pub fn average_degree(&self) -> f64 {
        self.num_edges as f64 / self.num_vertices as f64
    }
}

/// Lazily generated GCN aggregation trace.
///
/// Edges are visited in generation order, each with a uniformly random
/// target vertex. Per edge, the owning PE (round-robin) reads the target's
/// feature vector in bulk and one cacheline chunk of its adjacency record.
/// Each edge round issues all PEs' feature reads before their adjacency
/// reads, matching the per-PE clock merge.
#[derive(Debug, Clone)]
pub struct GcnStream {
    p: GcnParams,
    cfg: ControllerConfig,
    seed: u64,
    rng: ChaCha8Rng,
    edge: u64,
    /// Targets of the current round, one per PE.
    round: Vec<u64>,
    pos: usize,
    seq: u64,
    chunk: u64,
}

impl GcnStream {
    pub fn new(p: GcnParams, cfg: &ControllerConfig, seed: u64) -> Self {
        let chunk = u64::from(cfg.app_io_data_width)
            .min(cfg.cache_line_bytes())
            .min(p.adjacency_bytes)
            .max(1);
        Self {
            p,
            cfg: cfg.clone(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            edge: 0,
            round: Vec::new(),
            pos: 0,
            seq: 0,
            chunk,
        }
    }

    fn round_clock(&self, round: u64) -> u64 {
        round * (issue_cycles(self.p.feature_bytes, &self.cfg) + issue_cycles(self.chunk, &self.cfg))
    }
}

impl Iterator for GcnStream {
    type Item = MemRequest;

    fn next(&mut self) -> Option<MemRequest> {
        if self.pos == 2 * self.round.len() {
            if self.edge >= self.p.num_edges {
                return None;
            }
            let n = (self.p.num_edges - self.edge).min(self.p.num_pes as u64);
            self.round = (0..n)
                .map(|_| self.rng.gen_range(0..self.p.num_vertices))
                .collect();
            self.pos = 0;
            self.edge += n;
        }
        let round_index = (self.edge - 1) / self.p.num_pes as u64;
        let clock = self.round_clock(round_index);
        let k = self.pos % self.round.len();
        let v = self.round[k];
        let edge_id = round_index * self.p.num_pes as u64 + k as u64;
        let req = if self.pos < self.round.len() {
            Access {
                pe_id: k,
                op: Op::Read,
                class: AccessClass::Bulk,
                address: self.p.feature_base + v * self.p.feature_bytes,
                size: self.p.feature_bytes,
            }
            .into_request(&self.cfg, self.seed)
            .at(clock, self.seq)
        } else {
            let chunks = self.p.adjacency_bytes / self.chunk;
            let addr = self.p.adjacency_base + v * self.p.adjacency_bytes + (edge_id % chunks) * self.chunk;
            Access {
                pe_id: k,
                op: Op::Read,
                class: AccessClass::Cacheline,
                address: addr,
                size: self.chunk,
            }
            .into_request(&self.cfg, self.seed)
            .at(clock + issue_cycles(self.p.feature_bytes, &self.cfg), self.seq)
        };
        self.pos += 1;
        self.seq += 1;
        Some(req)
    }
}

pub fn gen_gcn(p: &GcnParams, cfg: &ControllerConfig, seed: u64) -> Trace {
    let reqs: Vec<MemRequest> = GcnStream::new(*p, cfg, seed).collect();
    finish("gcn", seed, &gcn_meta(p), reqs, cfg)
}

fn gcn_meta(p: &GcnParams) -> Vec<(&'static str, String)> {
    vec![
        ("num_vertices", p.num_vertices.to_string()),
        ("num_edges", p.num_edges.to_string()),
        ("feature_bytes", p.feature_bytes.to_string()),
        ("adjacency_bytes", p.adjacency_bytes.to_string()),
    ]
}

/// Adjacency reuse predicted from cache and graph sizes:
/// `(cache bytes / graph bytes) * average degree`.
pub fn expected_adjacency_reuse(p: &GcnParams, cfg: &ControllerConfig) -> f64 {
    let cache = (cfg.cache_num_lines as u64 * cfg.cache_line_bytes()) as f64;
    (cache / p.graph_bytes() as f64).min(1.0) * p.average_degree()
}

/// Cache hits on adjacency reads per vertex, replaying the cacheline
/// requests of a trace through a functional cache.
pub fn measured_adjacency_reuse(
    trace: impl IntoIterator<Item = MemRequest>,
    p: &GcnParams,
    cfg: &ControllerConfig,
) -> f64 {
    let mut cache = FunctionalCache::new(cfg);
    let mut hits = 0u64;
    for r in trace {
        if r.access_class == AccessClass::Cacheline && cache.access(r.address, r.op).hit {
            hits += 1;
        }
    }
    hits as f64 / p.num_vertices as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnParams {
    pub image_width: u64,
    pub image_height: u64,
    pub bytes_per_pixel: u64,
    pub in_channels: u64,
    pub out_channels: u64,
    /// Kernel side length; weights per (filter, channel) are
    /// `kernel * kernel * 4` bytes.
    pub kernel: u64,
    pub num_pes: usize,
    pub input_base: u64,
    pub weight_base: u64,
}

impl Default for CnnParams {
    fn default() -> Self {
        // First convolution of a 227x227 RGB classifier.
        Self {
            image_width: 227,
            image_height: 227,
            bytes_per_pixel: 4,
            in_channels: 3,
            out_channels: 96,
            kernel: 11,
            num_pes: 8,
            input_base: 0,
            weight_base: 1 << 28,
        }
    }
}

impl CnnParams {
    pub fn kernel_bytes(&self) -> u64 {
        self.kernel * self.kernel * 4
    }

    pub fn channel_bytes(&self) -> u64 {
        self.image_width * self.image_height * self.bytes_per_pixel
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(4..=512).contains(&self.kernel_bytes()) && self.out_channels > 0 {
            return Err(format!("kernel bytes {} outside 4..512 B", self.kernel_bytes()));
        }
        if self.num_pes == 0 || self.in_channels == 0 {
            return Err("num_pes and in_channels must be non-zero".into());
        }
        if self.image_height < self.num_pes as u64 {
            return Err("fewer image rows than PEs".into());
        }
        Ok(())
    }

    /// Start of the 64-byte-aligned weight region for (filter, channel).
    pub fn weight_address(&self, filter: u64, channel: u64) -> u64 {
        let stride = self.kernel_bytes().next_multiple_of(64);
        self.weight_base + (filter * self.in_channels + channel) * stride
    }
}

/// Single convolution layer. The image is split into horizontal bands, one
/// per PE. For each input channel a PE reads its band in bulk chunks of at
/// most `dma_max_transaction` bytes, then reads every filter's weights for
/// that channel through the cache; all PEs read the same weights.
pub fn gen_cnn(p: &CnnParams, cfg: &ControllerConfig, seed: u64) -> Trace {
    let row_bytes = p.image_width * p.bytes_per_pixel;
    let pes = p.num_pes as u64;
    let chunk = cfg.dma_max_transaction.max(1);
    let piece = u64::from(cfg.app_io_data_width)
        .min(cfg.cache_line_bytes())
        .max(1);
    let mut streams = vec![Vec::new(); p.num_pes];
    for (pe, stream) in streams.iter_mut().enumerate() {
        let pe64 = pe as u64;
        let first_row = p.image_height * pe64 / pes;
        let last_row = p.image_height * (pe64 + 1) / pes;
        for c in 0..p.in_channels {
            let start = p.input_base + c * p.channel_bytes().next_multiple_of(4096) + first_row * row_bytes;
            let len = (last_row - first_row) * row_bytes;
            let mut off = 0;
            while off < len {
                let n = chunk.min(len - off);
                stream.push(Access {
                    pe_id: pe,
                    op: Op::Read,
                    class: AccessClass::Bulk,
                    address: start + off,
                    size: n,
                });
                off += n;
            }
            for f in 0..p.out_channels {
                let w = p.weight_address(f, c);
                let mut off = 0;
                while off < p.kernel_bytes() {
                    let n = piece.min(p.kernel_bytes() - off);
                    stream.push(Access {
                        pe_id: pe,
                        op: Op::Read,
                        class: AccessClass::Cacheline,
                        address: w + off,
                        size: n,
                    });
                    off += n;
                }
            }
        }
    }
    let reqs = merge_streams(streams, 0, cfg, seed);
    finish(
        "cnn",
        seed,
        &[
            ("image", format!("{}x{}", p.image_width, p.image_height)),
            ("in_channels", p.in_channels.to_string()),
            ("out_channels", p.out_channels.to_string()),
            ("kernel", p.kernel.to_string()),
        ],
        reqs,
        cfg,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn write_trace(t: &Trace) -> String {
    let mut s = String::new();
    for (k, v) in &t.meta {
        let _ = writeln!(s, "#{k}={v}");
    }
    for r in &t.requests {
        let _ = writeln!(
            s,
            "{} {} {} {} {:#x} {}",
            r.arrival_cycle, r.pe_id, r.op, r.access_class, r.address, r.total_size
        );
    }
    s
}

/// Parses a trace file. Sequence numbers follow line order; bulk element
/// sizes come from the `element_bytes` header (64 when absent).
pub fn read_trace(text: &str) -> Result<Trace, TraceError> {
    let mut t = Trace::default();
    let mut records: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.split_once('=') {
                t.set_meta(k.trim(), v.trim());
            }
            continue;
        }
        records.push((i + 1, line.split_whitespace().collect()));
    }
    let seed: u64 = t.meta("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
    let element: u32 = t
        .meta("element_bytes")
        .and_then(|s| s.parse().ok())
        .unwrap_or(64)
        .max(1);
    let mut last = 0;
    for (line, f) in records {
        let err = |message: String| TraceError::Parse { line, message };
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad number {s:?}")));
        let cycle = num(f[0])?;
        let pe = num(f[1])? as usize;
        let op = match f[2] {
            "R" => Op::Read,
            "W" => Op::Write,
            o => return Err(err(format!("unknown op {o:?}"))),
        };
        let class = match f[3] {
            "C" => AccessClass::Cacheline,
            "D" => AccessClass::Bulk,
            c => return Err(err(format!("unknown class {c:?}"))),
        };
        let address = f[4]
            .strip_prefix("0x")
            .ok_or_else(|| err(format!("address {:?} is not hexadecimal", f[4])))
            .and_then(|h| u64::from_str_radix(h, 16).map_err(|_| err(format!("bad address {:?}", f[4]))))?;
        let size = num(f[5])?;
        if size == 0 {
            return Err(err("zero size".into()));
        }
        if cycle < last {
            return Err(err("arrival cycles go backwards".into()));
        }
        last = cycle;
        let seq = t.requests.len() as u64;
        let req = match (class, op) {
            (AccessClass::Cacheline, Op::Read) => MemRequest::cache_read(pe, address, size as u32),
            (AccessClass::Cacheline, Op::Write) => {
                MemRequest::cache_write(pe, address, payload_bytes(address, size as usize, seed))
            }
            (AccessClass::Bulk, Op::Read) => {
                MemRequest::bulk_read(pe, address, size, element.min(size as u32))
            }
            (AccessClass::Bulk, Op::Write) => MemRequest::bulk_write(
                pe,
                address,
                payload_bytes(address, size as usize, seed),
                element.min(size as u32),
            ),
        };
        t.requests.push(req.at(cycle, seq));
    }
    Ok(t)
}

/// Per-class request counts, for summaries.
pub fn class_counts(t: &Trace) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for r in &t.requests {
        *m.entry(format!("{}{}", r.access_class, r.op)).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ControllerConfig {
        ControllerConfig::default()
    }

    #[test]
    fn sequential_shapes() {
        let c = cfg();
        let one = gen_sequential(16384, 16384, AccessClass::Bulk, 0, &c, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one.requests[0].total_size, 16384);
        let lines = gen_sequential(16384, 64, AccessClass::Cacheline, 0, &c, 1);
        assert_eq!(lines.len(), 256);
        assert!(lines.requests.windows(2).all(|w| w[1].address == w[0].address + 64));
        assert_eq!(gen_sequential(64, 64, AccessClass::Cacheline, 0, &c, 1).len(), 1);
    }

    #[test]
    fn random_is_seeded() {
        let c = cfg();
        let p = RandomParams::cacheline(500, 1 << 30);
        assert_eq!(gen_random(&p, &c, 9), gen_random(&p, &c, 9));
        assert_ne!(gen_random(&p, &c, 9), gen_random(&p, &c, 10));
        let t = gen_random(&p, &c, 9);
        assert!(t.requests.iter().all(|r| r.address % 64 == 0 && r.check(&c).is_ok()));
        assert!(t.requests.windows(2).all(|w| w[0].arrival_cycle <= w[1].arrival_cycle));
        assert!(t.requests.iter().enumerate().all(|(i, r)| r.seq_no == i as u64));
    }

    #[test]
    fn gcn_trace_shape() {
        let c = cfg();
        let p = GcnParams {
            num_edges: 100,
            ..Default::default()
        };
        p.validate().unwrap();
        let t = gen_gcn(&p, &c, 3);
        assert_eq!(t.len(), 200);
        assert!(t.requests.iter().all(|r| r.check(&c).is_ok()));
        assert!(t.requests.windows(2).all(|w| w[0].arrival_cycle <= w[1].arrival_cycle));
        let bulk = t.requests.iter().filter(|r| r.access_class == AccessClass::Bulk).count();
        assert_eq!(bulk, 100);
        let none = gen_gcn(&GcnParams { num_edges: 0, ..p }, &c, 3);
        assert!(none.is_empty());
    }

    #[test]
    fn cnn_weights_shared_across_pes() {
        let c = cfg();
        let p = CnnParams {
            kernel: 3,
            out_channels: 64,
            in_channels: 1,
            ..Default::default()
        };
        assert_eq!(p.kernel_bytes(), 36);
        let t = gen_cnn(&p, &c, 0);
        assert!(t.requests.iter().all(|r| r.check(&c).is_ok()));
        let weights: Vec<_> = t
            .requests
            .iter()
            .filter(|r| r.access_class == AccessClass::Cacheline)
            .collect();
        assert_eq!(weights.len(), 64 * 8);
        let mut f = FunctionalCache::new(&c);
        let mut hits_by_pe = [0; 8];
        for r in &weights {
            if f.access(r.address, r.op).hit {
                hits_by_pe[r.pe_id] += 1;
            }
        }
        let first = weights[0].pe_id;
        assert_eq!(hits_by_pe[first], 0);
        assert!(hits_by_pe.iter().enumerate().all(|(pe, &h)| pe == first || h == 64));

        let bulk_only = gen_cnn(&CnnParams { out_channels: 0, in_channels: 1, ..p }, &c, 0);
        assert!(bulk_only.requests.iter().all(|r| r.access_class == AccessClass::Bulk));
    }

    #[test]
    fn trace_round_trip() {
        let c = cfg();
        let mut p = RandomParams::cacheline(50, 1 << 20);
        p.write_fraction = 0.5;
        let t = gen_random(&p, &c, 4);
        let text = write_trace(&t);
        let back = read_trace(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(write_trace(&back), text);
    }

    #[test]
    fn trace_errors_name_the_line() {
        let e = read_trace("#seed=1\n0 0 R C 0x0 64\n1 0 X C 0x40 64\n").unwrap_err();
        assert_eq!(
            e,
            TraceError::Parse {
                line: 3,
                message: "unknown op \"X\"".into()
            }
        );
    }
}
