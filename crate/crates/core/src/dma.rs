//! Multi-buffer DMA engine.
//!
//! A header flit claims an idle buffer for its PE and later flits with the
//! same PE ID land in that buffer. Reads arm at once; writes arm when the last
//! payload flit is in. Armed buffers emit one memory-interface beat per
//! element, round-robin across buffers, and completed transfers retire in
//! acceptance order.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::config::{ControllerConfig, DramTimingConfig};
use crate::dram::{t_mem_rand, t_mem_seq};
use crate::request::{Flit, FlitKind, Op};
use crate::scheduler::{schedule_cycles, MemAccess, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferStatus {
    Idle,
    /// Owned, waiting for payload flits.
    Occupied,
    Transferring,
}

#[derive(Debug, Clone)]
pub struct DmaBuffer {
    pub status: BufferStatus,
    pub owner_pe: Option<usize>,
    pub seq_no: u64,
    pub op: Op,
    pub address: u64,
    pub expected_bytes: u64,
    pub received_bytes: u64,
    pub staged: Vec<u8>,
    pub start_cycle: u64,
    /// Cycle the buffer may start issuing elements.
    armed_at: Option<u64>,
    elements: u32,
    issued: u32,
    done: u32,
    first_issue: Option<u64>,
    complete_at: Option<u64>,
    read_data: Vec<u8>,
}

impl DmaBuffer {
    fn idle() -> Self {
        Self {
            status: BufferStatus::Idle,
            owner_pe: None,
            seq_no: 0,
            op: Op::Read,
            address: 0,
            expected_bytes: 0,
            received_bytes: 0,
            staged: Vec::new(),
            start_cycle: 0,
            armed_at: None,
            elements: 0,
            issued: 0,
            done: 0,
            first_issue: None,
            complete_at: None,
            read_data: Vec::new(),
        }
    }

    fn range(&self) -> (u64, u64) {
        (self.address, self.address + self.expected_bytes)
    }
}

/// PE ID to buffer index for in-flight transfers.
#[derive(Debug, Clone, Default)]
pub struct DmaRequestMap {
    map: HashMap<usize, usize>,
}

impl DmaRequestMap {
    pub fn get(&self, pe: usize) -> Option<usize> {
        self.map.get(&pe).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmaAccept {
    Buffered,
    Armed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DmaError {
    #[error("no idle DMA buffer for PE {0}")]
    Backpressure(usize),
    #[error("DMA protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Seq,
    Rand,
}

/// Number of memory-interface elements a transfer of `total` bytes occupies.
pub fn element_count(total: u64, cfg: &ControllerConfig) -> u64 {
    total.div_ceil(u64::from(cfg.mem_if_data_width.max(1)))
}

/// Analytic DMA transfer time for `n_elements` of one access kind.
pub fn dma_transfer_time(
    n_elements: u64,
    kind: AccessKind,
    cfg: &ControllerConfig,
    timing: &DramTimingConfig,
) -> u64 {
    let per = match kind {
        AccessKind::Seq => t_mem_seq(timing),
        AccessKind::Rand => t_mem_rand(timing),
    };
    cfg.ctrl_overhead
        + schedule_cycles(cfg.sched_batch_size, cfg)
        + cfg.data_convert_latency
        + n_elements * per
}

/// Splits element addresses into maximal runs of consecutive beats (`Seq`)
/// and of everything else (`Rand`).
pub fn classify_runs(addresses: &[u64], beat: u64) -> Vec<(AccessKind, usize)> {
    let mut runs: Vec<(AccessKind, usize)> = Vec::new();
    let mut i = 0;
    while i < addresses.len() {
        let mut j = i + 1;
        while j < addresses.len() && addresses[j] == addresses[j - 1] + beat {
            j += 1;
        }
        let (kind, len) = if j - i > 1 {
            (AccessKind::Seq, j - i)
        } else {
            (AccessKind::Rand, 1)
        };
        match runs.last_mut() {
            Some((AccessKind::Rand, n)) if kind == AccessKind::Rand => *n += 1,
            _ => runs.push((kind, len)),
        }
        i += len;
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmaCompletion {
    pub seq_no: u64,
    pub pe_id: usize,
    pub op: Op,
    pub bytes: u64,
    pub cycle: u64,
    pub first_issue: u64,
    /// Read data when data tracking is on.
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DmaStats {
    pub transfers: u64,
    pub elements: u64,
    pub bytes: u64,
    pub backpressure_cycles: u64,
}

#[derive(Debug, Clone)]
pub struct DmaEngine {
    buffers: Vec<DmaBuffer>,
    map: DmaRequestMap,
    order: VecDeque<usize>,
    beat: u64,
    convert_latency: u64,
    track_data: bool,
    rr: usize,
    pub stats: DmaStats,
}

impl DmaEngine {
    pub fn new(cfg: &ControllerConfig, track_data: bool) -> Self {
        Self {
            buffers: vec![DmaBuffer::idle(); cfg.dma_parallel_count.max(1)],
            map: DmaRequestMap::default(),
            order: VecDeque::new(),
            beat: u64::from(cfg.mem_if_data_width.max(1)),
            convert_latency: cfg.data_convert_latency,
            track_data,
            rr: 0,
            stats: DmaStats::default(),
        }
    }

    pub fn buffers(&self) -> &[DmaBuffer] {
        &self.buffers
    }

    pub fn request_map(&self) -> &DmaRequestMap {
        &self.map
    }

    /// Whether a header from `pe` would find a buffer.
    pub fn can_accept_header(&self, pe: usize) -> bool {
        self.map.get(pe).is_none() && self.buffers.iter().any(|b| b.status == BufferStatus::Idle)
    }

    pub fn non_idle(&self) -> usize {
        self.buffers.iter().filter(|b| b.status != BufferStatus::Idle).count()
    }

    /// Any transfer accepted but not yet retired.
    pub fn pending(&self) -> bool {
        !self.order.is_empty()
    }

    /// Some transfer has issued elements and has not retired yet.
    pub fn transferring(&self) -> bool {
        self.buffers.iter().any(|b| b.first_issue.is_some())
    }

    /// Armed buffers with elements left to issue.
    pub fn armed(&self, cycle: u64) -> usize {
        self.buffers
            .iter()
            .filter(|b| b.armed_at.is_some_and(|t| t <= cycle) && b.issued < b.elements)
            .count()
    }

    /// Sequence number of the oldest transfer not yet retired.
    pub fn oldest_seq(&self) -> Option<u64> {
        self.order.front().map(|&i| self.buffers[i].seq_no)
    }

    /// Earliest future cycle at which a buffer arms or a transfer can retire.
    pub fn next_event(&self) -> Option<u64> {
        let arms = self
            .buffers
            .iter()
            .filter(|b| b.issued < b.elements)
            .filter_map(|b| b.armed_at);
        let retire = self
            .order
            .front()
            .and_then(|&i| self.buffers[i].complete_at);
        arms.chain(retire).min()
    }

    pub fn dma_accept(&mut self, flit: &Flit, cycle: u64) -> Result<DmaAccept, DmaError> {
        match flit.kind {
            FlitKind::Header => {
                if self.map.get(flit.pe_id).is_some() {
                    return Err(DmaError::Backpressure(flit.pe_id));
                }
                let Some(idx) = self.buffers.iter().position(|b| b.status == BufferStatus::Idle) else {
                    return Err(DmaError::Backpressure(flit.pe_id));
                };
                let elements = flit.total_size.div_ceil(self.beat);
                let b = &mut self.buffers[idx];
                *b = DmaBuffer {
                    status: BufferStatus::Occupied,
                    owner_pe: Some(flit.pe_id),
                    seq_no: flit.seq_no,
                    op: flit.op,
                    address: flit.address,
                    expected_bytes: flit.total_size,
                    start_cycle: cycle,
                    elements: elements as u32,
                    ..DmaBuffer::idle()
                };
                self.map.map.insert(flit.pe_id, idx);
                self.order.push_back(idx);
                if flit.op == Op::Read {
                    b.status = BufferStatus::Transferring;
                    b.armed_at = Some(cycle);
                    Ok(DmaAccept::Armed)
                } else {
                    Ok(DmaAccept::Buffered)
                }
            }
            FlitKind::Payload => {
                let idx = self.map.get(flit.pe_id).ok_or_else(|| {
                    DmaError::Protocol(format!("payload flit from PE {} without a buffer", flit.pe_id))
                })?;
                let track = self.track_data;
                let b = &mut self.buffers[idx];
                if b.status != BufferStatus::Occupied || b.seq_no != flit.seq_no {
                    return Err(DmaError::Protocol(format!(
                        "payload flit for request {} hit buffer {idx} in state {:?}",
                        flit.seq_no, b.status
                    )));
                }
                let n = flit.payload_segment.len() as u64;
                if b.received_bytes + n > b.expected_bytes {
                    return Err(DmaError::Protocol(format!(
                        "request {} overflows its {} bytes",
                        flit.seq_no, b.expected_bytes
                    )));
                }
                b.received_bytes += n;
                if track {
                    b.staged.extend_from_slice(&flit.payload_segment);
                }
                if b.received_bytes == b.expected_bytes {
                    b.status = BufferStatus::Transferring;
                    b.armed_at = Some(cycle);
                    Ok(DmaAccept::Armed)
                } else {
                    Ok(DmaAccept::Buffered)
                }
            }
        }
    }

    fn overlaps_older(&self, idx: usize) -> bool {
        let b = &self.buffers[idx];
        let (lo, hi) = b.range();
        self.order.iter().take_while(|&&i| i != idx).any(|&i| {
            let o = &self.buffers[i];
            let (olo, ohi) = o.range();
            (b.op == Op::Write || o.op == Op::Write) && lo < ohi && olo < hi
        })
    }

    /// Next element to send toward DRAM, round-robin over armed buffers.
    /// `may_start` gates a transfer's first element by its sequence number.
    pub fn next_element(&mut self, cycle: u64, may_start: impl Fn(u64) -> bool) -> Option<MemAccess> {
        let n = self.buffers.len();
        for k in 0..n {
            let idx = (self.rr + k) % n;
            let b = &self.buffers[idx];
            if !b.armed_at.is_some_and(|t| t <= cycle) || b.issued >= b.elements {
                continue;
            }
            if b.first_issue.is_none() && (!may_start(b.seq_no) || self.overlaps_older(idx)) {
                continue;
            }
            let track = self.track_data;
            let beat = self.beat;
            let b = &mut self.buffers[idx];
            let e = b.issued;
            let off = u64::from(e) * beat;
            let bytes = beat.min(b.expected_bytes - off);
            let data = if track && b.op == Op::Write {
                b.staged[off as usize..(off + bytes) as usize].to_vec()
            } else {
                Vec::new()
            };
            b.issued += 1;
            b.first_issue.get_or_insert(cycle);
            self.rr = (idx + 1) % n;
            self.stats.elements += 1;
            return Some(MemAccess {
                address: b.address + off,
                bytes: bytes as u32,
                op: b.op,
                seq_no: b.seq_no,
                origin: Origin::Dma {
                    buffer: idx,
                    element: e,
                },
                data,
            });
        }
        None
    }

    /// An element finished in DRAM; `data` holds read bytes when tracking.
    pub fn element_done(&mut self, buffer: usize, element: u32, data: &[u8], cycle: u64) {
        let track = self.track_data;
        let beat = self.beat;
        let latency = self.convert_latency;
        let b = &mut self.buffers[buffer];
        if track && b.op == Op::Read {
            if b.read_data.is_empty() {
                b.read_data = vec![0; b.expected_bytes as usize];
            }
            let off = (u64::from(element) * beat) as usize;
            b.read_data[off..off + data.len()].copy_from_slice(data);
        }
        b.done += 1;
        if b.done == b.elements {
            b.complete_at = Some(cycle + latency);
        }
    }

    /// Transfers whose data is through conversion, in acceptance order.
    pub fn retire(&mut self, cycle: u64) -> Vec<DmaCompletion> {
        let mut out = Vec::new();
        while let Some(&idx) = self.order.front() {
            let b = &self.buffers[idx];
            if !b.complete_at.is_some_and(|t| t <= cycle) {
                break;
            }
            self.order.pop_front();
            let b = std::mem::replace(&mut self.buffers[idx], DmaBuffer::idle());
            let pe = b.owner_pe.expect("owned buffer");
            self.map.map.remove(&pe);
            self.stats.transfers += 1;
            self.stats.bytes += b.expected_bytes;
            out.push(DmaCompletion {
                seq_no: b.seq_no,
                pe_id: pe,
                op: b.op,
                bytes: b.expected_bytes,
                cycle,
                first_issue: b.first_issue.unwrap_or(cycle),
                data: b.read_data,
            });
        }
        out
    }
}
