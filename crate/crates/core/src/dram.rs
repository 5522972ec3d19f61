//! Open-row DRAM latency model.
//!
//! Latencies are counted in DRAM clock cycles and converted to controller
//! cycles with a ceiling. There is no overlap between accesses: each access
//! pays its full latency.

use std::collections::HashMap;

use crate::config::DramTimingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecodedAddress {
    pub row: u64,
    pub bank: u64,
    pub column: u64,
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Splits a byte address into row, bank and column slices. Bits above the
/// mapped width are ignored.
pub fn decode_address(addr: u64, timing: &DramTimingConfig) -> DecodedAddress {
    let m = timing.address_map;
    DecodedAddress {
        column: addr & mask(m.column_bits),
        bank: (addr >> m.column_bits) & mask(m.bank_bits),
        row: (addr >> (m.column_bits + m.bank_bits)) & mask(m.row_bits),
    }
}

pub fn encode_address(d: DecodedAddress, timing: &DramTimingConfig) -> u64 {
    let m = timing.address_map;
    (d.row << (m.column_bits + m.bank_bits)) | (d.bank << m.column_bits) | d.column
}

/// Index of the DRAM page (bank and row together) holding `addr`.
pub fn page_of(addr: u64, timing: &DramTimingConfig) -> u64 {
    let m = timing.address_map;
    (addr >> m.column_bits) & mask(m.bank_bits + m.row_bits)
}

/// Converts DRAM clock cycles to controller cycles, rounding up.
pub fn to_controller_cycles(mem_cycles: u64, timing: &DramTimingConfig) -> u64 {
    (mem_cycles * timing.t_mem_ps).div_ceil(timing.t_fpga_ps)
}

/// Average latency of a row hit.
pub fn t_mem_seq(timing: &DramTimingConfig) -> u64 {
    to_controller_cycles(timing.t_cl, timing)
}

/// Average latency of a row conflict.
pub fn t_mem_rand(timing: &DramTimingConfig) -> u64 {
    to_controller_cycles(timing.t_rp + timing.t_cl + timing.t_rcd, timing)
}

/// How an access met the row buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOutcome {
    /// Bank had no open row yet.
    FirstHit,
    Hit,
    Conflict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RowStats {
    pub first_hits: u64,
    pub hits: u64,
    pub conflicts: u64,
}

impl RowStats {
    pub fn total(&self) -> u64 {
        self.first_hits + self.hits + self.conflicts
    }
}

/// Per-bank open-row record.
#[derive(Debug, Clone)]
pub struct BankState {
    open_row: Vec<Option<u64>>,
    pub stats: RowStats,
}

impl BankState {
    pub fn new(num_banks: usize) -> Self {
        Self {
            open_row: vec![None; num_banks],
            stats: RowStats::default(),
        }
    }

    pub fn open_row(&self, bank: u64) -> Option<u64> {
        self.open_row[bank as usize]
    }

    /// Memory-cycle latency of an access and its row-buffer outcome, updating
    /// the bank's open row.
    pub fn access_mem_cycles(&mut self, d: DecodedAddress, timing: &DramTimingConfig) -> (u64, RowOutcome) {
        let slot = &mut self.open_row[d.bank as usize];
        let (cycles, outcome) = match *slot {
            None => (timing.t_cl + timing.t_rcd, RowOutcome::FirstHit),
            Some(r) if r == d.row => (timing.t_cl, RowOutcome::Hit),
            Some(_) => (timing.t_rp + timing.t_cl + timing.t_rcd, RowOutcome::Conflict),
        };
        *slot = Some(d.row);
        match outcome {
            RowOutcome::FirstHit => self.stats.first_hits += 1,
            RowOutcome::Hit => self.stats.hits += 1,
            RowOutcome::Conflict => self.stats.conflicts += 1,
        }
        (cycles, outcome)
    }

    /// Controller-cycle latency of one access.
    pub fn access(&mut self, d: DecodedAddress, timing: &DramTimingConfig) -> u64 {
        let (mc, _) = self.access_mem_cycles(d, timing);
        to_controller_cycles(mc, timing)
    }
}

const PAGE: u64 = 4096;

/// Sparse byte-addressed backing store; unwritten bytes read as zero.
#[derive(Debug, Clone, Default)]
pub struct DataStore {
    pages: HashMap<u64, Box<[u8; PAGE as usize]>>,
}

impl DataStore {
    pub fn read(&self, addr: u64, out: &mut [u8]) {
        for (i, b) in out.iter_mut().enumerate() {
            let a = addr + i as u64;
            *b = self
                .pages
                .get(&(a / PAGE))
                .map_or(0, |p| p[(a % PAGE) as usize]);
        }
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) {
        for (i, &b) in data.iter().enumerate() {
            let a = addr + i as u64;
            self.pages
                .entry(a / PAGE)
                .or_insert_with(|| Box::new([0; PAGE as usize]))[(a % PAGE) as usize] = b;
        }
    }
}
