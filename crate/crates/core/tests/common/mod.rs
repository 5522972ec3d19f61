#![allow(dead_code)]

use memctl::workloads::payload_bytes;
use memctl::{AccessClass, ControllerConfig, MemRequest, Op};
use rand::Rng;

/// Random cache and bulk requests over a small address space, so that
/// addresses collide often. Arrivals are non-decreasing.
pub fn mixed_trace(rng: &mut impl Rng, n: usize, space: u64, cfg: &ControllerConfig) -> Vec<MemRequest> {
    let line = cfg.cache_line_bytes();
    let io = u64::from(cfg.app_io_data_width);
    let mut cycle = 0;
    (0..n as u64)
        .map(|seq| {
            cycle += rng.gen_range(0..6);
            let pe = rng.gen_range(0..cfg.num_pes);
            let write = rng.gen_bool(0.4);
            let r = if rng.gen_bool(0.6) {
                let size = 1u64 << rng.gen_range(0..=io.min(line).trailing_zeros());
                let addr = rng.gen_range(0..space / size) * size;
                if write {
                    MemRequest::cache_write(pe, addr, payload_bytes(addr, size as usize, seq))
                } else {
                    MemRequest::cache_read(pe, addr, size as u32)
                }
            } else {
                let elem = 64u32;
                let size = u64::from(elem) * rng.gen_range(1..=16);
                let addr = rng.gen_range(0..(space - size) / 8) * 8;
                if write {
                    MemRequest::bulk_write(pe, addr, payload_bytes(addr, size as usize, seq), elem)
                } else {
                    MemRequest::bulk_read(pe, addr, size, elem)
                }
            };
            r.at(cycle, seq)
        })
        .collect()
}

/// Plain LRU set-associative cache with write-allocate. Returns hit/miss
/// per access, nothing else.
pub struct RefLru {
    line: u64,
    sets: Vec<Vec<u64>>,
    ways: usize,
}

impl RefLru {
    pub fn new(line_bytes: u64, lines: usize, ways: usize) -> Self {
        Self {
            line: line_bytes,
            sets: vec![Vec::new(); lines / ways],
            ways,
        }
    }

    pub fn access(&mut self, addr: u64) -> bool {
        let l = addr / self.line;
        let n = self.sets.len() as u64;
        let set = &mut self.sets[(l % n) as usize];
        let hit = match set.iter().position(|&x| x == l) {
            Some(i) => {
                set.remove(i);
                true
            }
            None => {
                if set.len() == self.ways {
                    set.remove(0);
                }
                false
            }
        };
        set.push(l);
        hit
    }
}

pub fn is_write(r: &MemRequest) -> bool {
    r.op == Op::Write
}

pub fn is_cache(r: &MemRequest) -> bool {
    r.access_class == AccessClass::Cacheline
}
