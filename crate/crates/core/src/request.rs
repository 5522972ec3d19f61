//! Memory requests, FLIT segmentation and engine routing.

use std::fmt;

use thiserror::Error;

use crate::config::ControllerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Read,
    Write,
}

/// Which engine a request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessClass {
    /// Single-element access served by the cache engine.
    Cacheline,
    /// Multi-element streaming access served by the DMA engine.
    Bulk,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Read => "R",
            Op::Write => "W",
        })
    }
}

impl fmt::Display for AccessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessClass::Cacheline => "C",
            AccessClass::Bulk => "D",
        })
    }
}

/// One accelerator-issued memory access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemRequest {
    pub pe_id: usize,
    pub op: Op,
    pub access_class: AccessClass,
    pub address: u64,
    /// Bytes per element on the PE interface.
    pub payload_size: u32,
    /// Bytes covered by the whole request.
    pub total_size: u64,
    /// Write data, `total_size` bytes; empty for reads.
    pub payload: Vec<u8>,
    pub arrival_cycle: u64,
    pub seq_no: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("malformed request {seq_no}: {field} {reason}")]
    Malformed {
        seq_no: u64,
        field: &'static str,
        reason: String,
    },
    #[error("incomplete transfer for request {seq_no}: {reason}")]
    Incomplete { seq_no: u64, reason: String },
    #[error("{0} engine is disabled")]
    EngineDisabled(Destination),
}

impl MemRequest {
    /// Cacheline read of `size` bytes.
    pub fn cache_read(pe_id: usize, address: u64, size: u32) -> Self {
        Self {
            pe_id,
            op: Op::Read,
            access_class: AccessClass::Cacheline,
            address,
            payload_size: size,
            total_size: size.into(),
            payload: Vec::new(),
            arrival_cycle: 0,
            seq_no: 0,
        }
    }

    pub fn cache_write(pe_id: usize, address: u64, data: Vec<u8>) -> Self {
        let size = data.len() as u32;
        Self {
            op: Op::Write,
            payload: data,
            ..Self::cache_read(pe_id, address, size)
        }
    }

    /// Bulk read of `total` bytes moved in `element`-byte pieces.
    pub fn bulk_read(pe_id: usize, address: u64, total: u64, element: u32) -> Self {
        Self {
            pe_id,
            op: Op::Read,
            access_class: AccessClass::Bulk,
            address,
            payload_size: element,
            total_size: total,
            payload: Vec::new(),
            arrival_cycle: 0,
            seq_no: 0,
        }
    }

    pub fn bulk_write(pe_id: usize, address: u64, data: Vec<u8>, element: u32) -> Self {
        Self {
            op: Op::Write,
            ..Self::bulk_read(pe_id, address, data.len() as u64, element)
        }
        .with_payload(data)
    }

    fn with_payload(mut self, data: Vec<u8>) -> Self {
        self.payload = data;
        self
    }

    pub fn at(mut self, cycle: u64, seq_no: u64) -> Self {
        self.arrival_cycle = cycle;
        self.seq_no = seq_no;
        self
    }

    fn malformed(&self, field: &'static str, reason: impl Into<String>) -> RequestError {
        RequestError::Malformed {
            seq_no: self.seq_no,
            field,
            reason: reason.into(),
        }
    }

    /// Number of payload flits a write of this request is split into.
    pub fn payload_flits(&self) -> u64 {
        match self.op {
            Op::Read => 0,
            Op::Write => self.total_size.div_ceil(u64::from(self.payload_size.max(1))),
        }
    }

    /// Checks the request against the controller configuration.
    pub fn check(&self, cfg: &ControllerConfig) -> Result<(), RequestError> {
        self.check_shape()?;
        if self.pe_id >= cfg.num_pes {
            return Err(self.malformed("pe_id", format!("{} >= num_pes {}", self.pe_id, cfg.num_pes)));
        }
        if cfg.app_addr_width < 64 && self.address >> cfg.app_addr_width != 0 {
            return Err(self.malformed(
                "address",
                format!("{:#x} exceeds {} address bits", self.address, cfg.app_addr_width),
            ));
        }
        if self.payload_size > cfg.app_io_data_width {
            return Err(self.malformed(
                "payload_size",
                format!("{} > app_io_data_width {}", self.payload_size, cfg.app_io_data_width),
            ));
        }
        let line = cfg.cache_line_bytes().max(1);
        if self.access_class == AccessClass::Cacheline
            && self.address / line != (self.address + self.total_size - 1) / line
        {
            return Err(self.malformed(
                "address",
                format!("{:#x}+{} crosses a {line}-byte line", self.address, self.total_size),
            ));
        }
        if self.access_class == AccessClass::Bulk && self.total_size > cfg.dma_max_transaction {
            return Err(self.malformed(
                "total_size",
                format!("{} > dma_max_transaction {}", self.total_size, cfg.dma_max_transaction),
            ));
        }
        Ok(())
    }

    /// Configuration-independent invariants.
    pub fn check_shape(&self) -> Result<(), RequestError> {
        if self.payload_size == 0 {
            return Err(self.malformed("payload_size", "must be non-zero"));
        }
        if self.access_class == AccessClass::Cacheline
            && self.total_size != u64::from(self.payload_size)
        {
            return Err(self.malformed(
                "total_size",
                format!(
                    "cacheline access of {} bytes with payload_size {}",
                    self.total_size, self.payload_size
                ),
            ));
        }
        if self.total_size == 0 {
            return Err(self.malformed("total_size", "must be non-zero"));
        }
        let expected = match self.op {
            Op::Read => 0,
            Op::Write => self.total_size,
        };
        if self.payload.len() as u64 != expected {
            return Err(self.malformed(
                "payload",
                format!("{} bytes, expected {expected}", self.payload.len()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitKind {
    Header,
    Payload,
}

/// Flow-control unit moved between controller modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flit {
    pub kind: FlitKind,
    pub pe_id: usize,
    pub op: Op,
    pub access_class: AccessClass,
    pub address: u64,
    pub total_size: u64,
    pub payload_size: u32,
    pub flit_index: u32,
    pub payload_segment: Vec<u8>,
    pub seq_no: u64,
}

/// Splits a request into a header flit followed by its payload segments.
pub fn flit_encode(req: &MemRequest, cfg: &ControllerConfig) -> Result<Vec<Flit>, RequestError> {
    req.check(cfg)?;
    let header = Flit {
        kind: FlitKind::Header,
        pe_id: req.pe_id,
        op: req.op,
        access_class: req.access_class,
        address: req.address,
        total_size: req.total_size,
        payload_size: req.payload_size,
        flit_index: 0,
        payload_segment: Vec::new(),
        seq_no: req.seq_no,
    };
    let mut flits = Vec::with_capacity(1 + req.payload_flits() as usize);
    if req.op == Op::Write {
        for (i, seg) in req.payload.chunks(req.payload_size as usize).enumerate() {
            flits.push(Flit {
                kind: FlitKind::Payload,
                flit_index: i as u32 + 1,
                payload_segment: seg.to_vec(),
                ..header.clone()
            });
        }
    }
    flits.insert(0, header);
    Ok(flits)
}

/// Reassembles a request from a complete, in-order flit sequence. The arrival
/// cycle is not carried by flits and comes back as zero.
pub fn flit_decode(flits: &[Flit]) -> Result<MemRequest, RequestError> {
    let Some(header) = flits.first() else {
        return Err(RequestError::Incomplete {
            seq_no: 0,
            reason: "empty flit sequence".into(),
        });
    };
    let incomplete = |reason: String| RequestError::Incomplete {
        seq_no: header.seq_no,
        reason,
    };
    if header.kind != FlitKind::Header || header.flit_index != 0 {
        return Err(incomplete("sequence does not start with a header".into()));
    }
    let mut req = MemRequest {
        pe_id: header.pe_id,
        op: header.op,
        access_class: header.access_class,
        address: header.address,
        payload_size: header.payload_size,
        total_size: header.total_size,
        payload: Vec::new(),
        arrival_cycle: 0,
        seq_no: header.seq_no,
    };
    for (pos, f) in flits.iter().enumerate().skip(1) {
        if f.flit_index as usize != pos {
            return Err(incomplete(format!(
                "flit_index {} at position {pos}",
                f.flit_index
            )));
        }
        if f.kind != FlitKind::Payload || f.seq_no != header.seq_no {
            return Err(incomplete(format!("foreign flit at position {pos}")));
        }
        req.payload.extend_from_slice(&f.payload_segment);
    }
    let expected = req.payload_flits();
    let got = flits.len() as u64 - 1;
    if got != expected {
        return Err(incomplete(format!("{got} payload flits, expected {expected}")));
    }
    if req.op == Op::Write && req.payload.len() as u64 != req.total_size {
        return Err(incomplete(format!(
            "{} payload bytes, expected {}",
            req.payload.len(),
            req.total_size
        )));
    }
    Ok(req)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Destination {
    CacheEngine,
    DmaEngine,
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Destination::CacheEngine => "cache",
            Destination::DmaEngine => "dma",
        })
    }
}

/// Picks the engine by access class.
pub fn route(flit: &Flit, cfg: &ControllerConfig) -> Result<Destination, RequestError> {
    route_class(flit.access_class, cfg)
}

pub fn route_class(class: AccessClass, cfg: &ControllerConfig) -> Result<Destination, RequestError> {
    match class {
        AccessClass::Cacheline if cfg.enable_cacheline => Ok(Destination::CacheEngine),
        AccessClass::Bulk if cfg.enable_dma => Ok(Destination::DmaEngine),
        AccessClass::Cacheline => Err(RequestError::EngineDisabled(Destination::CacheEngine)),
        AccessClass::Bulk => Err(RequestError::EngineDisabled(Destination::DmaEngine)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ControllerConfig {
        ControllerConfig::default()
    }

    /// Independent segmentation: byte ranges of each payload flit.
    fn segments(total: u64, p: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < total {
            let end = (start + p).min(total);
            out.push((start, end));
            start = end;
        }
        out
    }

    #[test]
    fn read_is_header_only() {
        let r = MemRequest::cache_read(0, 0x40, 64);
        let f = flit_encode(&r, &cfg()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FlitKind::Header);
    }

    #[test]
    fn write_256_by_64() {
        let r = MemRequest::bulk_write(1, 0x1000, vec![7; 256], 64);
        let f = flit_encode(&r, &cfg()).unwrap();
        let seg = segments(256, 64);
        assert_eq!(seg.len(), 4);
        assert_eq!(f.len(), 1 + seg.len());
        for (flit, (a, b)) in f[1..].iter().zip(&seg) {
            assert_eq!(flit.payload_segment.len() as u64, b - a);
        }
    }

    #[test]
    fn write_100_by_64_has_short_tail() {
        let data: Vec<u8> = (0..100).collect();
        let r = MemRequest::bulk_write(1, 0x1000, data.clone(), 64);
        let f = flit_encode(&r, &cfg()).unwrap();
        let seg = segments(100, 64);
        assert_eq!(f.len(), 3);
        assert_eq!(f[2].payload_segment.len(), 36);
        assert_eq!(f[2].payload_segment, data[seg[1].0 as usize..seg[1].1 as usize]);
    }

    #[test]
    fn malformed_names_field() {
        let mut r = MemRequest::cache_read(99, 0, 8);
        match flit_encode(&r, &cfg()) {
            Err(RequestError::Malformed { field, .. }) => assert_eq!(field, "pe_id"),
            other => panic!("{other:?}"),
        }
        r.pe_id = 0;
        r.total_size = 16;
        match flit_encode(&r, &cfg()) {
            Err(RequestError::Malformed { field, .. }) => assert_eq!(field, "total_size"),
            other => panic!("{other:?}"),
        }
        let big = MemRequest::bulk_read(0, 0, 1 << 20, 64);
        assert!(flit_encode(&big, &cfg()).is_err());
    }

    #[test]
    fn decode_roundtrip() {
        let r = MemRequest::bulk_write(3, 0x2000, (0..=255).collect(), 48).at(0, 17);
        assert_eq!(flit_decode(&flit_encode(&r, &cfg()).unwrap()).unwrap(), r);
    }

    #[test]
    fn decode_detects_gap() {
        let r = MemRequest::bulk_write(3, 0x2000, vec![1; 256], 64);
        let mut f = flit_encode(&r, &cfg()).unwrap();
        f.remove(2);
        assert!(matches!(flit_decode(&f), Err(RequestError::Incomplete { .. })));
    }

    #[test]
    fn decode_detects_header_only_write() {
        let r = MemRequest::bulk_write(3, 0x2000, vec![1; 100], 64);
        let f = flit_encode(&r, &cfg()).unwrap();
        assert!(matches!(flit_decode(&f[..1]), Err(RequestError::Incomplete { .. })));
    }

    #[test]
    fn routing_by_class() {
        let c = cfg();
        let cr = flit_encode(&MemRequest::cache_read(0, 0, 8), &c).unwrap();
        let br = flit_encode(&MemRequest::bulk_read(0, 0, 4096, 64), &c).unwrap();
        assert_eq!(route(&cr[0], &c).unwrap(), Destination::CacheEngine);
        assert_eq!(route(&br[0], &c).unwrap(), Destination::DmaEngine);
        let no_dma = ControllerConfig {
            enable_dma: false,
            ..c
        };
        assert_eq!(
            route(&br[0], &no_dma),
            Err(RequestError::EngineDisabled(Destination::DmaEngine))
        );
    }
}
