//! Request lifecycle event log and its text format.
//!
//! ```text
//! #format_version=1
//! 12 submitted 0 3 C R 0x1000 64
//! 12 routed 0 cache
//! 40 batched 64 R
//! 41 dram-issued 0 R 0x1000 64 fill
//! 70 completed 0
//! ```

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::request::{AccessClass, Destination, Op};
use crate::scheduler::Origin;

pub const EVENT_LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueSource {
    Fill,
    Writeback,
    Dma,
}

impl From<Origin> for IssueSource {
    fn from(o: Origin) -> Self {
        match o {
            Origin::CacheFill { .. } => IssueSource::Fill,
            Origin::Writeback => IssueSource::Writeback,
            Origin::Dma { .. } => IssueSource::Dma,
        }
    }
}

impl fmt::Display for IssueSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssueSource::Fill => "fill",
            IssueSource::Writeback => "writeback",
            IssueSource::Dma => "dma",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Submitted {
        pe_id: usize,
        class: AccessClass,
        op: Op,
        address: u64,
        size: u64,
    },
    Routed(Destination),
    Batched {
        fill: usize,
        op: Op,
    },
    DramIssued {
        op: Op,
        address: u64,
        bytes: u32,
        source: IssueSource,
    },
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub cycle: u64,
    /// Request sequence number; zero for batch events.
    pub seq_no: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event log line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

fn class_letter(c: AccessClass) -> &'static str {
    match c {
        AccessClass::Cacheline => "C",
        AccessClass::Bulk => "D",
    }
}

fn op_letter(o: Op) -> &'static str {
    match o {
        Op::Read => "R",
        Op::Write => "W",
    }
}

impl EventLog {
    pub fn push(&mut self, cycle: u64, seq_no: u64, kind: EventKind) {
        self.events.push(Event { cycle, seq_no, kind });
    }

    pub fn render(&self) -> String {
        let mut s = format!("#format_version={EVENT_LOG_VERSION}\n");
        for e in &self.events {
            let c = e.cycle;
            let q = e.seq_no;
            let _ = match &e.kind {
                EventKind::Submitted {
                    pe_id,
                    class,
                    op,
                    address,
                    size,
                } => writeln!(
                    s,
                    "{c} submitted {q} {pe_id} {} {} {address:#x} {size}",
                    class_letter(*class),
                    op_letter(*op)
                ),
                EventKind::Routed(d) => writeln!(s, "{c} routed {q} {d}"),
                EventKind::Batched { fill, op } => writeln!(s, "{c} batched {fill} {}", op_letter(*op)),
                EventKind::DramIssued {
                    op,
                    address,
                    bytes,
                    source,
                } => writeln!(
                    s,
                    "{c} dram-issued {q} {} {address:#x} {bytes} {source}",
                    op_letter(*op)
                ),
                EventKind::Completed => writeln!(s, "{c} completed {q}"),
            };
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, LogParseError> {
        let mut log = EventLog::default();
        let mut seen_version = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| LogParseError { line, message };
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(h) = t.strip_prefix('#') {
                if let Some(v) = h.strip_prefix("format_version=") {
                    if v.trim() != EVENT_LOG_VERSION.to_string() {
                        return Err(err(format!("unsupported format_version {v}")));
                    }
                    seen_version = true;
                }
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            let num = |k: usize| -> Result<u64, LogParseError> {
                let s = f.get(k).ok_or_else(|| err(format!("missing field {k}")))?;
                match s.strip_prefix("0x") {
                    Some(h) => u64::from_str_radix(h, 16),
                    None => s.parse(),
                }
                .map_err(|_| err(format!("bad number {s:?}")))
            };
            let op = |k: usize| match f.get(k) {
                Some(&"R") => Ok(Op::Read),
                Some(&"W") => Ok(Op::Write),
                other => Err(err(format!("bad op {other:?}"))),
            };
            let cycle = num(0)?;
            let kind = f.get(1).copied().unwrap_or("");
            let (seq_no, kind) = match kind {
                "submitted" => {
                    let class = match f.get(4) {
                        Some(&"C") => AccessClass::Cacheline,
                        Some(&"D") => AccessClass::Bulk,
                        other => return Err(err(format!("bad class {other:?}"))),
                    };
                    (
                        num(2)?,
                        EventKind::Submitted {
                            pe_id: num(3)? as usize,
                            class,
                            op: op(5)?,
                            address: num(6)?,
                            size: num(7)?,
                        },
                    )
                }
                "routed" => {
                    let d = match f.get(3) {
                        Some(&"cache") => Destination::CacheEngine,
                        Some(&"dma") => Destination::DmaEngine,
                        other => return Err(err(format!("bad destination {other:?}"))),
                    };
                    (num(2)?, EventKind::Routed(d))
                }
                "batched" => (
                    0,
                    EventKind::Batched {
                        fill: num(2)? as usize,
                        op: op(3)?,
                    },
                ),
                "dram-issued" => {
                    let source = match f.get(6) {
                        Some(&"fill") => IssueSource::Fill,
                        Some(&"writeback") => IssueSource::Writeback,
                        Some(&"dma") => IssueSource::Dma,
                        other => return Err(err(format!("bad source {other:?}"))),
                    };
                    (
                        num(2)?,
                        EventKind::DramIssued {
                            op: op(3)?,
                            address: num(4)?,
                            bytes: num(5)? as u32,
                            source,
                        },
                    )
                }
                "completed" => (num(2)?, EventKind::Completed),
                other => return Err(err(format!("unknown event {other:?}"))),
            };
            log.push(cycle, seq_no, kind);
        }
        if !seen_version && !log.events.is_empty() {
            return Err(LogParseError {
                line: 1,
                message: "missing format_version header".into(),
            });
        }
        Ok(log)
    }
}
