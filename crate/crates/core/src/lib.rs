//! Cycle-level model of a programmable FPGA memory controller.
//!
//! The controller sits between processing elements (PEs) and a DRAM. Requests
//! arrive as flits on a shared input port and are routed by access class: fine
//! grained cacheline requests go to a set-associative cache engine, bulk
//! requests to a multi-buffer DMA engine. Both engines reach DRAM through a
//! batch-reordering scheduler that groups requests by row.

pub mod baseline;
pub mod cache;
pub mod checker;
pub mod config;
pub mod controller;
pub mod dma;
pub mod dram;
pub mod events;
pub mod report;
pub mod request;
pub mod scheduler;
pub mod sweep;
pub mod workloads;

pub use config::{AddressMap, ControllerConfig, DramTimingConfig};
pub use controller::{simulate, SimError, SimOptions, SimOutput};
pub use report::SimReport;
pub use request::{AccessClass, MemRequest, Op};
