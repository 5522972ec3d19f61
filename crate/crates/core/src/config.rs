//! Controller and DRAM timing parameters.
//!
//! Both structs are plain values: build them with `Default`, tweak fields, and
//! check them with [`validate`]. The line-oriented text form handled by
//! [`load_config`] and [`render`] is what the CLI reads and writes.

use std::fmt;

use thiserror::Error;

/// Every reconfigurable parameter of the controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerConfig {
    /// Bytes per memory-interface beat.
    pub mem_if_data_width: u32,
    /// Memory-interface address width in bits.
    pub mem_if_addr_width: u32,
    /// Bytes per PE interface beat.
    pub app_io_data_width: u32,
    /// PE-side address width in bits.
    pub app_addr_width: u32,
    pub num_pes: usize,
    pub enable_scheduler: bool,
    pub enable_cacheline: bool,
    pub enable_dma: bool,
    /// Largest bulk transfer in bytes (DMA buffer size).
    pub dma_max_transaction: u64,
    pub dma_parallel_count: usize,
    /// Requests per scheduler batch (N).
    pub sched_batch_size: usize,
    /// Cycles a batch may stay open after its first request.
    pub sched_timeout: u64,
    /// Length of the recent-traffic window used by the bypass decision;
    /// 0 turns bypass off.
    pub sched_bypass_window: usize,
    /// Traffic below one request per this many cycles counts as low.
    pub sched_bypass_rate: u64,
    /// Cache line width in bits.
    pub cache_line_width: u32,
    pub cache_num_lines: usize,
    /// Ways per set (DoSA).
    pub cache_associativity: usize,
    /// Outstanding-miss entries before the PE pipeline stalls.
    pub cache_max_outstanding_misses: usize,
    /// FLIT generation and path selection latency.
    pub ctrl_overhead: u64,
    /// Serial/parallel conversion around the sorting network.
    pub data_cond_latency: u64,
    /// PE/DRAM data width conversion in the DMA engine.
    pub data_convert_latency: u64,
    /// PE pipeline depth.
    pub cache_pipeline_fill: u64,
    /// MEM pipeline depth.
    pub mem_pipeline_fill: u64,
    /// Skip the typical-range checks (structural checks still apply).
    pub allow_out_of_range: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            mem_if_data_width: 64,
            mem_if_addr_width: 31,
            app_io_data_width: 64,
            app_addr_width: 32,
            num_pes: 8,
            enable_scheduler: true,
            enable_cacheline: true,
            enable_dma: true,
            dma_max_transaction: 16 * 1024,
            dma_parallel_count: 4,
            sched_batch_size: 64,
            sched_timeout: 40,
            sched_bypass_window: 16,
            sched_bypass_rate: 8,
            cache_line_width: 512,
            cache_num_lines: 4096,
            cache_associativity: 4,
            cache_max_outstanding_misses: 64,
            ctrl_overhead: 10,
            data_cond_latency: 2,
            data_convert_latency: 2,
            cache_pipeline_fill: 4,
            mem_pipeline_fill: 3,
            allow_out_of_range: false,
        }
    }
}

impl ControllerConfig {
    pub fn cache_line_bytes(&self) -> u64 {
        u64::from(self.cache_line_width / 8)
    }

    pub fn cache_num_sets(&self) -> usize {
        self.cache_num_lines / self.cache_associativity.max(1)
    }
}

/// Bit-slice layout of a DRAM address, most significant first: row, bank, column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddressMap {
    pub row_bits: u32,
    pub bank_bits: u32,
    pub column_bits: u32,
}

impl AddressMap {
    pub fn total_bits(&self) -> u32 {
        self.row_bits + self.bank_bits + self.column_bits
    }
}

impl fmt::Display for AddressMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.row_bits, self.bank_bits, self.column_bits)
    }
}

/// DRAM timing constants. Clock periods are held in picoseconds so that
/// clock-domain conversions stay in exact integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DramTimingConfig {
    pub t_cl: u64,
    pub t_rcd: u64,
    pub t_rp: u64,
    /// DRAM clock period.
    pub t_mem_ps: u64,
    /// Controller clock period.
    pub t_fpga_ps: u64,
    pub num_banks: usize,
    pub address_map: AddressMap,
}

impl Default for DramTimingConfig {
    fn default() -> Self {
        Self {
            t_cl: 17,
            t_rcd: 17,
            t_rp: 17,
            t_mem_ps: 833,
            t_fpga_ps: 3333,
            num_banks: 16,
            address_map: AddressMap {
                row_bits: 14,
                bank_bits: 4,
                column_bits: 13,
            },
        }
    }
}

/// One failed check: the offending field and what was expected of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

struct Checker<'a> {
    out: &'a mut Vec<Violation>,
    ranged: bool,
}

impl Checker<'_> {
    fn range(&mut self, field: &'static str, value: u64, lo: u64, hi: u64) {
        if value == 0 && lo > 0 {
            self.fail(field, format!("{value} must be non-zero"));
        } else if self.ranged && !(lo..=hi).contains(&value) {
            self.fail(field, format!("{value} outside [{lo}, {hi}]"));
        }
    }

    fn fail(&mut self, field: &'static str, message: String) {
        self.out.push(Violation { field, message });
    }
}

/// Checks both configs against the typical ranges and structural constraints.
/// Never fails: violations are returned as values.
pub fn validate(config: &ControllerConfig, timing: &DramTimingConfig) -> ValidationResult {
    let mut violations = Vec::new();
    let mut ck = Checker {
        out: &mut violations,
        ranged: !config.allow_out_of_range,
    };
    let c = config;
    ck.range("mem_if_data_width", c.mem_if_data_width.into(), 64, 512);
    ck.range("mem_if_addr_width", c.mem_if_addr_width.into(), 20, 36);
    ck.range("app_io_data_width", c.app_io_data_width.into(), 1, 64);
    ck.range("app_addr_width", c.app_addr_width.into(), 28, 37);
    ck.range("num_pes", c.num_pes as u64, 1, 128);
    ck.range("dma_max_transaction", c.dma_max_transaction, 256, 256 * 1024);
    ck.range("dma_parallel_count", c.dma_parallel_count as u64, 1, 8);
    ck.range("sched_batch_size", c.sched_batch_size as u64, 4, 128);
    ck.range("sched_timeout", c.sched_timeout, 4, 40);
    ck.range("cache_line_width", c.cache_line_width.into(), 256, 1024);
    ck.range("cache_num_lines", c.cache_num_lines as u64, 256, 16384);
    ck.range("cache_associativity", c.cache_associativity as u64, 1, 16);

    if c.sched_batch_size > 0 && !c.sched_batch_size.is_power_of_two() {
        ck.fail(
            "sched_batch_size",
            format!("{} is not a power of two", c.sched_batch_size),
        );
    }
    if c.mem_if_data_width > 0 && !c.mem_if_data_width.is_power_of_two() {
        ck.fail(
            "mem_if_data_width",
            format!("{} is not a power of two", c.mem_if_data_width),
        );
    }
    if !c.cache_line_width.is_multiple_of(8) || !(c.cache_line_width / 8).is_power_of_two() {
        ck.fail(
            "cache_line_width",
            format!("{} bits is not a power-of-two number of bytes", c.cache_line_width),
        );
    }
    if c.cache_associativity > 0 && !c.cache_num_lines.is_multiple_of(c.cache_associativity) {
        ck.fail(
            "cache_num_lines",
            format!(
                "{} not divisible by associativity {}",
                c.cache_num_lines, c.cache_associativity
            ),
        );
    }
    if c.ctrl_overhead > 10 {
        ck.fail("ctrl_overhead", format!("{} exceeds 10 cycles", c.ctrl_overhead));
    }
    if !c.enable_cacheline && !c.enable_dma {
        ck.fail("enable_dma", "cacheline and DMA engines both disabled".into());
    }
    if c.cache_max_outstanding_misses == 0 {
        ck.fail("cache_max_outstanding_misses", "must be non-zero".into());
    }

    let t = timing;
    for (field, v) in [
        ("t_cl", t.t_cl),
        ("t_rcd", t.t_rcd),
        ("t_rp", t.t_rp),
        ("t_mem", t.t_mem_ps),
        ("t_fpga", t.t_fpga_ps),
    ] {
        if v == 0 {
            ck.fail(field, "must be strictly positive".into());
        }
    }
    if !t.num_banks.is_power_of_two() {
        ck.fail("num_banks", format!("{} is not a power of two", t.num_banks));
    } else if 1usize << t.address_map.bank_bits != t.num_banks {
        ck.fail(
            "address_map",
            format!(
                "{} bank bits do not address {} banks",
                t.address_map.bank_bits, t.num_banks
            ),
        );
    }
    if t.address_map.total_bits() > c.mem_if_addr_width {
        ck.fail(
            "address_map",
            format!(
                "{} bits exceed the {}-bit memory address",
                t.address_map.total_bits(),
                c.mem_if_addr_width
            ),
        );
    }
    if c.mem_if_data_width.is_power_of_two()
        && (1u64 << t.address_map.column_bits) < u64::from(c.mem_if_data_width)
    {
        ck.fail("address_map", "column slice narrower than one memory beat".into());
    }

    ValidationResult { violations }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Every recognised key, in rendering order.
pub const KEYS: &[&str] = &[
    "controller.mem_if_data_width",
    "controller.mem_if_addr_width",
    "controller.app_io_data_width",
    "controller.app_addr_width",
    "controller.num_pes",
    "controller.enable_scheduler",
    "controller.enable_cacheline",
    "controller.enable_dma",
    "controller.ctrl_overhead",
    "controller.data_cond_latency",
    "controller.data_convert_latency",
    "controller.allow_out_of_range",
    "dma.max_transaction",
    "dma.parallel_count",
    "sched.batch_size",
    "sched.timeout",
    "sched.bypass_window",
    "sched.bypass_rate",
    "cache.line_width",
    "cache.num_lines",
    "cache.associativity",
    "cache.max_outstanding_misses",
    "cache.pipeline_fill",
    "cache.mem_pipeline_fill",
    "dram.t_cl",
    "dram.t_rcd",
    "dram.t_rp",
    "dram.t_mem",
    "dram.t_fpga",
    "dram.num_banks",
    "dram.address_map",
];

#[derive(Debug, PartialEq, Eq)]
pub enum SetKeyError {
    Unknown,
    BadValue(String),
}

fn num<T: std::str::FromStr>(value: &str) -> Result<T, SetKeyError> {
    value
        .parse()
        .map_err(|_| SetKeyError::BadValue(format!("expected a number, got `{value}`")))
}

fn flag(value: &str) -> Result<bool, SetKeyError> {
    match value {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(SetKeyError::BadValue(format!("expected 1/0, got `{value}`"))),
    }
}

fn ns_to_ps(value: &str) -> Result<u64, SetKeyError> {
    let ns: f64 = num(value)?;
    if !ns.is_finite() || ns < 0.0 {
        return Err(SetKeyError::BadValue(format!("bad period `{value}`")));
    }
    Ok((ns * 1000.0).round() as u64)
}

fn ps_to_ns(ps: u64) -> String {
    let s = format!("{}.{:03}", ps / 1000, ps % 1000);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn parse_map(value: &str) -> Result<AddressMap, SetKeyError> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(SetKeyError::BadValue(format!(
            "address_map must be row:bank:column bit widths, got `{value}`"
        )));
    }
    Ok(AddressMap {
        row_bits: num(parts[0])?,
        bank_bits: num(parts[1])?,
        column_bits: num(parts[2])?,
    })
}

/// Assigns one `section.key` value. Shared by the document loader and sweeps.
pub fn set_key(
    c: &mut ControllerConfig,
    t: &mut DramTimingConfig,
    key: &str,
    value: &str,
) -> Result<(), SetKeyError> {
    match key {
        "controller.mem_if_data_width" => c.mem_if_data_width = num(value)?,
        "controller.mem_if_addr_width" => c.mem_if_addr_width = num(value)?,
        "controller.app_io_data_width" => c.app_io_data_width = num(value)?,
        "controller.app_addr_width" => c.app_addr_width = num(value)?,
        "controller.num_pes" => c.num_pes = num(value)?,
        "controller.enable_scheduler" => c.enable_scheduler = flag(value)?,
        "controller.enable_cacheline" => c.enable_cacheline = flag(value)?,
        "controller.enable_dma" => c.enable_dma = flag(value)?,
        "controller.ctrl_overhead" => c.ctrl_overhead = num(value)?,
        "controller.data_cond_latency" => c.data_cond_latency = num(value)?,
        "controller.data_convert_latency" => c.data_convert_latency = num(value)?,
        "controller.allow_out_of_range" => c.allow_out_of_range = flag(value)?,
        "dma.max_transaction" => c.dma_max_transaction = num(value)?,
        "dma.parallel_count" => c.dma_parallel_count = num(value)?,
        "sched.batch_size" => c.sched_batch_size = num(value)?,
        "sched.timeout" => c.sched_timeout = num(value)?,
        "sched.bypass_window" => c.sched_bypass_window = num(value)?,
        "sched.bypass_rate" => c.sched_bypass_rate = num(value)?,
        "cache.line_width" => c.cache_line_width = num(value)?,
        "cache.num_lines" => c.cache_num_lines = num(value)?,
        "cache.associativity" => c.cache_associativity = num(value)?,
        "cache.max_outstanding_misses" => c.cache_max_outstanding_misses = num(value)?,
        "cache.pipeline_fill" => c.cache_pipeline_fill = num(value)?,
        "cache.mem_pipeline_fill" => c.mem_pipeline_fill = num(value)?,
        "dram.t_cl" => t.t_cl = num(value)?,
        "dram.t_rcd" => t.t_rcd = num(value)?,
        "dram.t_rp" => t.t_rp = num(value)?,
        "dram.t_mem" => t.t_mem_ps = ns_to_ps(value)?,
        "dram.t_fpga" => t.t_fpga_ps = ns_to_ps(value)?,
        "dram.num_banks" => t.num_banks = num(value)?,
        "dram.address_map" => t.address_map = parse_map(value)?,
        _ => return Err(SetKeyError::Unknown),
    }
    Ok(())
}

/// Reads back the current value of a key in its document form.
pub fn get_key(c: &ControllerConfig, t: &DramTimingConfig, key: &str) -> Option<String> {
    let b = |v: bool| if v { "1".to_string() } else { "0".to_string() };
    Some(match key {
        "controller.mem_if_data_width" => c.mem_if_data_width.to_string(),
        "controller.mem_if_addr_width" => c.mem_if_addr_width.to_string(),
        "controller.app_io_data_width" => c.app_io_data_width.to_string(),
        "controller.app_addr_width" => c.app_addr_width.to_string(),
        "controller.num_pes" => c.num_pes.to_string(),
        "controller.enable_scheduler" => b(c.enable_scheduler),
        "controller.enable_cacheline" => b(c.enable_cacheline),
        "controller.enable_dma" => b(c.enable_dma),
        "controller.ctrl_overhead" => c.ctrl_overhead.to_string(),
        "controller.data_cond_latency" => c.data_cond_latency.to_string(),
        "controller.data_convert_latency" => c.data_convert_latency.to_string(),
        "controller.allow_out_of_range" => b(c.allow_out_of_range),
        "dma.max_transaction" => c.dma_max_transaction.to_string(),
        "dma.parallel_count" => c.dma_parallel_count.to_string(),
        "sched.batch_size" => c.sched_batch_size.to_string(),
        "sched.timeout" => c.sched_timeout.to_string(),
        "sched.bypass_window" => c.sched_bypass_window.to_string(),
        "sched.bypass_rate" => c.sched_bypass_rate.to_string(),
        "cache.line_width" => c.cache_line_width.to_string(),
        "cache.num_lines" => c.cache_num_lines.to_string(),
        "cache.associativity" => c.cache_associativity.to_string(),
        "cache.max_outstanding_misses" => c.cache_max_outstanding_misses.to_string(),
        "cache.pipeline_fill" => c.cache_pipeline_fill.to_string(),
        "cache.mem_pipeline_fill" => c.mem_pipeline_fill.to_string(),
        "dram.t_cl" => t.t_cl.to_string(),
        "dram.t_rcd" => t.t_rcd.to_string(),
        "dram.t_rp" => t.t_rp.to_string(),
        "dram.t_mem" => ps_to_ns(t.t_mem_ps),
        "dram.t_fpga" => ps_to_ns(t.t_fpga_ps),
        "dram.num_banks" => t.num_banks.to_string(),
        "dram.address_map" => t.address_map.to_string(),
        _ => return None,
    })
}

/// Parses a configuration document. Omitted keys keep their defaults and the
/// result is validated before it is returned.
pub fn load_config(text: &str) -> Result<(ControllerConfig, DramTimingConfig), ConfigError> {
    let mut c = ControllerConfig::default();
    let mut t = DramTimingConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `section.key = value`, got `{body}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match set_key(&mut c, &mut t, key, value) {
            Ok(()) => {}
            Err(SetKeyError::Unknown) => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
            Err(SetKeyError::BadValue(message)) => return Err(ConfigError::Parse { line, message }),
        }
    }
    let v = validate(&c, &t);
    if !v.is_ok() {
        return Err(ConfigError::Invalid(v.violations));
    }
    Ok((c, t))
}

/// Renders both configs as a complete document that [`load_config`] accepts.
pub fn render(c: &ControllerConfig, t: &DramTimingConfig) -> String {
    let mut out = String::from("# memctl configuration\n# format_version=1\n");
    let mut section = "";
    for key in KEYS {
        let (sec, _) = key.split_once('.').unwrap();
        if sec != section {
            out.push('\n');
            section = sec;
        }
        out.push_str(&format!("{key} = {}\n", get_key(c, t, key).unwrap()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(c: &ControllerConfig) -> ValidationResult {
        validate(c, &DramTimingConfig::default())
    }

    #[test]
    fn defaults_are_valid() {
        let r = check(&ControllerConfig::default());
        assert!(r.is_ok(), "{:?}", r.violations);
    }

    #[test]
    fn batch_size_64_accepted() {
        let c = ControllerConfig {
            sched_batch_size: 64,
            ..Default::default()
        };
        assert!(check(&c).is_ok());
    }

    #[test]
    fn zero_associativity_rejected() {
        let c = ControllerConfig {
            cache_associativity: 0,
            ..Default::default()
        };
        assert!(check(&c).violates("cache_associativity"));
    }

    #[test]
    fn non_power_of_two_batch_rejected() {
        let c = ControllerConfig {
            sched_batch_size: 48,
            ..Default::default()
        };
        let r = check(&c);
        assert!(r.violates("sched_batch_size"));
        assert!(r.violations[0].message.contains("power of two"));
    }

    #[test]
    fn override_skips_ranges_only() {
        let mut c = ControllerConfig {
            sched_batch_size: 512,
            allow_out_of_range: true,
            ..Default::default()
        };
        assert!(check(&c).is_ok());
        c.sched_batch_size = 500;
        assert!(check(&c).violates("sched_batch_size"));
    }

    #[test]
    fn ctrl_overhead_capped() {
        let c = ControllerConfig {
            ctrl_overhead: 11,
            ..Default::default()
        };
        assert!(check(&c).violates("ctrl_overhead"));
    }

    #[test]
    fn needs_an_engine() {
        let c = ControllerConfig {
            enable_cacheline: false,
            enable_dma: false,
            ..Default::default()
        };
        assert!(!check(&c).is_ok());
    }

    #[test]
    fn timing_checks() {
        let t = DramTimingConfig {
            num_banks: 12,
            ..Default::default()
        };
        assert!(validate(&ControllerConfig::default(), &t).violates("num_banks"));
        let mut t = DramTimingConfig::default();
        t.address_map.row_bits = 20;
        assert!(validate(&ControllerConfig::default(), &t).violates("address_map"));
        let t = DramTimingConfig {
            t_rp: 0,
            ..Default::default()
        };
        assert!(validate(&ControllerConfig::default(), &t).violates("t_rp"));
    }

    #[test]
    fn empty_document_gives_defaults() {
        let (c, t) = load_config("").unwrap();
        assert_eq!(c, ControllerConfig::default());
        assert_eq!(t, DramTimingConfig::default());
    }

    #[test]
    fn batch_size_key() {
        let (c, _) = load_config("# tuned\nsched.batch_size = 32\n").unwrap();
        assert_eq!(c.sched_batch_size, 32);
    }

    #[test]
    fn odd_line_width_rejected_on_load() {
        match load_config("cache.line_width = 123") {
            Err(ConfigError::Invalid(v)) => assert!(v.iter().any(|x| x.field == "cache_line_width")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match load_config("\n\nsched.batch_size 32") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match load_config("sched.batch_size = x") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match load_config("cache.colour = 3") {
            Err(ConfigError::UnknownKey { line, key }) => {
                assert_eq!((line, key.as_str()), (1, "cache.colour"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clock_periods_in_ns() {
        let (_, t) = load_config("dram.t_mem = 0.625\ndram.t_fpga = 2.5").unwrap();
        assert_eq!((t.t_mem_ps, t.t_fpga_ps), (625, 2500));
        assert_eq!(get_key(&ControllerConfig::default(), &t, "dram.t_fpga").unwrap(), "2.5");
    }

    #[test]
    fn every_key_renders() {
        let (c, t) = (ControllerConfig::default(), DramTimingConfig::default());
        for k in KEYS {
            assert!(get_key(&c, &t, k).is_some(), "{k}");
        }
    }
}
