//! Run reports and their text, CSV and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cache::CacheStats;
use crate::dma::DmaStats;
use crate::dram::RowStats;
use crate::scheduler::SchedStats;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub format_version: u32,
    /// `controller` or `baseline`.
    pub model: String,
    pub total_cycles: u64,
    pub cache_busy_cycles: u64,
    pub dma_busy_cycles: u64,
    pub cache_share: f64,
    pub dma_share: f64,
    pub cache_requests: u64,
    pub bulk_requests: u64,
    pub reads: u64,
    pub writes: u64,
    pub bytes: u64,
    pub row: RowStats,
    pub sched: SchedStats,
    pub mean_batch_fill: f64,
    pub mean_formation_cycles: f64,
    /// Batch formation plus sort time for the configured batch size.
    pub schedule_cycles: u64,
    pub cache: CacheStats,
    pub dma: DmaStats,
    /// Cacheline and bulk requests that overlapped in address while both
    /// were in flight.
    pub overlap_warnings: u64,
    pub baseline_cycles: Option<u64>,
    /// `1 - total / baseline`.
    pub improvement: Option<f64>,
}

impl SimReport {
    pub fn new(model: &str) -> Self {
        Self {
            format_version: REPORT_VERSION,
            model: model.to_string(),
            ..Default::default()
        }
    }

    /// Derives shares and means from the raw counters.
    pub fn finalize(&mut self) {
        let share = |x: u64| {
            if self.total_cycles == 0 {
                0.0
            } else {
                (x as f64 / self.total_cycles as f64).min(1.0)
            }
        };
        self.cache_share = share(self.cache_busy_cycles);
        self.dma_share = share(self.dma_busy_cycles);
        self.mean_batch_fill = self.sched.mean_fill();
        self.mean_formation_cycles = if self.sched.batches == 0 {
            0.0
        } else {
            self.sched.formation_cycles as f64 / self.sched.batches as f64
        };
    }

    pub fn with_baseline(mut self, baseline_cycles: u64) -> Self {
        self.baseline_cycles = Some(baseline_cycles);
        self.improvement = (baseline_cycles > 0)
            .then(|| 1.0 - self.total_cycles as f64 / baseline_cycles as f64);
        self
    }

    /// Baseline time as a multiple of this run's time.
    pub fn normalized_baseline(&self) -> Option<f64> {
        let b = self.baseline_cycles?;
        (self.total_cycles > 0).then(|| b as f64 / self.total_cycles as f64)
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            ("model", self.model.clone()),
            ("total_cycles", self.total_cycles.to_string()),
            ("cache_busy_cycles", self.cache_busy_cycles.to_string()),
            ("dma_busy_cycles", self.dma_busy_cycles.to_string()),
            ("cache_share", format!("{:.4}", self.cache_share)),
            ("dma_share", format!("{:.4}", self.dma_share)),
            ("cache_requests", self.cache_requests.to_string()),
            ("bulk_requests", self.bulk_requests.to_string()),
            ("reads", self.reads.to_string()),
            ("writes", self.writes.to_string()),
            ("bytes", self.bytes.to_string()),
            ("row_first_hits", self.row.first_hits.to_string()),
            ("row_hits", self.row.hits.to_string()),
            ("row_conflicts", self.row.conflicts.to_string()),
            ("batches", self.sched.batches.to_string()),
            ("mean_batch_fill", format!("{:.2}", self.mean_batch_fill)),
            ("mean_formation_cycles", format!("{:.2}", self.mean_formation_cycles)),
            ("schedule_cycles", self.schedule_cycles.to_string()),
            ("bypassed", self.sched.bypassed.to_string()),
            ("cache_hits", self.cache.hits.to_string()),
            ("cache_misses", self.cache.misses.to_string()),
            ("cache_writebacks", self.cache.writebacks.to_string()),
            ("dma_transfers", self.dma.transfers.to_string()),
            ("dma_elements", self.dma.elements.to_string()),
            ("overlap_warnings", self.overlap_warnings.to_string()),
            ("baseline_cycles", opt(self.baseline_cycles.map(|b| b.to_string()))),
            ("baseline_normalized", opt(self.normalized_baseline().map(|x| format!("{x:.4}")))),
            ("improvement", opt(self.improvement.map(|x| format!("{x:.4}")))),
        ]
    }

    pub fn to_text(&self) -> String {
        let fields = self.fields();
        let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = format!("# format_version={}\n", self.format_version);
        for (k, v) in fields {
            if !v.is_empty() {
                let _ = writeln!(s, "{k:<width$}  {v}");
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn csv_header(extra: Option<&str>) -> String {
    let mut cols: Vec<&str> = Vec::new();
    if let Some(e) = extra {
        cols.push(e);
    }
    cols.extend(SimReport::default().fields().iter().map(|(k, _)| *k));
    format!("# format_version={REPORT_VERSION}\n{}\n", cols.join(","))
}

/// One header row and one row per report.
pub fn to_csv(reports: &[SimReport]) -> String {
    let mut s = csv_header(None);
    for r in reports {
        let row: Vec<String> = r.fields().into_iter().map(|(_, v)| v).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Sweep table: the swept key's value leads each row.
pub fn sweep_csv(key: &str, rows: &[(String, SimReport)]) -> String {
    let mut s = csv_header(Some(key));
    for (v, r) in rows {
        let row: Vec<String> = r.fields().into_iter().map(|(_, v)| v).collect();
        let _ = writeln!(s, "{v},{}", row.join(","));
    }
    s
}

pub fn sweep_text(key: &str, rows: &[(String, SimReport)]) -> String {
    let mut s = format!("# format_version={REPORT_VERSION}\n");
    let _ = writeln!(
        s,
        "{key:>16} {:>14} {:>14} {:>9} {:>9} {:>10}",
        "total_cycles", "baseline", "dma_share", "fill", "conflicts"
    );
    for (v, r) in rows {
        let _ = writeln!(
            s,
            "{v:>16} {:>14} {:>14} {:>9.4} {:>9.2} {:>10}",
            r.total_cycles,
            r.baseline_cycles.map_or("-".to_string(), |b| b.to_string()),
            r.dma_share,
            r.mean_batch_fill,
            r.row.conflicts
        );
    }
    s
}

pub fn sweep_json(key: &str, rows: &[(String, SimReport)]) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        value: &'a str,
        report: &'a SimReport,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        format_version: u32,
        key: &'a str,
        rows: Vec<Row<'a>>,
    }
    let doc = Doc {
        format_version: REPORT_VERSION,
        key,
        rows: rows
            .iter()
            .map(|(v, r)| Row { value: v, report: r })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("sweep serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimReport {
        let mut r = SimReport::new("controller");
        r.total_cycles = 1000;
        r.dma_busy_cycles = 900;
        r.cache_busy_cycles = 50;
        r.sched.batches = 3;
        r.sched.batched_requests = 100;
        r.finalize();
        r.with_baseline(1300)
    }

    #[test]
    fn shares_and_improvement() {
        let r = sample();
        assert_eq!(r.dma_share, 0.9);
        assert!((r.improvement.unwrap() - (1.0 - 1000.0 / 1300.0)).abs() < 1e-12);
        assert!(r.cache_share + r.dma_share <= 1.0);
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(SimReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn text_is_aligned() {
        let t = sample().to_text();
        let cols: Vec<usize> = t
            .lines()
            .skip(1)
            .map(|l| l.find("  ").unwrap() + l[l.find("  ").unwrap()..].find(|c: char| c != ' ').unwrap())
            .collect();
        assert!(cols.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn csv_has_one_row_per_report() {
        let c = to_csv(&[sample(), sample()]);
        assert_eq!(c.lines().count(), 4);
        let header = c.lines().nth(1).unwrap();
        assert_eq!(header.split(',').count(), c.lines().nth(2).unwrap().split(',').count());
    }
}
