use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use memctl::baseline::run_baseline;
use memctl::checker::consistency_order;
use memctl::config::{load_config, render};
use memctl::events::EventLog;
use memctl::report::{sweep_csv, sweep_json, sweep_text, to_csv};
use memctl::sweep::{parse_spec, sweep, SweepError};
use memctl::workloads::{
    gen_cnn, gen_gcn, gen_random, gen_sequential, read_trace, write_trace, CnnParams, GcnParams,
    RandomParams, Trace,
};
use memctl::{AccessClass, ControllerConfig, DramTimingConfig, SimError, SimOptions, SimReport};

#[derive(Parser)]
#[command(name = "memctl", version, about = "Trace-driven FPGA memory controller simulator")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Workload {
    Random,
    Sequential,
    Gcn,
    Cnn,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration document; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Action {
    /// Simulate a trace through the controller.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
        /// Also run the baseline and report the improvement.
        #[arg(long)]
        baseline: bool,
        /// Write the event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Simulate a trace through the direct-to-DRAM baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run a trace once per value of a config key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
        /// KEY=V1,V2,...
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        baseline: bool,
    },
    /// Generate a synthetic trace.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        workload: Workload,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Request count (random) or total bytes (sequential).
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        /// Address space for random traces.
        #[arg(long, default_value_t = 1 << 20)]
        space: u64,
        /// Bulk instead of cacheline requests (random, sequential).
        #[arg(long)]
        bulk: bool,
        /// Request size in bytes (random, sequential).
        #[arg(long, default_value_t = 64)]
        size: u64,
        #[arg(long, default_value_t = 0.0)]
        write_fraction: f64,
        /// GCN edge count.
        #[arg(long)]
        edges: Option<u64>,
    },
    /// Print the default configuration document.
    DumpDefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an event log against the consistency rules.
    Check {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

struct Fail {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Fail {
    Fail {
        code,
        message: message.to_string(),
    }
}

fn sim_fail(e: SimError) -> Fail {
    let code = match e {
        SimError::Config(_) => 1,
        SimError::Trace(_) | SimError::Unordered(_) => 2,
        SimError::Invariant(_) => 3,
    };
    fail(code, e)
}

fn configs(path: Option<&Path>) -> Result<(ControllerConfig, DramTimingConfig), Fail> {
    match path {
        None => Ok(Default::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| fail(1, format!("{}: {e}", p.display())))?;
            load_config(&text).map_err(|e| fail(1, format!("{}: {e}", p.display())))
        }
    }
}

fn trace(path: &Path) -> Result<Trace, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
    read_trace(&text).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text).map_err(|e| fail(1, format!("{}: {e}", p.display()))),
    }
}

fn render_report(r: &SimReport, f: Format) -> String {
    match f {
        Format::Text => r.to_text(),
        Format::Csv => to_csv(std::slice::from_ref(r)),
        Format::Json => r.to_json() + "\n",
    }
}

fn execute(action: Action) -> Result<(), Fail> {
    match action {
        Action::Run {
            common,
            trace: tp,
            baseline,
            log,
        } => {
            let (c, t) = configs(common.config.as_deref())?;
            let tr = trace(&tp)?;
            let opts = SimOptions {
                track_data: false,
                event_log: log.is_some(),
            };
            let out = memctl::simulate(&c, &t, tr.requests.iter().cloned(), opts).map_err(sim_fail)?;
            let mut report = out.report;
            if baseline {
                let b = run_baseline(&c, &t, tr.requests).map_err(sim_fail)?;
                report = report.with_baseline(b.total_cycles);
            }
            if let (Some(p), Some(l)) = (log, out.log) {
                emit(Some(&p), &l.render())?;
            }
            emit(common.out.as_deref(), &render_report(&report, common.format))
        }
        Action::Baseline { common, trace: tp } => {
            let (c, t) = configs(common.config.as_deref())?;
            let tr = trace(&tp)?;
            let r = run_baseline(&c, &t, tr.requests).map_err(sim_fail)?;
            emit(common.out.as_deref(), &render_report(&r, common.format))
        }
        Action::Sweep {
            common,
            trace: tp,
            sweep: spec,
            baseline,
        } => {
            let (c, t) = configs(common.config.as_deref())?;
            let Some((key, values)) = parse_spec(&spec) else {
                return Err(fail(1, format!("--sweep expects KEY=V1,V2,..., got `{spec}`")));
            };
            let tr = trace(&tp)?;
            let rows = sweep(&c, &t, &tr.requests, &key, &values, baseline).map_err(|e| match e {
                SweepError::Run { source, .. } => sim_fail(source),
                other => fail(1, other),
            })?;
            let text = match common.format {
                Format::Text => sweep_text(&key, &rows),
                Format::Csv => sweep_csv(&key, &rows),
                Format::Json => sweep_json(&key, &rows) + "\n",
            };
            emit(common.out.as_deref(), &text)
        }
        Action::Gen {
            config,
            out,
            workload,
            seed,
            count,
            space,
            bulk,
            size,
            write_fraction,
            edges,
        } => {
            let (c, _) = configs(config.as_deref())?;
            let class = if bulk {
                AccessClass::Bulk
            } else {
                AccessClass::Cacheline
            };
            if count == 0 || size == 0 {
                return Err(fail(1, "--count and --size must be non-zero"));
            }
            let tr = match workload {
                Workload::Random => {
                    if space < size {
                        return Err(fail(1, "--space must hold at least one request"));
                    }
                    let p = RandomParams {
                        count: count as usize,
                        address_space: space,
                        size,
                        class,
                        write_fraction,
                        ..RandomParams::cacheline(1, space)
                    };
                    gen_random(&p, &c, seed)
                }
                Workload::Sequential => gen_sequential(count, size, class, 0, &c, seed),
                Workload::Gcn => {
                    let mut p = GcnParams::default();
                    if let Some(e) = edges {
                        p.num_edges = e;
                    }
                    p.validate().map_err(|e| fail(1, e))?;
                    gen_gcn(&p, &c, seed)
                }
                Workload::Cnn => {
                    let p = CnnParams::default();
                    p.validate().map_err(|e| fail(1, e))?;
                    gen_cnn(&p, &c, seed)
                }
            };
            emit(out.as_deref(), &write_trace(&tr))
        }
        Action::DumpDefaultConfig { out } => emit(
            out.as_deref(),
            &render(&ControllerConfig::default(), &DramTimingConfig::default()),
        ),
        Action::Check { log, config } => {
            let (c, _) = configs(config.as_deref())?;
            let text = std::fs::read_to_string(&log).map_err(|e| fail(2, format!("{}: {e}", log.display())))?;
            let parsed = EventLog::parse(&text).map_err(|e| fail(2, format!("{}: {e}", log.display())))?;
            match consistency_order(&parsed, u64::from(c.mem_if_data_width)) {
                Ok(()) => {
                    println!("ok: {} events, no violations", parsed.events.len());
                    Ok(())
                }
                Err(v) => {
                    for x in &v {
                        println!("{x}");
                    }
                    Err(fail(3, format!("{} consistency violations", v.len())))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.action) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("memctl: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
