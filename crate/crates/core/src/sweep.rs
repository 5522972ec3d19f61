//! Parameter sweeps: one independent run per value, in parallel.

use rayon::prelude::*;
use thiserror::Error;

use crate::baseline::run_baseline;
use crate::config::{set_key, validate, ControllerConfig, DramTimingConfig, SetKeyError, Violation};
use crate::controller::{simulate, SimError, SimOptions};
use crate::report::SimReport;
use crate::request::MemRequest;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("{key}={value}: {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("{key}={value}: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        key: String,
        value: String,
        violations: Vec<Violation>,
    },
    #[error("{key}={value}: {source}")]
    Run {
        key: String,
        value: String,
        source: SimError,
    },
}

/// Parses `KEY=V1,V2,...`.
pub fn parse_spec(spec: &str) -> Option<(String, Vec<String>)> {
    let (k, vs) = spec.split_once('=')?;
    let values: Vec<String> = vs
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect();
    (!k.trim().is_empty() && !values.is_empty()).then(|| (k.trim().to_string(), values))
}

/// Runs the trace once per value of `key`. Every configuration is built and
/// validated before any run starts. Rows come back in `values` order; with
/// `baseline` set each report also carries the baseline time for its config.
pub fn sweep(
    cfg: &ControllerConfig,
    timing: &DramTimingConfig,
    trace: &[MemRequest],
    key: &str,
    values: &[String],
    baseline: bool,
) -> Result<Vec<(String, SimReport)>, SweepError> {
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let (mut c, mut t) = (cfg.clone(), timing.clone());
        match set_key(&mut c, &mut t, key, v) {
            Ok(()) => {}
            Err(SetKeyError::Unknown) => return Err(SweepError::UnknownKey(key.to_string())),
            Err(SetKeyError::BadValue(message)) => {
                return Err(SweepError::BadValue {
                    key: key.to_string(),
                    value: v.clone(),
                    message,
                })
            }
        }
        let check = validate(&c, &t);
        if !check.is_ok() {
            return Err(SweepError::Invalid {
                key: key.to_string(),
                value: v.clone(),
                violations: check.violations,
            });
        }
        points.push((v.clone(), c, t));
    }
    points
        .into_par_iter()
        .map(|(v, c, t)| {
            let wrap = |source| SweepError::Run {
                key: key.to_string(),
                value: v.clone(),
                source,
            };
            let out = simulate(&c, &t, trace.iter().cloned(), SimOptions::default()).map_err(wrap)?;
            let mut report = out.report;
            if baseline {
                let b = run_baseline(&c, &t, trace.iter().cloned()).map_err(wrap)?;
                report = report.with_baseline(b.total_cycles);
            }
            Ok((v, report))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert_eq!(
            parse_spec("sched.batch_size=4, 8,16"),
            Some(("sched.batch_size".into(), vec!["4".into(), "8".into(), "16".into()]))
        );
        assert_eq!(parse_spec("sched.batch_size="), None);
        assert_eq!(parse_spec("novalue"), None);
    }

    #[test]
    fn single_value_matches_run() {
        let cfg = ControllerConfig::default();
        let t = DramTimingConfig::default();
        let trace: Vec<_> = (0..50u64)
            .map(|i| MemRequest::cache_read(0, i * 4096, 64).at(i, i))
            .collect();
        let rows = sweep(&cfg, &t, &trace, "sched.timeout", &["40".into()], false).unwrap();
        let direct = simulate(&cfg, &t, trace, SimOptions::default()).unwrap();
        assert_eq!(rows[0].1, direct.report);
    }

    #[test]
    fn rejects_bad_keys_and_values() {
        let cfg = ControllerConfig::default();
        let t = DramTimingConfig::default();
        let e = sweep(&cfg, &t, &[], "sched.nope", &["1".into()], false).unwrap_err();
        assert!(matches!(e, SweepError::UnknownKey(_)));
        let e = sweep(&cfg, &t, &[], "sched.batch_size", &["x".into()], false).unwrap_err();
        assert!(matches!(e, SweepError::BadValue { .. }));
        let e = sweep(&cfg, &t, &[], "sched.batch_size", &["12".into()], false).unwrap_err();
        assert!(matches!(e, SweepError::Invalid { .. }));
    }
}
