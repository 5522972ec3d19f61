mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memctl::baseline::run_baseline;
use memctl::checker::consistency_order;
use memctl::config::validate;
use memctl::dram::{encode_address, t_mem_rand, to_controller_cycles, DecodedAddress};
use memctl::scheduler::schedule_cycles;
use memctl::workloads::{gen_random, gen_sequential, payload_bytes, RandomParams};
use memctl::{AccessClass, ControllerConfig, DramTimingConfig, MemRequest, Op, SimError, SimOptions};

use common::{is_cache, mixed_trace};

fn full() -> SimOptions {
    SimOptions {
        track_data: true,
        event_log: true,
    }
}

/// Cache and DMA traffic on disjoint regions, so every read has one
/// well-defined expected value.
fn disjoint_trace(seed: u64, n: usize) -> Vec<MemRequest> {
    let cfg = ControllerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reqs = mixed_trace(&mut rng, n, 1 << 13, &cfg);
    for r in &mut reqs {
        if !is_cache(r) {
            r.address += 1 << 20;
            if r.op == Op::Write {
                r.payload = payload_bytes(r.address, r.total_size as usize, r.seq_no);
            }
        }
    }
    reqs
}

fn expected_reads(trace: &[MemRequest]) -> HashMap<u64, Vec<u8>> {
    let mut mem: HashMap<u64, u8> = HashMap::new();
    let mut out = HashMap::new();
    for r in trace {
        let range = r.address..r.address + r.total_size;
        match r.op {
            Op::Write => {
                for (a, b) in range.zip(&r.payload) {
                    mem.insert(a, *b);
                }
            }
            Op::Read => {
                out.insert(r.seq_no, range.map(|a| *mem.get(&a).unwrap_or(&0)).collect());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reads_return_latest_prior_write(seed in 0u64..100_000, n in 1usize..150) {
        let cfg = ControllerConfig::default();
        let trace = disjoint_trace(seed, n);
        let want = expected_reads(&trace);
        let out = memctl::simulate(&cfg, &DramTimingConfig::default(), trace, full()).unwrap();
        prop_assert_eq!(out.report.overlap_warnings, 0);
        for c in &out.completions {
            if let Some(w) = want.get(&c.seq_no) {
                prop_assert_eq!(&c.data, w, "request {}", c.seq_no);
            }
        }
    }

    #[test]
    fn every_request_completes_once_in_a_legal_order(seed in 0u64..100_000, n in 1usize..200) {
        let cfg = ControllerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = mixed_trace(&mut rng, n, 1 << 12, &cfg);
        let out = memctl::simulate(&cfg, &DramTimingConfig::default(), trace, full()).unwrap();
        let mut seqs: Vec<u64> = out.completions.iter().map(|c| c.seq_no).collect();
        seqs.sort_unstable();
        prop_assert_eq!(seqs, (0..n as u64).collect::<Vec<_>>());
        prop_assert!(consistency_order(out.log.as_ref().unwrap(), 64).is_ok());
    }

    #[test]
    fn consistency_holds_with_scheduler_variants(
        seed in 0u64..100_000,
        batch in prop::sample::select(vec![4usize, 16, 128]),
        timeout in 4u64..=40,
        sched in prop::bool::ANY,
    ) {
        let cfg = ControllerConfig {
            sched_batch_size: batch,
            sched_timeout: timeout,
            enable_scheduler: sched,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = mixed_trace(&mut rng, 120, 1 << 13, &cfg);
        let out = memctl::simulate(&cfg, &DramTimingConfig::default(), trace, full()).unwrap();
        prop_assert!(consistency_order(out.log.as_ref().unwrap(), 64).is_ok());
    }

    #[test]
    fn busy_shares_stay_in_range(seed in 0u64..100_000) {
        let cfg = ControllerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = mixed_trace(&mut rng, 100, 1 << 16, &cfg);
        let r = memctl::simulate(&cfg, &DramTimingConfig::default(), trace, SimOptions::default())
            .unwrap()
            .report;
        prop_assert!(r.cache_share >= 0.0 && r.dma_share >= 0.0);
        prop_assert!(r.cache_share + r.dma_share <= 1.0 + 1e-9);
    }
}

#[test]
fn saturated_batches_overlap_with_dram() {
    let t = DramTimingConfig::default();
    let cfg = ControllerConfig::default();
    let k = 3u64;
    let n = cfg.sched_batch_size as u64;
    // Distinct rows in one bank, spread over cache sets: every access misses
    // and is a row conflict.
    let trace: Vec<MemRequest> = (0..k * n)
        .map(|i| {
            let a = encode_address(
                DecodedAddress {
                    row: i + 1,
                    bank: 5,
                    column: (i % 128) * 64,
                },
                &t,
            );
            MemRequest::cache_read(0, a, 64).at(0, i)
        })
        .collect();
    let r = memctl::simulate(&cfg, &t, trace, SimOptions::default())
        .unwrap()
        .report;
    assert!(r.sched.batches >= 2);
    let serial = k * (schedule_cycles(n as usize, &cfg) + n * t_mem_rand(&t));
    assert!(r.total_cycles < serial, "{} >= {serial}", r.total_cycles);
}

#[test]
fn single_request_baseline_is_controller_minus_overheads() {
    let t = DramTimingConfig::default();
    let cfg = ControllerConfig::default();
    let trace = vec![MemRequest::cache_read(0, 0x1000, 64)];
    let c = memctl::simulate(&cfg, &t, trace.clone(), SimOptions::default())
        .unwrap()
        .report;
    let b = run_baseline(&cfg, &t, trace).unwrap();
    let dram = to_controller_cycles(t.t_cl + t.t_rcd, &t);
    assert_eq!(b.total_cycles, dram);
    assert!(c.total_cycles > b.total_cycles);
    assert!(c.total_cycles - b.total_cycles >= cfg.ctrl_overhead);
}

#[test]
fn random_cacheline_baseline_is_conflict_bound() {
    let t = DramTimingConfig::default();
    let cfg = ControllerConfig::default();
    let trace = gen_random(&RandomParams::cacheline(2000, 1 << 28), &cfg, 4);
    let b = run_baseline(&cfg, &t, trace.requests).unwrap();
    assert!(b.row.conflicts as f64 > 0.9 * b.row.total() as f64);
    assert!(b.total_cycles >= b.row.conflicts * t_mem_rand(&t));
}

#[test]
fn sequential_baseline_hits_rows() {
    let t = DramTimingConfig::default();
    let cfg = ControllerConfig::default();
    let trace = gen_sequential(1 << 16, 64, AccessClass::Cacheline, 0, &cfg, 1);
    let b = run_baseline(&cfg, &t, trace.requests).unwrap();
    assert!(b.row.hits > 10 * b.row.conflicts);
}

#[test]
fn pure_cache_trace_without_dma_has_zero_dma_share() {
    let cfg = ControllerConfig {
        enable_dma: false,
        ..Default::default()
    };
    let trace = gen_random(&RandomParams::cacheline(500, 1 << 20), &cfg, 2);
    let r = memctl::simulate(&cfg, &DramTimingConfig::default(), trace.requests, SimOptions::default())
        .unwrap()
        .report;
    assert_eq!(r.dma_share, 0.0);
    assert!(r.cache_share > 0.5);
}

#[test]
fn runs_are_deterministic() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    let trace = disjoint_trace(99, 500);
    let a = memctl::simulate(&cfg, &t, trace.clone(), full()).unwrap();
    let b = memctl::simulate(&cfg, &t, trace, full()).unwrap();
    assert_eq!(a.log.unwrap().render(), b.log.unwrap().render());
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.completions, b.completions);
}

#[test]
fn bad_traces_are_rejected() {
    let cfg = ControllerConfig::default();
    let t = DramTimingConfig::default();
    let backwards = vec![
        MemRequest::cache_read(0, 0, 8).at(10, 0),
        MemRequest::cache_read(0, 64, 8).at(5, 1),
    ];
    assert!(matches!(
        memctl::simulate(&cfg, &t, backwards, SimOptions::default()),
        Err(SimError::Unordered(1))
    ));
    let bad_pe = vec![MemRequest::cache_read(99, 0, 8)];
    assert!(matches!(
        memctl::simulate(&cfg, &t, bad_pe, SimOptions::default()),
        Err(SimError::Trace(_))
    ));
    let mut bad = cfg.clone();
    bad.cache_associativity = 3;
    assert!(!validate(&bad, &t).is_ok());
    assert!(matches!(
        memctl::simulate(&bad, &t, Vec::new(), SimOptions::default()),
        Err(SimError::Config(_))
    ));
}

#[test]
fn larger_batches_find_more_row_hits() {
    let t = DramTimingConfig::default();
    let run = |n: usize| {
        let cfg = ControllerConfig {
            sched_batch_size: n,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // Reads spread over four rows per bank, far beyond the cache.
        let trace: Vec<MemRequest> = (0..3000u64)
            .map(|i| {
                let a = encode_address(
                    DecodedAddress {
                        row: rng.gen_range(0..4) * 64 + i % 7,
                        bank: rng.gen_range(0..16),
                        column: rng.gen_range(0..128) * 64,
                    },
                    &t,
                );
                MemRequest::cache_read(0, a, 64).at(i, i)
            })
            .collect();
        memctl::simulate(&cfg, &t, trace, SimOptions::default())
            .unwrap()
            .report
    };
    let (small, large) = (run(4), run(64));
    assert!(large.row.hits > small.row.hits);
}
