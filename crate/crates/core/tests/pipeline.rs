use std::sync::Arc;
use std::thread;
use std::time::Duration;

use cipherpipe::cipher::Direction;
use cipherpipe::pipeline::{
    measure_throughput, Pipeline, PipelineConfig, PipelineError, PipelineOptions, StageFn, StageState,
};
use cipherpipe::{Block64, MasterKey128, ProductCipherSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn key() -> MasterKey128 {
    "0123456789abcdeffedcba9876543210".parse().unwrap()
}

fn stream(len: usize, seed: u64) -> Vec<Block64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| Block64::new(r.gen())).collect()
}

fn oracle(spec: &ProductCipherSpec, input: &[Block64]) -> Vec<Block64> {
    input.iter().map(|&b| spec.encrypt_block(b)).collect()
}

#[test]
fn canonical_five_stage_topology() {
    let spec = ProductCipherSpec::canonical(key());
    let p = Pipeline::build(&PipelineConfig::for_spec(&spec, 5).unwrap()).unwrap();
    assert_eq!(p.stage_count(), 5);
    assert_eq!(p.buffer_count(), 4);
    let p1 = Pipeline::build(&PipelineConfig::for_spec(&spec, 1).unwrap()).unwrap();
    assert_eq!(p1.buffer_count(), 0);
}

#[test]
fn empty_partition_list_is_a_config_error() {
    let cfg = PipelineConfig::new(vec![], key());
    assert_eq!(Pipeline::build(&cfg).unwrap_err(), PipelineError::Empty);
}

#[test]
fn twenty_two_block_sample_matches_monolithic() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(22, 1);
    let p = Pipeline::build(&PipelineConfig::for_spec(&spec, 5).unwrap()).unwrap();
    let (out, stats) = p.run(input.clone()).unwrap();
    assert_eq!(out, oracle(&spec, &input));
    assert_eq!(stats.blocks_processed(), Some(22));
}

#[test]
fn empty_stream() {
    let spec = ProductCipherSpec::canonical(key());
    let p = Pipeline::build(&PipelineConfig::for_spec(&spec, 5).unwrap()).unwrap();
    let (out, stats) = p.run(Vec::new()).unwrap();
    assert!(out.is_empty());
    assert_eq!(stats.stages.len(), 5);
    assert!(stats.stages.iter().all(|s| s.blocks_in == 0 && s.blocks_out == 0));
}

#[test]
fn every_stage_count_matches_oracle_on_long_stream() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(10_000, 2);
    let expect = oracle(&spec, &input);
    for n in 1..=8 {
        let p = Pipeline::build(&PipelineConfig::for_spec(&spec, n).unwrap()).unwrap();
        let (out, stats) = p.run(input.clone()).unwrap();
        assert_eq!(out, expect, "n = {n}");
        assert_eq!(stats.blocks_processed(), Some(10_000));
        assert!(stats.peak_buffered() <= (n - 1) * 64);
    }
}

#[test]
fn capacity_one_over_ten_thousand_blocks() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(10_000, 3);
    let cfg = PipelineConfig::for_spec(&spec, 5).unwrap().with_capacity(1);
    let (out, stats) = Pipeline::build(&cfg).unwrap().run(input.clone()).unwrap();
    assert_eq!(out, oracle(&spec, &input));
    for s in &stats.stages[1..] {
        assert!(s.peak_input_occupancy() <= 1);
        assert_eq!(s.input_occupancy.len(), 2);
    }
}

#[test]
fn deadlock_free_across_capacities_and_lengths() {
    let spec = ProductCipherSpec::new(
        cipherpipe::product::parse_stages("cipher=idea iterations=2\ncipher=skipjack iterations=2\ncipher=raiden iterations=3")
            .unwrap(),
        key(),
    );
    for cap in [1usize, 2, 3, 64] {
        for len in [0, 1, cap, 10 * cap, 10_000] {
            let input = stream(len, len as u64);
            let options = PipelineOptions {
                buffer_capacity: cap,
                run_timeout: Some(Duration::from_secs(30)),
                ..Default::default()
            };
            let cfg = PipelineConfig::for_spec(&spec, 7).unwrap().with_options(options);
            let (out, stats) = Pipeline::build(&cfg).unwrap().run(input.clone()).unwrap();
            assert_eq!(out, oracle(&spec, &input), "cap {cap} len {len}");
            assert!(stats.peak_buffered() <= 6 * cap);
            for s in &stats.stages {
                assert_eq!((s.blocks_in, s.blocks_out), (len as u64, len as u64));
            }
        }
    }
}

#[test]
fn order_preserved_under_jitter() {
    // counter-tagged blocks through stages that stall at random
    let jitter = |salt: u64| -> StageFn {
        Arc::new(move |b: Block64| {
            if (b.value() ^ salt) % 7 == 0 {
                thread::sleep(Duration::from_micros(200));
            }
            Block64::new(b.value().rotate_left(8) ^ salt)
        })
    };
    let stages = vec![jitter(1), jitter(2), jitter(3), jitter(4)];
    let opts = PipelineOptions {
        buffer_capacity: 2,
        ..Default::default()
    };
    let p = Pipeline::from_stages(stages, opts).unwrap();
    let (out, _) = p.run((0..2000u64).map(Block64::new)).unwrap();
    for (i, b) in out.iter().enumerate() {
        let mut v = i as u64;
        for salt in 1..=4 {
            v = v.rotate_left(8) ^ salt;
        }
        assert_eq!(b.value(), v, "index {i}");
    }
}

#[test]
fn decrypt_pipeline_inverts() {
    let spec = ProductCipherSpec::canonical(key());
    let plain = stream(500, 4);
    let cipher = oracle(&spec, &plain);
    for n in [1, 3, 5] {
        let cfg = PipelineConfig::for_spec(&spec, n)
            .unwrap()
            .with_direction(Direction::Decrypt);
        let (out, _) = Pipeline::build(&cfg).unwrap().run(cipher.clone()).unwrap();
        assert_eq!(out, plain, "n = {n}");
    }
}

#[test]
fn fused_workers_and_batches_agree() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(1000, 5);
    let expect = oracle(&spec, &input);
    let fused = PipelineConfig::for_spec(&spec, 8).unwrap().with_options(PipelineOptions {
        max_workers: Some(3),
        ..Default::default()
    });
    let p = Pipeline::build(&fused).unwrap();
    assert_eq!(p.stage_count(), 3);
    assert_eq!(p.run(input.clone()).unwrap().0, expect);

    let batched = PipelineConfig::for_spec(&spec, 5).unwrap().with_options(PipelineOptions {
        batch_size: 7,
        buffer_capacity: 2,
        ..Default::default()
    });
    let (out, stats) = Pipeline::build(&batched).unwrap().run(input.clone()).unwrap();
    assert_eq!(out, expect);
    assert_eq!(stats.blocks_processed(), Some(1000));
}

#[test]
fn panicking_stage_surfaces_its_index() {
    let ok: StageFn = Arc::new(|b| b);
    let bad: StageFn = Arc::new(|b: Block64| {
        if b.value() == 500 {
            panic!("boom at 500");
        }
        b
    });
    let opts = PipelineOptions {
        buffer_capacity: 1,
        ..Default::default()
    };
    let p = Pipeline::from_stages(vec![ok.clone(), ok.clone(), bad, ok], opts).unwrap();
    let err = p.run((0..10_000u64).map(Block64::new)).unwrap_err();
    match err {
        PipelineError::StageFailed { stage, message } => {
            assert_eq!(stage, 2);
            assert!(message.contains("boom"));
        }
        other => panic!("unexpected {other:?}"),
    }
    // the pipeline is reusable afterwards
    assert!(!p.is_running());
}

#[test]
fn concurrent_runs_rejected() {
    let slow: StageFn = Arc::new(|b| {
        thread::sleep(Duration::from_millis(1));
        b
    });
    let p = Pipeline::from_stages(vec![slow.clone(), slow], PipelineOptions::default()).unwrap();
    let h = p.start((0..50u64).map(Block64::new)).unwrap();
    assert_eq!(p.start(Vec::new()).err(), Some(PipelineError::AlreadyRunning));
    assert_eq!(h.finish().unwrap().0.len(), 50);
    assert_eq!(p.run(vec![Block64::ZERO]).unwrap().0.len(), 1);
}

#[test]
fn shutdown_after_completion_and_twice() {
    let spec = ProductCipherSpec::canonical(key());
    let p = Pipeline::build(&PipelineConfig::for_spec(&spec, 5).unwrap()).unwrap();
    let input = stream(50, 6);
    let mut h = p.start(input.clone()).unwrap();
    // let it run to completion first
    while !h.states().iter().all(|s| *s == StageState::Done) {
        thread::sleep(Duration::from_millis(1));
    }
    let t = std::time::Instant::now();
    h.drain_and_shutdown().unwrap();
    h.drain_and_shutdown().unwrap();
    assert!(t.elapsed() < Duration::from_secs(1));
    assert_eq!(h.finish().unwrap().0, oracle(&spec, &input));
}

#[test]
fn shutdown_mid_stream_leaves_valid_prefix() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(20_000, 7);
    let expect = oracle(&spec, &input);
    let p = Pipeline::build(&PipelineConfig::for_spec(&spec, 5).unwrap().with_capacity(4)).unwrap();
    let mut h = p.start(input).unwrap();
    thread::sleep(Duration::from_millis(20));
    h.drain_and_shutdown().unwrap();
    let (out, stats) = h.finish().unwrap();
    assert!(out.len() <= expect.len());
    assert_eq!(out[..], expect[..out.len()]);
    assert_eq!(stats.blocks_processed(), Some(out.len() as u64));
}

#[test]
fn stuck_stage_times_out_with_diagnostic() {
    let stuck: StageFn = Arc::new(|b| {
        thread::sleep(Duration::from_secs(2));
        b
    });
    let ok: StageFn = Arc::new(|b| b);
    let opts = PipelineOptions {
        shutdown_timeout: Duration::from_millis(100),
        ..Default::default()
    };
    let p = Pipeline::from_stages(vec![ok, stuck], opts).unwrap();
    let mut h = p.start((0..10u64).map(Block64::new)).unwrap();
    thread::sleep(Duration::from_millis(20));
    match h.drain_and_shutdown() {
        Err(PipelineError::Timeout { states, .. }) => {
            assert_eq!(states.len(), 2);
            assert_eq!(states[1], StageState::Working);
            let msg = PipelineError::Timeout {
                after: Duration::ZERO,
                states,
            }
            .to_string();
            assert!(msg.contains("stage 1: working"), "{msg}");
        }
        other => panic!("expected timeout, got {other:?}"),
    }
}

#[test]
fn single_stage_overhead_is_small() {
    let spec = ProductCipherSpec::canonical(key());
    let input = stream(3000, 8);
    let cfg = PipelineConfig::for_spec(&spec, 1).unwrap();
    let report = measure_throughput(&cfg, &input, 5).unwrap();
    assert_eq!(report.stages, 1);
    assert!(
        (0.8..=1.2).contains(&report.speedup),
        "1-stage speedup {}",
        report.speedup
    );
    assert!(matches!(
        measure_throughput(&cfg, &input, 0),
        Err(PipelineError::ZeroRepetitions)
    ));
}
