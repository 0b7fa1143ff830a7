//! Optimistic-count diagnostic on a small two-block instance.

use cts_core::agents::{AgentKind, AgentSpec};
use cts_core::combinat::ActionSetSpec;
use cts_core::diagnostics::{instrument_run, optimistic_count_check};
use cts_core::envs::{EnvSpec, MeanSpec};
use cts_core::harness::{CellSeed, Instance};
use cts_core::schedules::Constants;
use rayon::prelude::*;

/// two-block(4) with blocks at 0.5 and 0.7: m = 2, Δ = 0.4.
fn instance() -> Instance {
    Instance::from_specs(
        &ActionSetSpec::TwoBlock { d: 4 },
        &EnvSpec::Bernoulli {
            mu: MeanSpec::Blocks {
                blocks: vec![(2, 0.5), (2, 0.7)],
            },
            sigma: Some(0.5),
        },
    )
    .unwrap()
}

/// `(clean runs, count hits, band hits)` over `reps` runs of length `horizon`,
/// instrumented in chunks so traces do not pile up.
fn tally(seed: u64, reps: u64, horizon: u64) -> (u64, u64, u64) {
    let inst = instance();
    let agent = AgentSpec::new(AgentKind::BgCts {
        lambda: 1.0,
        boost: None,
    });
    let c = Constants::default();
    (0..reps)
        .collect::<Vec<_>>()
        .par_chunks(16)
        .map(|chunk| {
            let runs: Vec<_> = chunk
                .iter()
                .map(|&r| {
                    instrument_run(&inst, &agent, horizon, CellSeed::new(seed, r, 0), &c).unwrap()
                })
                .collect();
            let [count, band] = optimistic_count_check(&inst, &runs, &c);
            let hits = |f: f64| (f * count.reps as f64).round() as u64;
            (count.reps, hits(count.frequency), hits(band.frequency))
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

/// A pilot at seed 7 saw 1000/1000 clean runs, all meeting both conditions.
/// Rule of three puts the failure rate below 0.3%; the frozen threshold is 0.99.
const THRESHOLD: f64 = 0.99;

#[test]
fn clean_runs_play_the_optimum_often() {
    let reps = 1000;
    let (clean, count, band) = tally(42, reps, 10_000);
    assert!(
        clean as f64 >= THRESHOLD * reps as f64,
        "clean runs {clean}/{reps}"
    );
    assert!(
        count as f64 >= THRESHOLD * clean as f64,
        "count condition {count}/{clean}"
    );
    assert!(
        band as f64 >= THRESHOLD * clean as f64,
        "sample band {band}/{clean}"
    );
}

/// Reruns the calibration pilot: `cargo test --test optimistic_count -- --ignored --nocapture`.
#[test]
#[ignore]
fn pilot_calibration() {
    let (clean, count, band) = tally(7, 1000, 10_000);
    eprintln!("pilot: clean {clean}, count {count}, band {band}");
}
