use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cts_core::agents::{AgentKind, AgentSpec, AgentState, BetaPrior};
use cts_core::combinat::{ActionSet, ActionSetSpec};
use cts_core::envs::{EnvSpec, MeanSpec};
use cts_core::harness::{self, CellSeed, Instance};
use cts_core::rng::{self, Role};
use rand::Rng;

fn argmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("argmax_linear");
    let specs = [
        ("two-block-100", ActionSetSpec::TwoBlock { d: 100 }),
        ("top-m-100-50", ActionSetSpec::TopM { d: 100, m: 50 }),
        ("top-m-12-4", ActionSetSpec::TopM { d: 12, m: 4 }),
    ];
    for (name, spec) in specs {
        let set = ActionSet::new(spec).unwrap();
        let mut rng = rng::stream(1, 0, Role::Env);
        let w: Vec<f64> = (0..set.dim()).map(|_| rng.random::<f64>() - 0.5).collect();
        group.bench_with_input(BenchmarkId::from_parameter(name), &w, |b, w| {
            b.iter(|| set.argmax_linear(black_box(w)).unwrap())
        });
    }
    group.finish();
}

fn agent_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("agent_step");
    let set = Arc::new(ActionSet::new(ActionSetSpec::TwoBlock { d: 50 }).unwrap());
    let kinds = [
        AgentKind::BCts {
            prior: BetaPrior::Uniform,
        },
        AgentKind::GCts,
        AgentKind::BgCts {
            lambda: 1.0,
            boost: None,
        },
        AgentKind::Escb { lambda: 1.0 },
    ];
    for kind in kinds {
        let name = kind.default_label();
        let mut state = AgentState::new(kind, set.clone(), 0.5).unwrap();
        let mut rng = rng::stream(2, 0, Role::Agent(0));
        // Past the initialization queue.
        for _ in 0..10 {
            let sel = state.select_action(&mut rng).unwrap();
            let y: Vec<f64> = (0..50)
                .map(|i| f64::from(sel.action.contains(i) && rng.random::<bool>()))
                .collect();
            state.update(&sel.action, &y).unwrap();
        }
        group.bench_function(name, |b| b.iter(|| state.select_action(&mut rng).unwrap()));
    }
    group.finish();
}

fn episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    let instance = Instance::from_specs(
        &ActionSetSpec::TwoBlock { d: 50 },
        &EnvSpec::Bernoulli {
            mu: MeanSpec::Blocks {
                blocks: vec![(25, 0.7), (25, 0.9)],
            },
            sigma: Some(0.5),
        },
    )
    .unwrap();
    let checkpoints = harness::checkpoint_grid(1000, 10);
    for kind in [
        AgentKind::BCts {
            prior: BetaPrior::Uniform,
        },
        AgentKind::BgCts {
            lambda: 1.0,
            boost: None,
        },
    ] {
        let spec = AgentSpec::new(kind);
        group.bench_function(spec.label(), |b| {
            b.iter(|| {
                let seed = CellSeed {
                    master: 42,
                    replication: 0,
                    agent_index: 0,
                };
                harness::run_regret(&instance, &spec, 1000, seed, &checkpoints).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, argmax, agent_step, episode);
criterion_main!(benches);
