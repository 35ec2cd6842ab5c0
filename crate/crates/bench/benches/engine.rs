use std::hint::black_box;

use arctic_bench::{batch_config, train_config};
use arctic_core::agents::{arctic_policy, AgentParams, ArcticState};
use arctic_core::game::{minimax_value, minimax_value_grid};
use arctic_core::rl::train;
use arctic_core::sim::{split_seed, Engine};
use arctic_core::{AgentKind, MatrixGame, Player};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn matches(c: &mut Criterion) {
    let mut group = c.benchmark_group("match");
    group.throughput(Throughput::Elements(100));
    for opponent in [AgentKind::TitForTat, AgentKind::AllD, AgentKind::Arctic] {
        let engine = Engine::new(batch_config(opponent.clone(), 1)).unwrap();
        let mut k = 0u64;
        group.bench_function(BenchmarkId::from_parameter(&opponent), |b| {
            b.iter(|| {
                k += 1;
                engine.run_match(split_seed(2024, k)).unwrap()
            })
        });
    }
    group.finish();
}

fn batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for runs in [20u32, 200] {
        let engine = Engine::new(batch_config(AgentKind::TitForTat, runs)).unwrap();
        group.throughput(Throughput::Elements(u64::from(runs)));
        group.bench_with_input(BenchmarkId::from_parameter(runs), &engine, |b, e| {
            b.iter(|| e.run_batch().unwrap())
        });
    }
    group.finish();
}

fn decisions(c: &mut Criterion) {
    let game = MatrixGame::prisoners_dilemma();
    let mut state = ArcticState::new(&AgentParams::new(game, Player::I)).unwrap();
    state.epsilon = 0.3;
    c.bench_function("arctic_policy", |b| {
        b.iter(|| arctic_policy(black_box(&state), &game))
    });
    c.bench_function("minimax/closed_form", |b| {
        b.iter(|| minimax_value(black_box(&game), Player::I))
    });
    c.bench_function("minimax/grid", |b| {
        b.iter(|| minimax_value_grid(black_box(&game), Player::I))
    });
}

fn learner(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    let cfg = train_config(1000);
    group.throughput(Throughput::Elements(cfg.episodes));
    group.bench_function("1000_episodes", |b| {
        b.iter(|| train(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matches, batches, decisions, learner);
criterion_main!(benches);
