use std::hint::black_box;
use std::path::PathBuf;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pils::hosts::{self, HostConfig, HostKind};
use pils::model::{parse_instance, Instance};
use pils::par;

fn instance(name: &str) -> Instance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/instances").join(format!("{name}.vrp"));
    parse_instance(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn jobs(inst: &Instance, host: HostKind, count: u64) -> Vec<HostConfig> {
    (1..=count)
        .map(|seed| HostConfig {
            time_limit: Duration::from_secs(60),
            max_iterations: Some(25),
            population: 10,
            offspring: 10,
            seed,
            ..HostConfig::new(host, inst)
        })
        .collect()
}

fn batch(c: &mut Criterion) {
    let inst = instance("E-n51-k5");
    let threads = par::available_threads();
    let mut group = c.benchmark_group("seed_batch");
    group.sample_size(10);
    for host in [HostKind::Hgs, HostKind::Gls] {
        let configs = jobs(&inst, host, 8);
        let solve = |cfg: HostConfig| hosts::run(&inst, &cfg).unwrap().cost;
        group.bench_with_input(BenchmarkId::new("sequential", host), &configs, |b, cfgs| {
            b.iter(|| black_box(par::map_sequential(cfgs.clone(), solve)))
        });
        group.bench_with_input(BenchmarkId::new(format!("parallel_{threads}"), host), &configs, |b, cfgs| {
            b.iter(|| black_box(par::map_parallel(cfgs.clone(), threads, solve)))
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
