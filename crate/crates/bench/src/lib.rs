//! Criterion benchmarks for the numeric kernels, on synthetic layers sized
//! like a small encoder (a few thousand occurrences, hundreds of dimensions).

use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use isosense_core::synth::{generate, MeanLayout, Spike, SynthSpec};
use isosense_core::{
    build_inventory, build_sense_graph, layer_report, pca_profile, random_pair_baseline, remove_top_components,
    retrofit, EmbeddingDataset, LaserConfig, Pos, SenSimNormalization, SenseInventory,
};

pub fn workload(dim: usize, lemmas: usize) -> (EmbeddingDataset, SenseInventory) {
    let spec = SynthSpec {
        model_name: "bench".into(),
        dim,
        n_layers: 1,
        seed: 0,
        lemmas,
        senses_per_lemma: 3,
        occurrences_per_sense: 10,
        means: MeanLayout::Gaussian,
        mean_scale: 1.0,
        noise_std: 0.2,
        spikes: vec![Spike {
            magnitude: 5.0,
            direction: None,
            spread: 1.0,
        }],
        unannotated: lemmas * 10,
        shuffle: true,
    };
    let (ds, _) = generate(&spec).expect("valid bench spec");
    let pos: BTreeSet<Pos> = Pos::CONTENT.into_iter().collect();
    let inv = build_inventory(&ds.occurrences, &pos);
    (ds, inv)
}

pub fn baseline(c: &mut Criterion) {
    let (ds, _) = workload(256, 50);
    let mut group = c.benchmark_group("random_pair_baseline");
    for k in [100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| random_pair_baseline(black_box(ds.layer(0)), k, 0).unwrap())
        });
    }
    group.finish();
}

pub fn pca(c: &mut Criterion) {
    let mut group = c.benchmark_group("pca_profile");
    group.sample_size(10);
    for dim in [64, 256] {
        let (ds, _) = workload(dim, 50);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &ds, |b, ds| {
            b.iter(|| pca_profile(black_box(ds.layer(0)), 10).unwrap())
        });
    }
    group.finish();
}

pub fn metrics(c: &mut Criterion) {
    let (ds, inv) = workload(256, 50);
    c.bench_function("layer_report", |b| {
        b.iter(|| layer_report(black_box(&ds), &inv, &[0.0], SenSimNormalization::PairMean).unwrap())
    });
}

pub fn laser(c: &mut Criterion) {
    let (ds, inv) = workload(256, 50);
    let removal = remove_top_components(ds.layer(0), 1).unwrap();
    let graph = build_sense_graph(&inv);
    let mut group = c.benchmark_group("retrofit");
    for iterations in [1, 10] {
        let cfg = LaserConfig {
            iterations,
            ..LaserConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(iterations), &cfg, |b, cfg| {
            b.iter(|| retrofit(black_box(&removal.v_prime), &graph, cfg).unwrap())
        });
    }
    group.finish();
}
