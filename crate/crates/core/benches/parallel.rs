use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polytext::fit::{ablation_study, AblationConfig, FitOptions};
use polytext::labelgen::{default_levels, encode_batch, Annotation};
use polytext::losses::LossConfig;
use polytext::synth::{rotated_rect, star_polygon};
use polytext::{detect, Exec, Point, Polygon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ablation(c: &mut Criterion) {
    let config = AblationConfig {
        trials: 32,
        fit: FitOptions { steps: 40, ..AblationConfig::default().fit },
        ..AblationConfig::default()
    };
    let loss = LossConfig::default();
    let mut group = c.benchmark_group("ablation_study");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| ablation_study(black_box(&config), &loss, exec).unwrap())
        });
    }
    group.finish();
}

fn iou(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let polys: Vec<Polygon> = (0..48)
        .map(|_| {
            let center = Point::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
            star_polygon(&mut rng, 16, center, 5.0, 15.0)
        })
        .collect();
    let mut group = c.benchmark_group("iou_matrix");
    for res in [128, 512] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, res), &res, |b, &res| {
                b.iter(|| detect::iou_matrix(black_box(&polys), &polys, res, exec))
            });
        }
    }
    group.finish();
}

fn encode(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let levels = default_levels();
    let images: Vec<Vec<Annotation>> = (0..64)
        .map(|_| {
            (0..10)
                .map(|_| {
                    let center = Point::new(rng.random_range(40.0..470.0), rng.random_range(40.0..470.0));
                    let (w, h) = (rng.random_range(20.0..120.0), rng.random_range(12.0..40.0));
                    Annotation::new(rotated_rect(center, w, h, rng.random_range(0.0..3.1)))
                })
                .collect()
        })
        .collect();
    let mut group = c.benchmark_group("encode_batch");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| encode_batch(black_box(&images), &levels, 16, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ablation, iou, encode);
criterion_main!(benches);
