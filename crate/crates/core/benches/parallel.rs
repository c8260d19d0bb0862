// Sequential vs rayon paths of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use owc_core::dataset::{draw_scene, simulate_sample, DatasetConfig, Split};
use owc_core::optics::{solve_refraction_point, LinkGeometry, SolverSettings};
use owc_core::par::{self, Exec};
use owc_core::render::{render, RenderMode, RenderSettings};

const EXECS: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn bench_render(c: &mut Criterion) {
    let cfg = DatasetConfig::default();
    let (scene, surface) = draw_scene(&cfg, 0, Split::Test).unwrap();
    let camera = cfg.camera(scene.rx, scene.camera_boresight).unwrap();
    let sol = solve_refraction_point(
        scene.tx,
        scene.rx,
        &surface,
        scene.t0,
        &cfg.optics,
        &SolverSettings::default(),
    );
    let geom = LinkGeometry {
        tx: scene.tx,
        rx: scene.rx,
        tx_boresight: sol.transmitter_direction(scene.tx),
        rx_boresight: camera.boresight,
        t: scene.t0,
        surface: &surface,
    };

    for (mode_name, mode) in [
        ("exhaustive", RenderMode::Exhaustive),
        ("seeded", RenderMode::Seeded),
    ] {
        let mut group = c.benchmark_group(format!("render_{mode_name}"));
        group.sample_size(10);
        for (name, exec) in EXECS {
            let settings = RenderSettings {
                mode,
                exec,
                ..RenderSettings::default()
            };
            group.bench_function(BenchmarkId::from_parameter(name), |b| {
                b.iter(|| render(&camera, black_box(&geom), &cfg.optics, &settings))
            });
        }
        group.finish();
    }
}

fn bench_solver_batch(c: &mut Criterion) {
    let cfg = DatasetConfig::default();
    let scenes: Vec<_> = (0..16)
        .map(|id| draw_scene(&cfg, id, Split::Test).unwrap())
        .collect();
    let settings = SolverSettings::default();

    let mut group = c.benchmark_group("solve_16_scenes");
    group.sample_size(10);
    for (name, exec) in EXECS {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::map_slice(exec, &scenes, |(s, surf)| {
                    solve_refraction_point(s.tx, s.rx, surf, s.t0, &cfg.optics, &settings).opl
                })
            })
        });
    }
    group.finish();
}

fn bench_sample(c: &mut Criterion) {
    let cfg = DatasetConfig {
        n_t: 4,
        ..DatasetConfig::default()
    };
    let mut group = c.benchmark_group("simulate_sample_4_frames");
    group.sample_size(10);
    for (name, exec) in EXECS {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_sample(&cfg, black_box(3), Split::Train, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_render, bench_solver_batch, bench_sample);
criterion_main!(benches);
