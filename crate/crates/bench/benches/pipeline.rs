use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use radar_annotate::clustering::{select_bandwidth, Point3};
use radar_annotate::detect::cfar_detect;
use radar_annotate::io::PipelineConfig;
use radar_annotate::pipeline::detect_frame;
use radar_annotate::radar::{process_cube, synthesize_frame};
use radar_annotate::{Category, Scene, SceneObject};

fn scene() -> Scene {
    let car = |id, x, y| SceneObject {
        instance_id: id,
        category: Category::Car,
        trajectory: vec![[x, y]],
        reflectivity_amplitude: 1.0,
    };
    Scene {
        objects: vec![car(1, 1.0, 12.0), car(2, -6.0, 25.0)],
        ..Scene::default()
    }
}

fn bench(c: &mut Criterion) {
    let config = PipelineConfig::default();
    let radar = config.radar.clone();
    let scene = scene();

    c.bench_function("synthesize_frame", |b| {
        b.iter(|| synthesize_frame(black_box(&scene), 0, &radar, config.noise_sigma, 7).unwrap())
    });

    let raw = synthesize_frame(&scene, 0, &radar, config.noise_sigma, 7).unwrap();
    c.bench_function("process_cube", |b| b.iter(|| process_cube(black_box(&raw), &radar).unwrap()));

    let processed = process_cube(&raw, &radar).unwrap();
    let (rd, ra) = (processed.rd_map.unwrap(), processed.ra_map.unwrap());
    let power = ra.map(|v| v * v);
    c.bench_function("cfar_range_angle", |b| {
        b.iter(|| cfar_detect(black_box(&power), &config.cfar).unwrap())
    });

    let record = detect_frame(&rd, &ra, 0, &radar, &config).unwrap();
    let points: Vec<Point3> = record.cloud.points.iter().map(|p| p.to_array()).collect();
    let truth = scene.ground_truth(&scene.objects[0], 0);
    let seed = [truth.position[0], truth.position[1], truth.radial_velocity_m_s];
    let mut params = config.clustering.selection_params();
    params.mc_samples = 1024;
    let mut group = c.benchmark_group("select_bandwidth");
    group.sample_size(10);
    group.bench_function(format!("{}_points", points.len()), |b| {
        b.iter(|| select_bandwidth(black_box(&points), &seed, &config.clustering.bandwidth_grid, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
