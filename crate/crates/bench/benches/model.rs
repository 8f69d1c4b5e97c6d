use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use fpamsuit_core::gravity::solve_pose;
use fpamsuit_core::sim::{step, ControllerConfig, PlantParams, PlantState, TrajectorySpec};
use fpamsuit_core::workspace::{scan_rom, scan_workspace};
use fpamsuit_core::{default_suit, Axis, FpamParams, HeadPose, PressureVector};

fn force_law(c: &mut Criterion) {
    let params = FpamParams::reference(0.3);
    c.bench_function("force", |b| b.iter(|| params.force(black_box(0.08), black_box(69.0))));
}

fn gravity_compensation(c: &mut Criterion) {
    let suit = default_suit();
    let pose = HeadPose::new(-20.0, 10.0, 15.0);
    c.bench_function("solve_pose", |b| b.iter(|| solve_pose(&suit, black_box(&pose))));
}

fn scans(c: &mut Criterion) {
    let suit = default_suit();
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("rom_AR", |b| b.iter(|| scan_rom(&suit, Axis::AR, 100, None)));
    group.bench_function("workspace", |b| b.iter(|| scan_workspace(&suit, black_box(&[200.0, 60.0]))));
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let suit = default_suit();
    let params = PlantParams::default();
    let state = PlantState::at_rest(&HeadPose::new(-5.0, 0.0, 0.0), PressureVector::uniform(34.5));
    let command = PressureVector::uniform(40.0);
    c.bench_function("plant_step", |b| b.iter(|| step(black_box(&state), &command, &params, &suit)));

    let spec = TrajectorySpec { cycles: 1, ..TrajectorySpec::new(Axis::FE) };
    let controller = ControllerConfig::for_axis(Axis::FE);
    let mut group = c.benchmark_group("track");
    group.sample_size(10);
    group.bench_function("FE_one_cycle", |b| {
        b.iter(|| fpamsuit_core::sim::track_pendulum(&suit, &params, &controller, &spec))
    });
    group.finish();
}

criterion_group!(benches, force_law, gravity_compensation, scans, simulation);
criterion_main!(benches);
