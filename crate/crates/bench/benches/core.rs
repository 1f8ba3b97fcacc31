use std::hint::black_box;

use coilbed::control::{convex_step, ConvexState, Method, StepInput};
use coilbed::experiments::{run_step_response, run_sysid, SysIdScenario};
use coilbed::magnetics::{field_map, pair_field, GridAxis, GridSpec, HelmholtzPair, Point};
use coilbed::presets::{convex_params, step_scenario, sysid_params, sysid_scenario, SnrPreset, StepPreset};
use criterion::{criterion_group, criterion_main, Criterion};

fn magnetics(c: &mut Criterion) {
    let pair = HelmholtzPair::TESTBED;
    c.bench_function("pair_field", |b| b.iter(|| pair_field(&pair, black_box(Point::new(0.1, -0.05, 0.08)))));
    let axis = GridAxis { min: -0.2, max: 0.2, count: 21 };
    let grid = GridSpec { x: axis, y: axis, z: axis };
    c.bench_function("field_map_21x21x21", |b| b.iter(|| field_map(&pair, black_box(&grid)).unwrap()));
}

fn control(c: &mut Criterion) {
    let p = convex_params(SnrPreset::Db30);
    let s = ConvexState::new(vec![0.3, 0.2], 0.0);
    let x = [0.7, -1.1];
    c.bench_function("convex_step", |b| {
        b.iter(|| convex_step(black_box(&s), &p, &StepInput { x: &x, d: black_box(0.4) }).unwrap())
    });
}

fn experiments(c: &mut Criterion) {
    let mut g = c.benchmark_group("experiments");
    g.sample_size(10);
    let scn = SysIdScenario { trials: 20, ..sysid_scenario(SnrPreset::Db30) };
    let p = sysid_params(Method::Convex, SnrPreset::Db30);
    g.bench_function("run_sysid_20_trials", |b| b.iter(|| run_sysid(&scn, &p).unwrap()));
    let step = step_scenario(StepPreset::Up, Method::Convex);
    g.bench_function("run_step_response", |b| b.iter(|| run_step_response(&step).unwrap()));
    g.finish();
}

criterion_group!(benches, magnetics, control, experiments);
criterion_main!(benches);
