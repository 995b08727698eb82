// Step throughput of the force loop on a settled powder block, sequential
// vs rayon-parallel execution. Both paths produce bit-identical states, so
// the comparison is purely about wall time.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use powderdem::core::{fit_lognormal, MaterialParams};
use powderdem::integrator::{ExecMode, SimulationState};
use powderdem::math::{Aabb, Vec3};
use powderdem::rng::Rng;
use powderdem::walls::{MotionProgram, Triangle, WallMesh};

const UM: f64 = 1e-6;

/// Dense block of powder resting on a floor plane, pre-settled a few
/// hundred steps so contacts and tangential histories are active.
fn settled_block(n: usize, exec: ExecMode) -> (SimulationState, f64) {
    let material = MaterialParams::default();
    let dist = fit_lognormal(20.0 * UM, 34.0 * UM, 44.0 * UM).unwrap();
    let domain = Aabb::new(Vec3::new(-5e-3, -5e-3, -1e-3), Vec3::new(5e-3, 5e-3, 5e-3));
    let mut state = SimulationState::new(material, dist.d_min, dist.d_max, domain, exec).unwrap();

    let s = 4e-3;
    let floor = vec![
        Triangle { a: Vec3::new(-s, -s, 0.0), b: Vec3::new(s, -s, 0.0), c: Vec3::new(s, s, 0.0) },
        Triangle { a: Vec3::new(-s, -s, 0.0), b: Vec3::new(s, s, 0.0), c: Vec3::new(-s, s, 0.0) },
    ];
    state.add_wall(WallMesh::new(0, floor, MotionProgram::stationary(), true, 100.0 * UM).unwrap());

    // Loose cubic lattice that collapses into a dense bed.
    let mut rng = Rng::new(7);
    let per_side = (n as f64).powf(1.0 / 3.0).ceil() as usize;
    let pitch = 46.0 * UM;
    let mut placed = 0;
    'outer: for iz in 0..per_side * 2 {
        for iy in 0..per_side {
            for ix in 0..per_side {
                if placed >= n {
                    break 'outer;
                }
                let d = dist.sample_diameter(&mut rng).unwrap();
                let jitter = Vec3::new(
                    rng.uniform_in(-1.0, 1.0),
                    rng.uniform_in(-1.0, 1.0),
                    rng.uniform_in(-1.0, 1.0),
                ) * (1.0 * UM);
                let pos = Vec3::new(
                    (ix as f64 - per_side as f64 / 2.0) * pitch,
                    (iy as f64 - per_side as f64 / 2.0) * pitch,
                    25.0 * UM + iz as f64 * pitch,
                ) + jitter;
                state.spawn(pos, d / 2.0);
                placed += 1;
            }
        }
    }
    let dt = powderdem::integrator::critical_dt(state.m_min, material.stiffness);
    for _ in 0..400 {
        state.step(dt).unwrap();
    }
    (state, dt)
}

fn bench_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    for &n in &[1_000usize, 4_000, 16_000] {
        for (label, exec) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                let (mut state, dt) = settled_block(n, exec);
                b.iter(|| {
                    state.step(dt).unwrap();
                });
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_steps);
criterion_main!(benches);
