use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxwell_hdg::mesh::generate_unit_cube_hex;
use maxwell_hdg::postproc::{relative_l2_error, ErrorNorm};
use maxwell_hdg::*;

fn cavity(n: usize, degree: usize) -> (Discretization, FieldState) {
    let r3 = 3f64.sqrt();
    let material = Material::uniform(MaterialProperties::isotropic(r3, r3, 0.0).unwrap());
    let disc = Discretization::with_defaults(
        generate_unit_cube_hex(n).unwrap(),
        Formulation::Mixed,
        degree,
        material,
    )
    .unwrap();
    let state = FieldState::from_analytical(
        &disc,
        &AnalyticalField::CavityPec111,
        0.0,
        Parallelism::Sequential,
    )
    .unwrap();
    (disc, state)
}

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("condensed_build");
    group.sample_size(10);
    let (disc, _) = cavity(6, 2);
    for mode in [Parallelism::Sequential, Parallelism::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &mode,
            |b, &mode| b.iter(|| CondensedSystem::build(&disc, 1e-3, mode).unwrap()),
        );
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    let (disc, state) = cavity(6, 2);
    let problem = Problem::default();
    for mode in [Parallelism::Sequential, Parallelism::Parallel] {
        let sys = CondensedSystem::build(&disc, 1e-3, mode).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &sys,
            |b, sys| b.iter(|| sys.step(&disc, &state, &problem).unwrap()),
        );
    }
    group.finish();
}

fn bench_error(c: &mut Criterion) {
    let mut group = c.benchmark_group("relative_l2_error");
    let (disc, state) = cavity(8, 2);
    let field = AnalyticalField::CavityPec111;
    for mode in [Parallelism::Sequential, Parallelism::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &mode,
            |b, &mode| {
                b.iter(|| {
                    relative_l2_error(
                        &disc,
                        |e| state.electric(&disc, e),
                        |x| field.e(x, 0.0),
                        ErrorNorm::GlobalRatio,
                        mode,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_build, bench_step, bench_error);
criterion_main!(benches);
