use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scale_iter::bruno::{a_pi, quadratic_orbit, BrunoSequence};
use scale_iter::engines::{circle_run, morse_run, newton_invert, CircleOptions, NewtonOptions};
use scale_iter::fourier::{strip_l2_norm, FourierSeries};
use scale_iter::series::{ExactSeries, FloatSeries};
use scale_iter_bench::{morse_start, newton_target, newton_target_float};

fn morse(c: &mut Criterion) {
    let mut g = c.benchmark_group("morse");
    for steps in [2usize, 3, 4] {
        let f0 = morse_start((1 << steps) + 2);
        g.bench_with_input(BenchmarkId::from_parameter(steps), &f0, |b, f0| {
            b.iter(|| morse_run(f0, steps, 0.25).unwrap())
        });
    }
    g.finish();
}

fn newton(c: &mut Criterion) {
    let mut g = c.benchmark_group("newton");
    g.bench_function("exact/32", |b| {
        let y = newton_target(32);
        b.iter(|| newton_invert(&y, &ExactSeries::one(32), 6, &NewtonOptions::default()).unwrap())
    });
    g.bench_function("float/64", |b| {
        let y = newton_target_float(64);
        b.iter(|| newton_invert(&y, &FloatSeries::one(64), 12, &NewtonOptions::default()).unwrap())
    });
    g.finish();
}

fn circle(c: &mut Criterion) {
    c.bench_function("circle/eps0.3/steps4", |b| {
        b.iter(|| circle_run(0.3, 4, 32, CircleOptions::default()).unwrap())
    });
}

fn norms(c: &mut Criterion) {
    let w = FourierSeries::from_cos_sin(256, 0.0, &[(1, 1.0), (7, 0.5), (200, 1e-3)], &[(3, 0.25)]);
    c.bench_function("strip_norm/cap256", |b| b.iter(|| strip_l2_norm(&w, 0.5).unwrap()));
}

fn bruno(c: &mut Criterion) {
    let a = BrunoSequence::constant(2.0, 64).unwrap();
    c.bench_function("a_pi/64", |b| b.iter(|| a_pi(&a, 1e-6).unwrap()));
    c.bench_function("quadratic_orbit/64", |b| b.iter(|| quadratic_orbit(&a, 0.4, 64).unwrap()));
}

criterion_group!(benches, morse, newton, circle, norms, bruno);
criterion_main!(benches);
