use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use rnewt_core::*;

fn contaminated_linear(seed: u64) -> LabeledDataset {
    gen_dataset(&ScenarioSpec {
        scenario: Scenario::LinearHuber,
        p: 10,
        n: 1000,
        epsilon: 0.1,
        sigma: 1.0,
        beta: 1.0,
        seed,
    })
    .unwrap()
}

fn bench_robust_derivatives(c: &mut Criterion) {
    let data = contaminated_linear(3);
    let model = GlmModel::identity();
    let theta = DVector::from_element(10, 0.5);
    let rcfg = RobustConfig::huber(HuberConfig::new(0.1, 0.1));

    c.bench_function("robust_gradient_huber_p10", |b| {
        b.iter(|| robust_gradient(&data, &model, &theta, &rcfg).unwrap())
    });
    // the dominant per-iteration cost: the estimator runs on p^2-dim clouds
    let mut group = c.benchmark_group("robust_hessian_huber_p10");
    group.sample_size(20);
    group.bench_function("estimate", |b| {
        b.iter(|| robust_hessian(&data, &model, &theta, &rcfg).unwrap())
    });
    group.finish();
}

fn bench_full_newton_run(c: &mut Criterion) {
    let data = contaminated_linear(5);
    let model = GlmModel::identity();
    let theta0 = DVector::from_element(10, 3.0);
    let rcfg = RobustConfig::huber(HuberConfig::new(0.1, 0.1));
    let ncfg = NewtonConfig::new(5);
    let mut group = c.benchmark_group("robust_newton_t5");
    group.sample_size(10);
    group.bench_function("run", |b| {
        b.iter(|| robust_newton(&data, &model, &theta0, &rcfg, &ncfg).unwrap())
    });
    group.finish();
}

fn bench_cg_step(c: &mut Criterion) {
    let data = contaminated_linear(9);
    let model = GlmModel::identity();
    let theta = DVector::from_element(10, 0.5);
    let rcfg = RobustConfig::huber(HuberConfig::new(0.1, 0.1));
    let ccfg = CgConfig::new(NewtonConfig::new(5));
    c.bench_function("cg_newton_step_huber_p10", |b| {
        b.iter(|| cg_newton_step(&data, &model, &theta, &rcfg, &ccfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_robust_derivatives,
    bench_full_newton_run,
    bench_cg_step
);
criterion_main!(benches);
