use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use heavytail::backtest::{block_bootstrap_ci, rolling_forecast, BacktestConfig, BootstrapOptions, XiPolicy};
use heavytail::mc_study::{run_study, Estimator, StudyConfig};
use heavytail::tsgen::{benchmark_model, generate, SeededStream};
use heavytail::{build_tail_sample, hill};

fn study(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_study");
    g.sample_size(10);
    for id in [1u8, 4] {
        let cfg = StudyConfig::benchmark(id, 20, 1).unwrap();
        g.bench_function(format!("model{id}_n20"), |b| b.iter(|| run_study(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let m = benchmark_model(2).unwrap();
    let xs = generate(&m.spec, 1000, &SeededStream::new(3)).unwrap();
    let mut g = c.benchmark_group("backtest");
    g.sample_size(10);
    let cfg = BacktestConfig {
        window: 600,
        horizon_points: 400,
        p: 0.01,
        k: 100,
        method: Estimator::Unbiased,
        xi_policy: XiPolicy::default(),
    };
    g.bench_function("rolling_600_400", |b| b.iter(|| rolling_forecast(black_box(&xs), &cfg).unwrap()));
    g.bench_function("bootstrap_hill_99", |b| {
        b.iter(|| {
            block_bootstrap_ci(
                &xs,
                |s| Ok(hill(&build_tail_sample(s, 100)?).gamma_hat),
                &BootstrapOptions::default(),
                &SeededStream::new(4),
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, study, pipeline);
criterion_main!(benches);
