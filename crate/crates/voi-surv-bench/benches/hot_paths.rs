//! Benchmarks for the routines that dominate a full scenario run: the
//! censored-likelihood fit, restricted-mean quadrature, truncated event
//! sampling, posterior MCMC, bridge-sampling evidence, the tensor spline,
//! and the perfect-information bound.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use voi_surv::evidence::log_marginal_bridge;
use voi_surv::fit::fit_mle;
use voi_surv::gam::fit_tensor_spline;
use voi_surv::mcmc::{sample_posterior, McmcSettings, PosteriorSpec};
use voi_surv::voi::evpi_mc;
use voi_surv::{AnalysisMode, DesignPoint, SurvivalFamily};
use voi_surv_bench::{fixture, Fixture, HORIZON, T1};

fn bench_all(c: &mut Criterion) {
    let fx = fixture();

    c.bench_function("fit_mle_weibull_n200", |b| {
        b.iter(|| fit_mle(SurvivalFamily::Weibull, black_box(&fx.arm)).unwrap())
    });

    let theta = fx.fits[0].theta_hat;
    c.bench_function("restricted_mean_survival", |b| {
        b.iter(|| {
            SurvivalFamily::Weibull
                .restricted_mean_survival(black_box(theta), HORIZON)
                .unwrap()
        })
    });

    c.bench_function("truncated_sample_1000", |b| {
        b.iter(|| {
            let mut rng = fx.streams.stream(&[90, 1]);
            let mut acc = 0.0;
            for _ in 0..1000 {
                acc += SurvivalFamily::Weibull
                    .sample_truncated(&mut rng, black_box(theta), T1)
                    .unwrap();
            }
            acc
        })
    });

    let Fixture { specs, outer, .. } = &fx;
    let prior = &specs[0].model_for(SurvivalFamily::Weibull).unwrap().posterior;
    let spec = PosteriorSpec {
        prior,
        family: SurvivalFamily::Weibull,
        ongoing: &outer.draws[0].ongoing[0],
    };
    let settings = McmcSettings {
        draws: 500,
        warmup: 250,
        chains: 2,
        seed: 611,
    };
    c.bench_function("posterior_mcmc_500_draws", |b| {
        b.iter(|| sample_posterior(black_box(&spec), &settings).unwrap())
    });

    let draws = sample_posterior(&spec, &settings).unwrap();
    c.bench_function("bridge_evidence_500_draws", |b| {
        b.iter(|| {
            let mut rng = fx.streams.stream(&[90, 2]);
            log_marginal_bridge(black_box(&spec), &draws, &mut rng).unwrap()
        })
    });

    let nb = outer.net_benefits();
    let inputs: Vec<DesignPoint> = outer
        .draws
        .iter()
        .map(|d| d.summaries[0].into())
        .collect();
    c.bench_function("tensor_spline_500_points", |b| {
        b.iter(|| fit_tensor_spline(black_box(&inputs), &nb.nb[0]).unwrap())
    });

    c.bench_function("evpi_mc_10k_averaged", |b| {
        b.iter(|| {
            evpi_mc(
                black_box(specs),
                AnalysisMode::Averaged,
                10_000,
                HORIZON,
                &fx.streams,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_all);
criterion_main!(benches);
