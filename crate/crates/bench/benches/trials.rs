use criterion::{criterion_group, criterion_main, Criterion};

use owc_rlnc_noma::sim::{run_trial_ber, run_trial_rate, substream, Experiment, Fidelity, ScenarioConfig};

fn bench_trials(c: &mut Criterion) {
    let semi = ScenarioConfig::default();
    let exact = ScenarioConfig {
        fidelity: Fidelity::BitExact,
        ..ScenarioConfig::default()
    };
    let mut group = c.benchmark_group("trial");
    group.sample_size(20);
    let mut t = 0u64;
    group.bench_function("ber_semianalytic", |b| {
        b.iter(|| {
            t += 1;
            run_trial_ber(&mut substream(1, t, Experiment::Ber), &semi, 0.25).unwrap()
        })
    });
    group.bench_function("ber_bitexact", |b| {
        b.iter(|| {
            t += 1;
            run_trial_ber(&mut substream(1, t, Experiment::Ber), &exact, 0.25).unwrap()
        })
    });
    group.bench_function("rate", |b| {
        b.iter(|| {
            t += 1;
            run_trial_rate(&mut substream(1, t, Experiment::Rate), &semi, 0.25).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_trials);
criterion_main!(benches);
