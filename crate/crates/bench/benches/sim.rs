use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dyad_core::harness::rng::{split, SCRIPT_LABEL};
use dyad_core::predict::{evaluate_suite, extract_window, SuiteOptions};
use dyad_core::{generate_script, run_trial, step_dyad, Condition, DyadState, ExperimentConfig, SimParams};

fn dynamics(c: &mut Criterion) {
    let params = SimParams::default();
    c.bench_function("step_dyad x1000", |b| {
        b.iter(|| {
            let mut s = DyadState::at_rest(0.0);
            for i in 0..1000 {
                let f = if i % 200 < 100 { 1.0 } else { -1.0 };
                s = step_dyad(&s, black_box(f), black_box(-0.5 * f), &params).unwrap();
            }
            s
        })
    });
}

fn trials(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::default();
    cfg.script.trial_duration = 30.0;
    cfg.script.choices_per_trial = 4;
    let script = generate_script(split(1, &[SCRIPT_LABEL]), &cfg.script).unwrap();
    let cfgs = cfg.trial_config();
    let mut group = c.benchmark_group("trial 30 s");
    group.sample_size(10);
    for cond in [Condition::Hfop, Condition::Hrp, Condition::Alone] {
        group.bench_function(cond.name(), |b| {
            b.iter(|| run_trial(cond, &script, &cfgs, black_box(7)).unwrap())
        });
    }
    group.finish();
}

fn predictors(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let script = generate_script(split(2, &[SCRIPT_LABEL]), &cfg.script).unwrap();
    let log = run_trial(Condition::Hfop, &script, &cfg.trial_config(), 3).unwrap();
    let opts = SuiteOptions::default();
    let windows: Vec<_> = script
        .choices()
        .map(|ch| extract_window(&log, ch, opts.t_start, opts.t_stop).unwrap())
        .collect();
    c.bench_function("predictor suite, 16 choices", |b| {
        b.iter(|| evaluate_suite(black_box(&windows), &opts).unwrap())
    });
}

criterion_group!(benches, dynamics, trials, predictors);
criterion_main!(benches);
