use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use adapt_core::concepts::{FunctionConcept, Task};
use adapt_core::harness::{condition_table, run_episode, Assets, Condition, ExperimentConfig, FunctionStudent};
use adapt_core::students::{build_program_prior, PriorWeighting};
use adapt_core::teachers::{PolicyKind, PoolPolicy, Teacher};

fn function_teacher(policy: PolicyKind) -> Teacher<adapt_core::students::ProgramBelief<FunctionConcept>> {
    let row = condition_table()[3];
    let space: Arc<[FunctionConcept]> = FunctionConcept::all().into();
    let cands = row
        .candidates()
        .into_iter()
        .map(|c| {
            let b = build_program_prior(space.clone(), &c, 1e4, PriorWeighting::Exponential, 0.05).unwrap();
            (c, b)
        })
        .collect();
    let pool: Arc<[i32]> = (-20..=20).collect::<Vec<_>>().into();
    Teacher::new(policy, row.target, pool, PoolPolicy::Full, cands, Some(0), 0).unwrap()
}

fn belief_update(c: &mut Criterion) {
    let space: Arc<[FunctionConcept]> = FunctionConcept::all().into();
    let row = condition_table()[3];
    let prior = build_program_prior(space, &row.f_learner(), 1e4, PriorWeighting::Exponential, 0.05).unwrap();
    let y = row.target.eval_unchecked(3);
    c.bench_function("function belief update", |b| {
        b.iter_batched(
            || prior.clone(),
            |mut p| {
                p.update(black_box(&3), black_box(&y));
                p
            },
            BatchSize::SmallInput,
        )
    });
}

fn selection(c: &mut Criterion) {
    for policy in [PolicyKind::Atom, PolicyKind::NonAdaptive { known: true }] {
        let t = function_teacher(policy);
        c.bench_function(&format!("{policy} select, functions"), |b| {
            b.iter_batched(|| t.clone(), |mut t| t.select().unwrap(), BatchSize::SmallInput)
        });
    }
}

fn episodes(c: &mut Criterion) {
    let assets = Assets::default();
    let fn_cfg = ExperimentConfig::new(
        Condition::Functions {
            row: condition_table()[3],
            student: FunctionStudent::BLearner,
        },
        PolicyKind::Atom,
        0,
    );
    let frac_cfg = ExperimentConfig::new(Condition::all_for(Task::Fractions).remove(0), PolicyKind::Atom, 0);
    // Warm the lazily built fraction pool outside the timing.
    run_episode(&frac_cfg.clone().with_horizon(1), &assets).unwrap();
    let mut g = c.benchmark_group("episode");
    g.sample_size(20);
    g.bench_function("atom functions, 40 steps", |b| b.iter(|| run_episode(black_box(&fn_cfg), &assets).unwrap()));
    g.bench_function("atom fractions, 40 steps", |b| b.iter(|| run_episode(black_box(&frac_cfg), &assets).unwrap()));
    g.finish();
}

criterion_group!(benches, belief_update, selection, episodes);
criterion_main!(benches);
