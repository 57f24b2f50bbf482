use proptest::prelude::*;

use adapt_core::concepts::{Predicate, Task};
use adapt_core::harness::config::GridSpec;
use adapt_core::harness::grid::{curve_rows, mean_auc_by_policy, run_grid, MetricRow};
use adapt_core::harness::metrics::{
    all_critical_by, auc, critical_examples, magnitude_profile, profile_shape, type_accuracy_over_time,
    ProfileShape,
};
use adapt_core::harness::{
    condition_table, replay_curve, run_episode, Assets, Condition, ExperimentConfig, FunctionStudent,
};
use adapt_core::students::StudentTypeSpec;
use adapt_core::teachers::PolicyKind;

fn predicate() -> impl Strategy<Value = Predicate> {
    let all = Predicate::all();
    (0..all.len()).prop_map(move |i| all[i])
}

proptest! {
    #[test]
    fn auc_ignores_a_saturated_tail(
        head in proptest::collection::vec(0.0..1.0f64, 1..20),
        tail in 1..30usize,
    ) {
        // Normalized by the step count, so only the shape matters: a curve
        // that reaches 1.0 and stays there gains area as the tail grows.
        let mut a = head.clone();
        a.push(1.0);
        let mut b = a.clone();
        b.extend(std::iter::repeat_n(1.0, tail));
        prop_assert!(auc(&b) >= auc(&a) - 1e-12);
        prop_assert!(auc(&b) <= 1.0 + 1e-12);
        let ones = vec![1.0; tail + 1];
        prop_assert!((auc(&ones) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_examples_are_symmetric(p in predicate(), q in predicate()) {
        let pq = critical_examples(p, q);
        prop_assert_eq!(&pq, &critical_examples(q, p));
        let same = (-20..=20).all(|x| p.eval(x) == q.eval(x));
        prop_assert_eq!(pq.is_empty(), same);
    }
}

#[test]
fn known_teacher_shows_3_and_4_first() {
    let assets = Assets::default();
    let crit = critical_examples(Predicate::Greater(2), Predicate::Greater(4));
    for row in condition_table()
        .into_iter()
        .filter(|r| r.target.f == Predicate::Greater(2) && r.spurious_f == Predicate::Greater(4))
    {
        for seed in 0..3 {
            let cfg = ExperimentConfig::new(
                Condition::Functions {
                    row,
                    student: FunctionStudent::FLearner,
                },
                PolicyKind::NonAdaptive { known: true },
                seed,
            );
            let xs = run_episode(&cfg, &assets).unwrap().function_inputs().unwrap();
            let by = all_critical_by(&xs, &crit).unwrap();
            assert!(by <= crit.len() + 2, "{} by step {by}", row.id());
        }
    }
}

#[test]
fn known_teacher_reaches_the_posterior_ceiling() {
    // Posterior after each input once is the most a repeat-free teacher can
    // reach; the known teacher gets there within 40 steps.
    let assets = Assets::default();
    for row in condition_table() {
        for student in FunctionStudent::ALL {
            let cond = Condition::Functions { row, student };
            let cfg = ExperimentConfig::new(cond.clone(), PolicyKind::NonAdaptive { known: true }, 0);
            let t = run_episode(&cfg, &assets).unwrap();
            let all = run_episode(&cfg.clone().with_horizon(41), &assets).unwrap();
            let ceiling = all.curve().last();
            let got = t.curve().last();
            assert!(got >= 0.99 || got >= ceiling - 1e-6, "{} {student:?}: {got} vs {ceiling}", row.id());
        }
    }
}

#[test]
fn atom_profiles_dip_before_rising_more_often_than_not() {
    let assets = Assets::default();
    let mut dip = 0;
    let mut rise = 0;
    for row in condition_table() {
        for seed in 0..3 {
            let cfg = ExperimentConfig::new(
                Condition::Functions {
                    row,
                    student: FunctionStudent::BLearner,
                },
                PolicyKind::Atom,
                seed,
            );
            let xs = run_episode(&cfg, &assets).unwrap().function_inputs().unwrap();
            match profile_shape(&magnitude_profile(&xs[..10], row.target.f)) {
                ProfileShape::DecreasingThenIncreasing => dip += 1,
                ProfileShape::Increasing => rise += 1,
                ProfileShape::Other => {}
            }
        }
    }
    assert!(dip > rise, "dip {dip} rise {rise}");
}

#[test]
fn type_accuracy_baselines() {
    let assets = Assets::default();
    let conds = Condition::all_for(Task::Functions);
    let runs: Vec<_> = conds
        .iter()
        .flat_map(|c| {
            [
                PolicyKind::NonAdaptive { known: true },
                PolicyKind::NonAdaptive { known: false },
            ]
            .map(|p| ExperimentConfig::new(c.clone(), p, 0).with_horizon(10))
        })
        .map(|c| run_episode(&c, &assets).unwrap())
        .collect();
    let known: Vec<_> = runs
        .iter()
        .filter(|t| t.config.policy == PolicyKind::NonAdaptive { known: true })
        .cloned()
        .collect();
    assert_eq!(type_accuracy_over_time(&known, &[0, 5, 10]), vec![1.0; 3]);
    let guessed: Vec<_> = runs
        .iter()
        .filter(|t| t.config.policy == PolicyKind::NonAdaptive { known: false })
        .cloned()
        .collect();
    let acc = type_accuracy_over_time(&guessed, &[10])[0];
    // 48 fair coin flips: 0.5 +- 3 sd.
    let sd = (0.25f64 / 48.0).sqrt();
    assert!((acc - 0.5).abs() <= 3.0 * sd, "{acc}");
}

#[test]
fn grid_outputs_are_replayable() {
    let assets = Assets::default();
    let spec = GridSpec::parse(
        "tasks = fractions\npolicies = random, atom\nseeds = 0, 1\nhorizon = 12\n",
    )
    .unwrap();
    let configs = spec.configs();
    assert_eq!(configs.len(), 2 * 2 * 2);
    let runs: Vec<_> = run_grid(&configs, &assets).into_iter().map(Result::unwrap).collect();
    for t in &runs {
        assert_eq!(replay_curve(t, &assets).unwrap(), t.curve());
        assert_eq!(curve_rows(t).len(), 13);
        let row = MetricRow::from_transcript(t);
        assert!((0.0..=1.0).contains(&row.auc));
    }
    let rows: Vec<MetricRow> = runs.iter().map(MetricRow::from_transcript).collect();
    let m = mean_auc_by_policy(&rows);
    assert!(m["atom"] > m["random"]);
    let mult_random: Vec<MetricRow> = rows
        .iter()
        .filter(|r| r.student == StudentTypeSpec::MultLearner.name())
        .cloned()
        .collect();
    assert!(!mult_random.is_empty());
}
