use std::collections::HashSet;
use std::sync::Arc;

use adapt_core::concepts::{
    FractionProblem, FractionProgram, FunctionConcept, Operation, Predicate,
};
use adapt_core::harness::metrics::critical_examples;
use adapt_core::harness::{
    condition_table, program_candidates, run_episode, Assets, Condition, ExperimentConfig,
    FunctionCondition, FunctionStudent,
};
use adapt_core::students::{Learner, ProgramBelief, SimulatedStudent, StudentTypeSpec};
use adapt_core::teachers::{PolicyKind, PoolPolicy, Teacher, TeacherError};

type FnBelief = ProgramBelief<FunctionConcept>;

fn function_teacher(
    assets: &Assets,
    row: FunctionCondition,
    student: FunctionStudent,
    policy: PolicyKind,
    seed: u64,
    noise: Option<f64>,
) -> Teacher<FnBelief> {
    let mut cfg = ExperimentConfig::new(Condition::Functions { row, student }, policy, seed);
    if let Some(n) = noise {
        cfg.noise = n;
    }
    let cands = program_candidates(assets.function_space(), &cfg.condition.candidates(), &cfg).unwrap();
    Teacher::new(
        policy,
        row.target,
        assets.function_pool().clone(),
        PoolPolicy::Full,
        cands,
        Some(student.index()),
        seed,
    )
    .unwrap()
}

fn greater_row() -> FunctionCondition {
    condition_table()[3]
}

#[test]
fn random_first_picks_are_uniform() {
    let pool: Arc<[i32]> = (-20..=20).collect::<Vec<_>>().into();
    let mut counts = [0usize; 41];
    let n = 10_000;
    for seed in 0..n {
        let mut t: Teacher<FnBelief> = Teacher::new(
            PolicyKind::Random,
            greater_row().target,
            pool.clone(),
            PoolPolicy::Full,
            Vec::new(),
            None,
            seed,
        )
        .unwrap();
        counts[(t.select().unwrap() + 20) as usize] += 1;
    }
    let e = n as f64 / 41.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 40 degrees of freedom: mean 40, sd sqrt(80).
    assert!(chi2 < 40.0 + 3.0 * 80f64.sqrt(), "chi2 {chi2}");
}

#[test]
fn random_has_no_type_model() {
    let assets = Assets::default();
    let t = function_teacher(&assets, greater_row(), FunctionStudent::FLearner, PolicyKind::Random, 0, None);
    assert!(matches!(t.query_student_type_index(), Err(TeacherError::NotSupported(_))));
    let k = function_teacher(
        &assets,
        greater_row(),
        FunctionStudent::BLearner,
        PolicyKind::NonAdaptive { known: true },
        0,
        None,
    );
    assert_eq!(k.query_student_type_index().unwrap(), 1);
}

#[test]
fn critical_input_scores_above_agreeing_inputs() {
    let assets = Assets::default();
    let row = greater_row();
    let cfg = ExperimentConfig::new(
        Condition::Functions {
            row,
            student: FunctionStudent::FLearner,
        },
        PolicyKind::Atom,
        0,
    );
    let cands = program_candidates(assets.function_space(), &cfg.condition.candidates(), &cfg).unwrap();
    let belief = &cands[0].1;
    let xs: Vec<i32> = (-20..=20).collect();
    let scores = belief.ot_scores(&xs, &row.target);
    // Brute force: condition a copy on each labelled input.
    for (x, s) in xs.iter().zip(&scores) {
        let mut b = belief.clone();
        b.update(x, &row.target.eval_unchecked(*x));
        assert!((b.prob_of(&row.target) - s).abs() < 1e-12);
    }
    let crit = critical_examples(Predicate::Greater(2), Predicate::Greater(4));
    let s3 = scores[(3 + 20) as usize];
    for (x, s) in xs.iter().zip(&scores) {
        if !crit.contains(x) {
            assert!(s3 > *s, "x={x}");
        }
    }
}

#[test]
fn mult_learner_best_first_example_is_equal_denominator_product() {
    let assets = Assets::default();
    let cfg = ExperimentConfig::new(
        Condition::Fractions {
            student: StudentTypeSpec::MultLearner,
        },
        PolicyKind::Atom,
        0,
    );
    let cands = program_candidates(assets.fraction_space(), &cfg.condition.candidates(), &cfg).unwrap();
    let pool = assets.fraction_pool(cfg.fraction_range);
    let scores = cands[0].1.ot_scores(&pool, &FractionProgram::TARGET);
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(pool
        .iter()
        .zip(&scores)
        .any(|(p, s)| *s == best && p.op == Operation::Mul && p.equal_denominators()));
}

#[test]
fn known_non_adaptive_opens_with_critical_examples() {
    let assets = Assets::default();
    for row in condition_table() {
        let crit = critical_examples(row.target.f, row.spurious_f);
        let mut t = function_teacher(
            &assets,
            row,
            FunctionStudent::FLearner,
            PolicyKind::NonAdaptive { known: true },
            0,
            None,
        );
        let first: Vec<i32> = (0..3).map(|_| t.select().unwrap()).collect();
        assert!(first.iter().any(|x| crit.contains(x)), "{} {first:?}", row.id());
    }
}

#[test]
fn wrong_fixed_type_changes_the_first_pick() {
    let assets = Assets::default();
    let differs = condition_table().into_iter().any(|row| {
        let known = function_teacher(
            &assets,
            row,
            FunctionStudent::FLearner,
            PolicyKind::NonAdaptive { known: true },
            0,
            None,
        )
        .select()
        .unwrap();
        (0..20).any(|seed| {
            let mut t = function_teacher(
                &assets,
                row,
                FunctionStudent::FLearner,
                PolicyKind::NonAdaptive { known: false },
                seed,
                None,
            );
            t.fixed_type() == Some(1) && t.select().unwrap() != known
        })
    });
    assert!(differs);
}

#[test]
fn ranking_matches_non_adaptive_at_step_zero_and_then_diverges() {
    let assets = Assets::default();
    let mut diverged = false;
    for row in condition_table() {
        for student in FunctionStudent::ALL {
            let mut r = function_teacher(&assets, row, student, PolicyKind::Ranking { known: true }, 0, None);
            let mut n = function_teacher(&assets, row, student, PolicyKind::NonAdaptive { known: true }, 0, None);
            let mut rs = Vec::new();
            let mut ns = Vec::new();
            for _ in 0..41 {
                let x = r.select().unwrap();
                rs.push(x);
                let y = row.target.eval_unchecked(x);
                r.observe(&x, Some(&y), &y);
                let x = n.select().unwrap();
                ns.push(x);
                let y = row.target.eval_unchecked(x);
                n.observe(&x, Some(&y), &y);
            }
            assert_eq!(rs[0], ns[0]);
            let set: HashSet<i32> = rs.iter().copied().collect();
            assert_eq!(set.len(), 41);
            assert!(matches!(r.select(), Err(TeacherError::PoolExhausted)));
            diverged |= rs[5] != ns[5];
        }
    }
    assert!(diverged);
}

#[test]
fn atom_scores_match_brute_force_and_identify_noise_free_f_learner() {
    let assets = Assets::default();
    let row = greater_row();
    let mut t = function_teacher(&assets, row, FunctionStudent::FLearner, PolicyKind::Atom, 0, Some(1e-9));
    assert_eq!(t.map_index(), 0);
    // A noise-free f-learner answers with its MAP program.
    let cands = t.candidates().to_vec();
    let student_belief = cands[0].belief.clone();
    let mut student = student_belief.clone();
    let mut shadow: Vec<FnBelief> = cands.iter().map(|c| c.belief.clone()).collect();
    let mut scores = vec![0.0f64; 2];
    let mut separated = false;
    for x in [10, -3, 0, 4, 7] {
        let g = student.mode().eval_unchecked(x);
        let y = row.target.eval_unchecked(x);
        for (k, b) in shadow.iter_mut().enumerate() {
            scores[k] += b.predictive_prob(&x, &g).ln();
            b.update(&x, &y);
        }
        t.observe(&x, Some(&g), &y);
        student.update(&x, &y);
        for (c, s) in t.candidates().iter().zip(&scores) {
            assert!((c.log_score - s).abs() < 1e-9);
        }
        // Once the candidates have scored a guess differently, the
        // f-learner leads for good.
        separated |= (scores[0] - scores[1]).abs() > 1e-9;
        if separated {
            assert!(scores[0] > scores[1]);
            assert_eq!(t.map_index(), 0);
        }
    }
    assert!(separated);
}

#[test]
fn atom_beliefs_ignore_guesses() {
    let assets = Assets::default();
    let row = greater_row();
    let mut a = function_teacher(&assets, row, FunctionStudent::BLearner, PolicyKind::Atom, 0, None);
    let mut b = a.clone();
    for x in [3, 0, -7, 12] {
        let y = row.target.eval_unchecked(x);
        a.observe(&x, Some(&y), &y);
        b.observe(&x, Some(&adapt_core::concepts::FunctionOutput::Value(99)), &y);
    }
    for (ca, cb) in a.candidates().iter().zip(b.candidates()) {
        assert_eq!(ca.belief.probs(), cb.belief.probs());
    }
}

#[test]
fn atom_follows_known_policy_once_converged() {
    let assets = Assets::default();
    for row in condition_table().into_iter().step_by(3) {
        for student in FunctionStudent::ALL {
            let mut atom = function_teacher(&assets, row, student, PolicyKind::Atom, 5, None);
            let mut sim = SimulatedStudent::new(atom.candidates()[student.index()].belief.clone(), 5);
            let mut shown = Vec::new();
            for _ in 0..10 {
                let x = atom.select().unwrap();
                let g = sim.guess(&x);
                let y = atom.label(&x);
                sim.observe(&x, &y);
                atom.observe(&x, Some(&g), &y);
                shown.push(x);
            }
            if atom.map_index() != student.index() {
                continue;
            }
            let mut known = function_teacher(&assets, row, student, PolicyKind::NonAdaptive { known: true }, 5, None);
            for x in &shown {
                known.mark_used(x);
                let y = row.target.eval_unchecked(*x);
                known.observe(x, None, &y);
            }
            for _ in 0..5 {
                let a = atom.select().unwrap();
                let k = known.select().unwrap();
                assert_eq!(a, k, "{}", row.id());
                let y = row.target.eval_unchecked(a);
                let g = sim.guess(&a);
                sim.observe(&a, &y);
                atom.observe(&a, Some(&g), &y);
                known.observe(&k, None, &y);
                if atom.map_index() != student.index() {
                    break;
                }
            }
        }
    }
}

#[test]
fn atom_selects_equal_denominator_product_after_spotting_mult_learner() {
    let assets = Assets::default();
    let cfg = ExperimentConfig::new(
        Condition::Fractions {
            student: StudentTypeSpec::MultLearner,
        },
        PolicyKind::Atom,
        0,
    );
    let cands = program_candidates(assets.fraction_space(), &cfg.condition.candidates(), &cfg).unwrap();
    let mult_mode = *cands[0].1.mode();
    let mut t = Teacher::new(
        PolicyKind::Atom,
        FractionProgram::TARGET,
        assets.fraction_pool(cfg.fraction_range),
        PoolPolicy::Full,
        cands,
        None,
        0,
    )
    .unwrap();
    let x: FractionProblem = "1/2*1/6".parse().unwrap();
    let g = mult_mode.eval(&x);
    assert_eq!(g.to_string(), "3/6");
    t.mark_used(&x);
    t.observe(&x, Some(&g), &FractionProgram::TARGET.eval(&x));
    assert_eq!(t.map_index(), 0);
    let next = t.select().unwrap();
    assert!(next.op == Operation::Mul && next.equal_denominators(), "{next}");
}

#[test]
fn type_accuracy_grows_over_thirty_runs() {
    let assets = Assets::default();
    let rows = condition_table();
    let mut at5 = 0;
    let mut at40 = 0;
    for seed in 0..30u64 {
        let row = rows[(seed as usize * 5) % rows.len()];
        let student = FunctionStudent::ALL[seed as usize % 2];
        let cfg = ExperimentConfig::new(Condition::Functions { row, student }, PolicyKind::Atom, seed);
        let t = run_episode(&cfg, &assets).unwrap();
        at5 += usize::from(t.type_correct_at(5).unwrap());
        at40 += usize::from(t.type_correct_at(40).unwrap());
        for s in &t.steps {
            let x: i32 = s.input.parse().unwrap();
            assert_eq!(s.label, row.target.eval_unchecked(x).to_string());
        }
    }
    assert!(at40 >= at5, "{at5} {at40}");
}
