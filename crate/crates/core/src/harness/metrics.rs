//! Curve summaries and example-level analyses.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Transcript;
use crate::concepts::function::INPUT_RANGE;
use crate::concepts::{FractionProblem, Operation, Predicate, VerbClass, VerbCorpus};

/// Trapezoidal area under `values` divided by the number of steps, so a
/// curve in [0, 1] yields a value in [0, 1]. A single value is returned as
/// is.
pub fn auc(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let area: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
            area / (n - 1) as f64
        }
    }
}

/// Inputs on which the two predicates disagree.
pub fn critical_examples(target: Predicate, spurious: Predicate) -> BTreeSet<i32> {
    INPUT_RANGE
        .filter(|&x| target.eval(x) != spurious.eval(x))
        .collect()
}

/// 1 at steps whose input is critical.
pub fn critical_timing(inputs: &[i32], critical: &BTreeSet<i32>) -> Vec<u8> {
    inputs.iter().map(|x| u8::from(critical.contains(x))).collect()
}

/// Step (1-based) by which every critical example has been shown, or
/// `None` if some never was.
pub fn all_critical_by(inputs: &[i32], critical: &BTreeSet<i32>) -> Option<usize> {
    let mut remaining = critical.clone();
    if remaining.is_empty() {
        return Some(0);
    }
    for (i, x) in inputs.iter().enumerate() {
        remaining.remove(x);
        if remaining.is_empty() {
            return Some(i + 1);
        }
    }
    None
}

/// Mean indicator per step over several sequences of equal length.
pub fn mean_indicator(rows: &[Vec<u8>]) -> Vec<f64> {
    let Some(len) = rows.iter().map(Vec::len).max() else {
        return Vec::new();
    };
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.get(i).map(|&v| f64::from(v)))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

/// Which misconception an example is aimed at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleTarget {
    /// Multiplication with equal denominators.
    MultLearner,
    /// Addition with different denominators.
    AddLearner,
    /// An input where the target function is undefined.
    Predicate,
    /// An input where the target function is defined.
    Line,
    /// A lemma of the given class.
    VerbClass(VerbClass),
    Neither,
}

pub fn classify_fraction_example(x: &FractionProblem) -> ExampleTarget {
    match (x.op, x.equal_denominators()) {
        (Operation::Mul, true) => ExampleTarget::MultLearner,
        (Operation::Add, false) => ExampleTarget::AddLearner,
        _ => ExampleTarget::Neither,
    }
}

pub fn classify_function_example(x: i32, target_f: Predicate) -> ExampleTarget {
    if target_f.eval(x) {
        ExampleTarget::Predicate
    } else {
        ExampleTarget::Line
    }
}

pub fn classify_verb_example(lemma: &str, corpus: &VerbCorpus) -> ExampleTarget {
    ExampleTarget::VerbClass(corpus.label(lemma))
}

/// Whether an example's tag matches the misconception of `student`:
/// equal-denominator multiplication for mult-learners, different-denominator
/// addition for add-learners, undefined inputs for f-learners, defined
/// inputs for b-learners, the unknown class for verb learners.
pub fn targets_misconception(tag: ExampleTarget, student: &crate::students::StudentTypeSpec) -> bool {
    use crate::students::StudentTypeSpec as S;
    matches!(
        (tag, student),
        (ExampleTarget::MultLearner, S::MultLearner)
            | (ExampleTarget::AddLearner, S::AddLearner)
            | (ExampleTarget::Predicate, S::FLearner { .. })
            | (ExampleTarget::Line, S::BLearner { .. })
    ) || matches!((tag, student), (ExampleTarget::VerbClass(c), S::VerbLearner { unknown }) if c == *unknown)
}

/// Fraction of transcripts whose teacher believed the true type after each
/// checkpoint step. Transcripts without a student model are skipped.
pub fn type_accuracy_over_time(runs: &[Transcript], checkpoints: &[usize]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&c| {
            let flags: Vec<bool> = runs.iter().filter_map(|t| t.type_correct_at(c)).collect();
            if flags.is_empty() {
                f64::NAN
            } else {
                flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
            }
        })
        .collect()
}

/// `|x|` of defined-region picks in selection order.
pub fn magnitude_profile(inputs: &[i32], target_f: Predicate) -> Vec<u32> {
    inputs
        .iter()
        .filter(|&&x| !target_f.eval(x))
        .map(|x| x.unsigned_abs())
        .collect()
}

/// Shape of a magnitude profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    Increasing,
    /// Decreases at least once before it starts increasing, never
    /// decreasing afterwards.
    DecreasingThenIncreasing,
    Other,
}

pub fn profile_shape(profile: &[u32]) -> ProfileShape {
    let diffs: Vec<i64> = profile
        .windows(2)
        .map(|w| i64::from(w[1]) - i64::from(w[0]))
        .collect();
    if diffs.iter().all(|&d| d >= 0) {
        return ProfileShape::Increasing;
    }
    let first_up = diffs.iter().position(|&d| d > 0).unwrap_or(diffs.len());
    let down_first = diffs[..first_up].iter().any(|&d| d < 0);
    let up_after = diffs[first_up..].iter().all(|&d| d >= 0);
    if down_first && up_after {
        ProfileShape::DecreasingThenIncreasing
    } else {
        ProfileShape::Other
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Mean and normal-approximation 95% half-width.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, 1.96 * (var / xs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::Fraction;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[1.0; 41]), 1.0);
        let linear: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        assert!((auc(&linear) - 0.5).abs() < 1e-12);
        assert_eq!(auc(&[0.3]), 0.3);
    }

    #[test]
    fn critical_example_cases() {
        let c = critical_examples(Predicate::Greater(2), Predicate::Greater(4));
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![3, 4]);
        assert!(critical_examples(Predicate::Odd, Predicate::Odd).is_empty());
        let c = critical_examples(Predicate::Even, Predicate::Divisible(4));
        assert_eq!(c.len(), 10);
        assert!(c.iter().all(|x| x.rem_euclid(4) == 2));
    }

    #[test]
    fn timing_and_profile() {
        let crit: BTreeSet<i32> = [3, 4].into();
        assert_eq!(critical_timing(&[3, 10, 4], &crit), vec![1, 0, 1]);
        assert_eq!(all_critical_by(&[3, 10, 4], &crit), Some(3));
        assert_eq!(all_critical_by(&[3, 10], &crit), None);
        assert_eq!(
            magnitude_profile(&[-20, 1, 2], Predicate::Greater(2)),
            vec![20, 1, 2]
        );
        assert!(magnitude_profile(&[5, 6], Predicate::Greater(2)).is_empty());
        assert_eq!(profile_shape(&[20, 1, 2]), ProfileShape::DecreasingThenIncreasing);
        assert_eq!(profile_shape(&[1, 2, 3]), ProfileShape::Increasing);
        assert_eq!(profile_shape(&[1, 3, 2]), ProfileShape::Other);
    }

    #[test]
    fn example_targets() {
        let x = FractionProblem::new(
            Fraction::new(1, 5).unwrap(),
            Fraction::new(2, 5).unwrap(),
            Operation::Mul,
        );
        let tag = classify_fraction_example(&x);
        assert_eq!(tag, ExampleTarget::MultLearner);
        assert!(targets_misconception(tag, &crate::students::StudentTypeSpec::MultLearner));
        assert_eq!(
            classify_function_example(10, Predicate::Greater(2)),
            ExampleTarget::Predicate
        );
        let corpus = crate::concepts::bundled_corpus().0;
        let tag = classify_verb_example("cry", &corpus);
        assert!(targets_misconception(
            tag,
            &crate::students::StudentTypeSpec::VerbLearner {
                unknown: VerbClass::Ied
            }
        ));
    }
}
