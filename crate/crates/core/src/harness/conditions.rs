//! Teaching conditions: which concept is taught to which kind of student.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::function::INTERCEPT_RANGE;
use crate::concepts::{FunctionConcept, Predicate, Task, VerbClass};
use crate::students::StudentTypeSpec;

/// One row of the function-task condition table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionCondition {
    pub target: FunctionConcept,
    pub spurious_f: Predicate,
    pub spurious_b: i32,
    /// Whether the row was used with human participants.
    pub human: bool,
}

impl FunctionCondition {
    pub fn f_learner(&self) -> StudentTypeSpec {
        StudentTypeSpec::FLearner {
            spurious_f: self.spurious_f,
            target_b: self.target.b,
        }
    }

    pub fn b_learner(&self) -> StudentTypeSpec {
        StudentTypeSpec::BLearner {
            target_f: self.target.f,
            spurious_b: self.spurious_b,
        }
    }

    /// Candidate types in teacher order: f-learner, then b-learner.
    pub fn candidates(&self) -> [StudentTypeSpec; 2] {
        [self.f_learner(), self.b_learner()]
    }

    /// Short id such as `greater_2,1,7`.
    pub fn id(&self) -> String {
        format!("{},{},{}", self.target.f, self.target.a, self.target.b)
    }
}

impl fmt::Display for FunctionCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (f-learner {}, b-learner b={})",
            self.target, self.spurious_f, self.spurious_b
        )
    }
}

/// The 24 fixed function conditions.
pub fn condition_table() -> Vec<FunctionCondition> {
    use Predicate::*;
    let rows: [(Predicate, i32, i32, Predicate, i32, bool); 24] = [
        (Even, 1, 7, Divisible(6), 5, false),
        (Even, -5, 5, Divisible(6), 7, true),
        (Even, 3, 8, Divisible(4), 3, true),
        (Greater(2), 1, 7, Greater(4), 3, false),
        (Greater(2), -5, 5, Greater(1), 6, false),
        (Greater(2), 3, 8, Greater(3), 5, true),
        (Prime, 1, 7, Odd, 2, true),
        (Prime, -5, 5, Odd, 9, true),
        (Prime, 3, 8, Odd, 6, false),
        (Divisible(3), 1, 7, Divisible(6), 6, false),
        (Divisible(3), -5, 5, Divisible(6), 9, false),
        (Divisible(3), 3, 8, Divisible(6), 5, false),
        (Divisible(4), 1, 7, Divisible(8), 1, false),
        (Divisible(4), -5, 5, Divisible(8), 8, true),
        (Divisible(4), 3, 8, Divisible(8), 9, true),
        (Positive, 1, 7, Greater(2), 4, false),
        (Positive, -5, 5, Greater(2), 2, false),
        (Positive, 3, 8, Greater(1), 4, false),
        (Odd, 1, 7, Divisible(5), 3, true),
        (Odd, -5, 5, Prime, 2, true),
        (Odd, 3, 8, Divisible(3), 6, true),
        (Greater(7), 1, 7, Greater(9), 2, false),
        (Greater(7), -5, 5, Greater(8), 6, true),
        (Greater(7), 3, 8, Greater(5), 6, false),
    ];
    rows.into_iter()
        .map(|(f, a, b, sf, sb, human)| FunctionCondition {
            target: FunctionConcept::new(f, a, b),
            spurious_f: sf,
            spurious_b: sb,
            human,
        })
        .collect()
}

pub fn human_conditions() -> Vec<FunctionCondition> {
    condition_table().into_iter().filter(|c| c.human).collect()
}

/// Spurious predicates an f-learner may hold for target `f`. Options that
/// fall outside the predicate space (non-positive thresholds other than
/// zero) are dropped.
pub fn spurious_f_options(f: Predicate) -> Vec<Predicate> {
    let divisible = |m: i32| -> Option<Predicate> {
        if m == 2 {
            Some(Predicate::Even)
        } else {
            u8::try_from(m)
                .ok()
                .map(Predicate::Divisible)
                .filter(Predicate::is_valid)
        }
    };
    let greater = |m: i32| -> Option<Predicate> {
        if m == 0 {
            Some(Predicate::Positive)
        } else {
            u8::try_from(m)
                .ok()
                .map(Predicate::Greater)
                .filter(Predicate::is_valid)
        }
    };
    let mut out: Vec<Predicate> = match f {
        Predicate::Prime => vec![Predicate::Odd],
        Predicate::Positive => [-2, -1, 1, 2].into_iter().filter_map(greater).collect(),
        Predicate::Even => vec![Predicate::Divisible(4), Predicate::Divisible(6)],
        Predicate::Odd => vec![
            Predicate::Prime,
            Predicate::Divisible(3),
            Predicate::Divisible(5),
            Predicate::Divisible(7),
        ],
        Predicate::Divisible(n) => {
            let n = i32::from(n);
            let largest_factor = (1..n).rev().find(|d| n % d == 0).unwrap_or(1);
            [2 * n, largest_factor].into_iter().filter_map(divisible).collect()
        }
        Predicate::Greater(n) => {
            let n = i32::from(n);
            (n - 2..=n + 2).filter(|&m| m != n).filter_map(greater).collect()
        }
    };
    out.retain(|&p| p != f);
    out.dedup();
    out
}

/// Draws a fresh condition for `target` with the sampling rules of the
/// fixed table. Returns `None` when no spurious predicate is available.
pub fn sample_condition<R: Rng + ?Sized>(
    target: FunctionConcept,
    rng: &mut R,
) -> Option<FunctionCondition> {
    let spurious_f = *spurious_f_options(target.f).choose(rng)?;
    let bs: Vec<i32> = INTERCEPT_RANGE.filter(|&b| b != target.b).collect();
    let spurious_b = *bs.choose(rng)?;
    Some(FunctionCondition {
        target,
        spurious_f,
        spurious_b,
        human: false,
    })
}

/// Which of a function condition's two students is taught.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionStudent {
    FLearner,
    BLearner,
}

impl FunctionStudent {
    pub const ALL: [FunctionStudent; 2] = [FunctionStudent::FLearner, FunctionStudent::BLearner];

    pub fn index(self) -> usize {
        match self {
            FunctionStudent::FLearner => 0,
            FunctionStudent::BLearner => 1,
        }
    }
}

/// A task-specific teaching condition together with the true student.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Condition {
    Fractions {
        student: StudentTypeSpec,
    },
    Functions {
        row: FunctionCondition,
        student: FunctionStudent,
    },
    Verbs {
        unknown: VerbClass,
    },
}

impl Condition {
    pub fn task(&self) -> Task {
        match self {
            Condition::Fractions { .. } => Task::Fractions,
            Condition::Functions { .. } => Task::Functions,
            Condition::Verbs { .. } => Task::Verbs,
        }
    }

    /// Candidate student types the teacher chooses between.
    pub fn candidates(&self) -> Vec<StudentTypeSpec> {
        match self {
            Condition::Fractions { .. } => {
                vec![StudentTypeSpec::MultLearner, StudentTypeSpec::AddLearner]
            }
            Condition::Functions { row, .. } => row.candidates().to_vec(),
            Condition::Verbs { .. } => VerbClass::ALL
                .iter()
                .map(|&unknown| StudentTypeSpec::VerbLearner { unknown })
                .collect(),
        }
    }

    /// Index of the true student type in [`Condition::candidates`].
    pub fn true_index(&self) -> usize {
        match self {
            Condition::Fractions { student } => match student {
                StudentTypeSpec::AddLearner => 1,
                _ => 0,
            },
            Condition::Functions { student, .. } => student.index(),
            Condition::Verbs { unknown } => unknown.index(),
        }
    }

    pub fn true_type(&self) -> StudentTypeSpec {
        self.candidates().swap_remove(self.true_index())
    }

    /// Label of the concept being taught.
    pub fn concept_id(&self) -> String {
        match self {
            Condition::Fractions { .. } => "fractions".into(),
            Condition::Functions { row, .. } => row.id(),
            Condition::Verbs { .. } => "verbs".into(),
        }
    }

    /// Every condition of a task: both fraction students, all 48 function
    /// (row, student) pairs, or the four verb learners.
    pub fn all_for(task: Task) -> Vec<Condition> {
        match task {
            Task::Fractions => vec![
                Condition::Fractions {
                    student: StudentTypeSpec::MultLearner,
                },
                Condition::Fractions {
                    student: StudentTypeSpec::AddLearner,
                },
            ],
            Task::Functions => condition_table()
                .into_iter()
                .flat_map(|row| {
                    FunctionStudent::ALL
                        .into_iter()
                        .map(move |student| Condition::Functions { row, student })
                })
                .collect(),
            Task::Verbs => VerbClass::ALL
                .into_iter()
                .map(|unknown| Condition::Verbs { unknown })
                .collect(),
        }
    }
}
