//! Simulated Bayesian students.
//!
//! Every student type is a prior over a task's concept space. Students
//! update by Bayes' rule on the labels a teacher reveals and answer
//! questions by sampling a concept from their posterior and running it.
//! The same belief types double as a teacher's internal model of a student.

pub mod program;
pub mod verb;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{FunctionConcept, Predicate, VerbClass};

pub use program::{build_program_prior, label_likelihood, Program, ProgramBelief};
pub use verb::{build_verb_prior, fit_verb_model, TargetVerbConcept, VerbBelief, VerbTarget};

/// Prior constant for fraction students.
pub const FRACTION_PRIOR_C: f64 = 1e5;
/// Prior constant for function students.
pub const FUNCTION_PRIOR_C: f64 = 1e4;
/// Label noise for fraction students.
pub const FRACTION_NOISE: f64 = 0.8;
/// Label noise for function students.
pub const FUNCTION_NOISE: f64 = 0.05;
/// Label noise the teacher assumes for human participants.
pub const HUMAN_STUDY_NOISE: f64 = 0.02;
/// Lower bound on a predictive probability inside log scores.
pub const PREDICTIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudentError {
    #[error("student type {0} does not apply to this task")]
    WrongTask(String),
    #[error("invalid student type: {0}")]
    InvalidSpec(String),
    #[error("target concept probabilities must lie strictly inside (0, 1)")]
    DegenerateTarget,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no fitted verb model is available")]
    MissingFit,
    #[error("belief snapshot: {0}")]
    Snapshot(String),
}

/// How prior weight grows with the number of special primitives `n` a
/// concept contains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorWeighting {
    /// `c^n`.
    #[default]
    Exponential,
    /// `1 + c*n`.
    Linear,
}

impl PriorWeighting {
    pub fn weight(self, c: f64, n: u32) -> f64 {
        match self {
            PriorWeighting::Linear => 1.0 + c * f64::from(n),
            PriorWeighting::Exponential => c.powi(n as i32),
        }
    }
}

impl std::str::FromStr for PriorWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "linear" => Ok(PriorWeighting::Linear),
            "exponential" | "power" => Ok(PriorWeighting::Exponential),
            other => Err(format!("unknown prior weighting `{other}`")),
        }
    }
}

/// A named prior construction: the unit over which a teacher infers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudentTypeSpec {
    /// Over-generalizes the addition procedure to multiplication. Special
    /// primitives A1, M4, M6.
    MultLearner,
    /// Over-generalizes the multiplication procedure to addition. Special
    /// primitives A2, A3, M5.
    AddLearner,
    /// Knows the target intercept, holds a spurious predicate.
    FLearner { spurious_f: Predicate, target_b: i32 },
    /// Knows the target predicate, holds a spurious intercept.
    BLearner { target_f: Predicate, spurious_b: i32 },
    /// Knows every verb class except `unknown`.
    VerbLearner { unknown: VerbClass },
}

impl StudentTypeSpec {
    pub fn name(&self) -> String {
        match self {
            StudentTypeSpec::MultLearner => "mult-learner".into(),
            StudentTypeSpec::AddLearner => "add-learner".into(),
            StudentTypeSpec::FLearner { .. } => "f-learner".into(),
            StudentTypeSpec::BLearner { .. } => "b-learner".into(),
            StudentTypeSpec::VerbLearner { unknown } => format!("{}-learner", unknown.label()),
        }
    }

    /// Checks the spec against the function concept it is meant to teach.
    pub fn validate_for(&self, target: &FunctionConcept) -> Result<(), StudentError> {
        match *self {
            StudentTypeSpec::FLearner {
                spurious_f,
                target_b,
            } => {
                if spurious_f == target.f {
                    return Err(StudentError::InvalidSpec(
                        "spurious f equals target f".into(),
                    ));
                }
                if target_b != target.b {
                    return Err(StudentError::InvalidSpec("f-learner must know b".into()));
                }
                Ok(())
            }
            StudentTypeSpec::BLearner {
                target_f,
                spurious_b,
            } => {
                if spurious_b == target.b {
                    return Err(StudentError::InvalidSpec(
                        "spurious b equals target b".into(),
                    ));
                }
                if target_f != target.f {
                    return Err(StudentError::InvalidSpec("b-learner must know f".into()));
                }
                Ok(())
            }
            _ => Err(StudentError::WrongTask(self.name())),
        }
    }
}

impl Display for StudentTypeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StudentTypeSpec::FLearner { spurious_f, .. } => {
                write!(f, "f-learner(spurious f={spurious_f})")
            }
            StudentTypeSpec::BLearner { spurious_b, .. } => {
                write!(f, "b-learner(spurious b={spurious_b})")
            }
            other => f.write_str(&other.name()),
        }
    }
}

/// A belief over concepts that can be taught, queried and scored.
pub trait Learner: Clone + Send + Sync {
    type Input: Clone + Eq + Hash + Debug + Display + Send + Sync;
    type Output: Clone + PartialEq + Debug + Display + Send + Sync;
    /// What the teacher wants the learner to believe.
    type Target: Clone + Send + Sync;

    /// Ground-truth output of the target at `x`.
    fn label(target: &Self::Target, x: &Self::Input) -> Self::Output;

    /// Conditions the belief on a revealed label.
    fn observe(&mut self, x: &Self::Input, y: &Self::Output);

    /// Posterior-predictive probability of answering `y` at `x`, floored.
    fn predictive_prob(&self, x: &Self::Input, y: &Self::Output) -> f64;

    /// Draws an answer from the posterior predictive.
    fn sample_guess(&self, x: &Self::Input, rng: &mut dyn rand::RngCore) -> Self::Output;

    /// Learning-curve metric: P(h*) for programs, log density of the target
    /// parameters for verbs.
    fn target_score(&self, target: &Self::Target) -> f64;

    /// Target score after hypothetically observing each `x` with its true
    /// label.
    fn ot_scores(&self, xs: &[Self::Input], target: &Self::Target) -> Vec<f64>;
}

/// A learner plus the random stream it answers with.
#[derive(Clone, Debug)]
pub struct SimulatedStudent<L> {
    pub belief: L,
    rng: ChaCha8Rng,
}

impl<L: Learner> SimulatedStudent<L> {
    pub fn new(belief: L, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self { belief, rng }
    }

    pub fn guess(&mut self, x: &L::Input) -> L::Output {
        self.belief.sample_guess(x, &mut self.rng)
    }

    pub fn observe(&mut self, x: &L::Input, y: &L::Output) {
        self.belief.observe(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighting_forms() {
        assert_eq!(PriorWeighting::Exponential.weight(1e4, 0), 1.0);
        assert_eq!(PriorWeighting::Exponential.weight(1e4, 2), 1e8);
        assert_eq!(PriorWeighting::Linear.weight(1e4, 0), 1.0);
        assert_eq!(PriorWeighting::Linear.weight(1e4, 2), 20_001.0);
    }

    #[test]
    fn spec_validation() {
        let target = FunctionConcept::new(Predicate::Greater(2), 1, 7);
        let f = StudentTypeSpec::FLearner {
            spurious_f: Predicate::Greater(4),
            target_b: 7,
        };
        assert!(f.validate_for(&target).is_ok());
        let bad = StudentTypeSpec::BLearner {
            target_f: Predicate::Greater(2),
            spurious_b: 7,
        };
        assert!(bad.validate_for(&target).is_err());
        assert!(StudentTypeSpec::MultLearner.validate_for(&target).is_err());
        assert_eq!(
            StudentTypeSpec::VerbLearner {
                unknown: VerbClass::Ied
            }
            .name(),
            "+ied-learner"
        );
    }
}
