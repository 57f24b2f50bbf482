//! Example spaces, concept spaces and exact concept semantics for the three
//! teaching tasks.

pub mod fraction;
pub mod function;
pub mod verbs;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fraction::{
    enumerate_problems, AddRule, Fraction, FractionProblem, FractionProgram, FractionRange,
    MulRule, Operation,
};
pub use function::{function_inputs, FunctionConcept, FunctionOutput, Predicate};
pub use verbs::{
    bundled_corpus, classify_lemma, featurize_lemma, FeatureVector, VerbClass, VerbCorpus,
    VerbExample, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConceptError {
    #[error("input {0} is outside [-20, 20]")]
    InputOutOfRange(i32),
    #[error("fraction {numerator}/{denominator} must have positive parts")]
    NonPositiveFraction { numerator: u32, denominator: u32 },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("cannot parse `{0}`")]
    Parse(String),
    #[error("empty lemma")]
    EmptyLemma,
    #[error("`{lemma}` -> `{past}` matches no regular verb class")]
    NoMatch { lemma: String, past: String },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Fractions,
    Functions,
    Verbs,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Fractions => "fractions",
            Task::Functions => "functions",
            Task::Verbs => "verbs",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fractions" | "fraction" => Ok(Task::Fractions),
            "functions" | "function" => Ok(Task::Functions),
            "verbs" | "verb" => Ok(Task::Verbs),
            _ => Err(ConceptError::Parse(s.to_string())),
        }
    }
}

/// The full example space of a task.
#[derive(Clone, Debug)]
pub enum ExampleSet {
    Fractions(Vec<FractionProblem>),
    Functions(Vec<i32>),
    Verbs(Vec<String>),
}

impl ExampleSet {
    pub fn len(&self) -> usize {
        match self {
            ExampleSet::Fractions(v) => v.len(),
            ExampleSet::Functions(v) => v.len(),
            ExampleSet::Verbs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Enumerates a task's inputs. Verbs come from `corpus`, or the bundled
/// lexicon when none is given.
pub fn enumerate_examples(
    task: Task,
    fraction_range: FractionRange,
    corpus: Option<&VerbCorpus>,
) -> ExampleSet {
    match task {
        Task::Fractions => ExampleSet::Fractions(enumerate_problems(fraction_range)),
        Task::Functions => ExampleSet::Functions(function_inputs()),
        Task::Verbs => match corpus {
            Some(c) => ExampleSet::Verbs(c.lemmas()),
            None => ExampleSet::Verbs(bundled_corpus().0.lemmas()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_space_sizes() {
        let r = FractionRange::default();
        assert_eq!(enumerate_examples(Task::Functions, r, None).len(), 41);
        assert_eq!(enumerate_examples(Task::Fractions, r, None).len(), 20_000);
        let (corpus, _) = bundled_corpus();
        assert_eq!(enumerate_examples(Task::Verbs, r, None).len(), corpus.len());
        let counted = corpus.class_counts().iter().sum::<usize>();
        assert_eq!(corpus.len(), counted);
    }
}
