//! System prompts and type queries for chat-model teachers.

use crate::concepts::{FunctionConcept, VerbClass};
use crate::harness::FunctionCondition;
use crate::students::StudentTypeSpec;

use serde::{Deserialize, Serialize};

use super::LlmError;

/// Which system prompt a teacher receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    /// Told the student type (candidate index).
    Known(usize),
    /// Told the candidate types, asked to infer.
    Unknown,
}

const FRACTION_MULT_LEARNER: &str = "Students who perform addition correctly, but tend to incorrectly multiply only numerators when multiplying fractions, especially when the denominators are equal; if the denominators are not equal, the student sometimes makes common denominators and then multiplies the numerators";
const FRACTION_ADD_LEARNER: &str = "Students who perform multiplication correctly, but tend to incorrectly add both numerators and denominators when adding fractions, especially when denominators are different";
const FRACTION_MULT_LEARNER_ONE: &str = "performs addition correctly, but tends to incorrectly multiply only numerators when multiplying fractions, especially when the denominators are equal; if the denominators are not equal, the student sometimes makes common denominators and then multiplies the numerators";
const FRACTION_ADD_LEARNER_ONE: &str = "performs multiplication correctly, but tends to incorrectly add both numerators and denominators when adding fractions, especially when denominators are different";

const FRACTION_RULES: &str = "Please make sure to follow these instructions:
- You are only allowed to give students example fraction problems, and ask them to guess the outputs. You may not explain any concepts to them directly, or ask any other questions. Anything other than example fraction problems and answers will be ignored by the student.
- The student has not learned how to simplify fractions yet, so please do not simplify the fractions in your examples. Leave the answers in their unsimplified form. The student will also not simplify their answer.
- Please only use fractions with positive numerators and denominators.
- Do not teach arithmetic with mixed numbers or whole numbers.
- Only teach fraction addition and multiplication. Please format input/output examples as: a/b+c/d=e/f for addition or a/b*c/d=e/f for multiplication.
- Keep teaching with fraction problems and outputs until the student says they would like to stop, even if you think you have covered the full input range.

For example, your interactions will look like the following, where capital words indicate placeholders for actual verb lemmas and categories:

Your interactions will look like the following (where letters are placeholders for actual numbers):
System: What is a/b+c/d?
User: a/b+c/d=e/f
System: That's [correct/incorrect]. a/b+c/d=x/y. What is g/h+i/j?

Please start by asking the student for their guess on a fraction example.";

const FRACTION_INTRO: &str = "You are GPT-teacher, an expert teacher. Your goal is to teach a student how to multiply and add fractions as efficiently as possible with helpful examples.

You will be interacting with a student who has spent some time with fraction arithmetic but still has some misconceptions about how it works.";

fn fraction_description(spec: &StudentTypeSpec) -> Result<(&'static str, &'static str), LlmError> {
    match spec {
        StudentTypeSpec::MultLearner => Ok((FRACTION_MULT_LEARNER, FRACTION_MULT_LEARNER_ONE)),
        StudentTypeSpec::AddLearner => Ok((FRACTION_ADD_LEARNER, FRACTION_ADD_LEARNER_ONE)),
        other => Err(LlmError::MissingSlot(format!(
            "{other} is not a fraction student"
        ))),
    }
}

fn known_index<T>(i: usize, cands: &[T]) -> Result<&T, LlmError> {
    cands
        .get(i)
        .ok_or_else(|| LlmError::MissingSlot(format!("no candidate {}", i + 1)))
}

/// `candidates` in teacher order: mult-learner, add-learner.
pub fn fraction_prompt(
    variant: PromptVariant,
    candidates: &[StudentTypeSpec],
) -> Result<String, LlmError> {
    match variant {
        PromptVariant::Known(i) => {
            let (_, one) = fraction_description(known_index(i, candidates)?)?;
            Ok(format!(
                "{FRACTION_INTRO} The student you will be interacting with is a student who {one}.\n\n{FRACTION_RULES}"
            ))
        }
        PromptVariant::Unknown => {
            let list = numbered(candidates, |s| fraction_description(s).map(|d| d.0.to_string()))?;
            Ok(format!(
                "{FRACTION_INTRO} There are {} kinds of students:\n{list}\nYou should try to figure out which kind of student you are interacting with and then teach them accordingly.\n\n{FRACTION_RULES}",
                candidates.len()
            ))
        }
    }
}

pub fn fraction_type_query(candidates: &[StudentTypeSpec]) -> Result<String, LlmError> {
    let list = numbered(candidates, |s| fraction_description(s).map(|d| d.0.to_string()))?;
    Ok(format!(
        "Based on this interaction, which kind of student do you think I was at the start of this teaching session:\n{list}\n\n{}",
        select_line(candidates.len())
    ))
}

fn numbered<T>(
    items: &[T],
    describe: impl Fn(&T) -> Result<String, LlmError>,
) -> Result<String, LlmError> {
    let lines = items
        .iter()
        .enumerate()
        .map(|(i, s)| describe(s).map(|d| format!("{}) {d}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lines.join("\n"))
}

fn select_line(n: usize) -> String {
    let opts: Vec<String> = (1..=n).map(|i| format!("({i})")).collect();
    match opts.len() {
        0 | 1 => format!("Please select {}.", opts.join("")),
        _ => {
            let (last, rest) = opts.split_last().expect("at least two");
            format!("Please select {} or {last}.", rest.join(", "))
        }
    }
}

fn function_student_known(spec: &StudentTypeSpec) -> Result<String, LlmError> {
    match spec {
        StudentTypeSpec::FLearner {
            spurious_f,
            target_b,
        } => Ok(format!(
            "correctly thinks that b={target_b} but incorrectly thinks that wug is undefined when inputs are {}",
            spurious_f.describe()
        )),
        StudentTypeSpec::BLearner {
            target_f,
            spurious_b,
        } => Ok(format!(
            "correctly thinks that wug is undefined when inputs are {} but incorrectly thinks that b={spurious_b}",
            target_f.describe()
        )),
        other => Err(LlmError::MissingSlot(format!(
            "{other} is not a function student"
        ))),
    }
}

fn function_student_kind(spec: &StudentTypeSpec) -> Result<String, LlmError> {
    match spec {
        StudentTypeSpec::FLearner {
            spurious_f,
            target_b,
        } => Ok(format!(
            "Students who correctly think that b={target_b} but incorrectly think wug is undefined when inputs are {}",
            spurious_f.describe()
        )),
        StudentTypeSpec::BLearner {
            target_f,
            spurious_b,
        } => Ok(format!(
            "Students who correctly think that wug is undefined when inputs are {} but incorrectly think that b={spurious_b}",
            target_f.describe()
        )),
        other => Err(LlmError::MissingSlot(format!(
            "{other} is not a function student"
        ))),
    }
}

const FUNCTION_PREDICATES: &str = "The student knows that wug is undefined when the input is one of the following:
- prime
- positive
- even
- odd
- divisible by n for n between 3 and 20 (inclusive)
- greater than n for n between 1 and 20 (inclusive)";

const FUNCTION_EXAMPLE: &str = "- Keep teaching with inputs and outputs until the student says they would like to stop, even if you think you have covered the full input range.

For example, your interactions will look like the following, where capital words indicate placeholders for actual numbers:

Your interactions will look like the following:
System: What is wug(INPUT)?
User: wug(INPUT)=GUESS
System: That's [correct/incorrect]. wug(INPUT)=ANSWER. What is wug(NEW INPUT)?

Please start by asking the student for their guess on an input.";

fn function_header(target: &FunctionConcept) -> String {
    format!(
        "You are GPT-teacher, an expert teacher. Your goal is to teach a student what a mystery machine called wug does. This machine takes in numbers and outputs numbers. However, it only works for some numbers and is undefined for others. Your goal is to teach the student on what inputs wug is undefined, and when it is defined, what it does. You should do so as efficiently as possible with helpful input/output examples, such as edge cases.

The wug machine works as follows: wug(x) is undefined when x is {}. When defined, wug(x) computes {}.

You're going to be interacting with a student who is learning how wug works. The student knows that wug is sometimes undefined. The student also knows that when wug is defined, it computes something of the form a*x+b. In the real wug machine, a={} and b={}. However, the student does not know this. The student only knows that a is a constant number between -5 and 5 (inclusive) and that b is a constant number between 1 and 9 (inclusive).

{FUNCTION_PREDICATES}

Students have varying previous exposure to wug, and so they understand different parts of how wug works.",
        target.f.describe(),
        target.expression(),
        target.a,
        target.b,
    )
}

pub fn function_prompt(
    variant: PromptVariant,
    target: &FunctionConcept,
    candidates: &[StudentTypeSpec],
) -> Result<String, LlmError> {
    let header = function_header(target);
    let rules = "Please make sure to follow these instructions:
- You are only allowed to give students example inputs, and ask them to guess outputs. You may not explain aspects of the concept to them directly, or ask any other questions. Anything other than inputs and outputs will be ignored by the student.
- Please format input/output examples as: wug(INPUT)=ANSWER";
    match variant {
        PromptVariant::Known(i) => {
            let who = function_student_known(known_index(i, candidates)?)?;
            Ok(format!(
                "{header} The student you will be interacting with is a student who {who}.\n\n{rules}\n- wug only works for numbers between -20 to 20 (inclusive), so restrict the inputs you choose to that range. Any inputs outside of that range will be ignored by the student.\n{FUNCTION_EXAMPLE}"
            ))
        }
        PromptVariant::Unknown => {
            let list = numbered(candidates, function_student_kind)?;
            let count = match candidates.len() {
                2 => "two".to_string(),
                n => n.to_string(),
            };
            Ok(format!(
                "{header} There are {count} kinds of students:\n{list}\n\n{rules}\n- wug is only defined for numbers between -20 to 20 (inclusive), so restrict the inputs you choose to that range.\n{FUNCTION_EXAMPLE}"
            ))
        }
    }
}

pub fn function_type_query(candidates: &[StudentTypeSpec]) -> Result<String, LlmError> {
    let list = numbered(candidates, function_student_kind)?;
    Ok(format!(
        "Based on this interaction, which kind of student do you think I was at the start of this teaching session:\n{list}\n\n{}",
        select_line(candidates.len())
    ))
}

/// Prompt for a function condition, candidates in table order.
pub fn function_condition_prompt(
    variant: PromptVariant,
    row: &FunctionCondition,
) -> Result<String, LlmError> {
    function_prompt(variant, &row.target, &row.candidates())
}

const VERB_INTRO: &str = "You are GPT-teacher, an expert teacher. Your goal is to teach a student how to conjugate English past tense verbs as efficiently as possible with helpful examples.

Specifically, your goal is to teach students about four categories of past tense verbs:
- '+ed': add 'ed' to the verb lemma
- '+d': add 'd' to the verb lemma
- 'y_to_ied': if the verb lemma ends in a 'y', replace the 'y' with 'ied'
- '+consonant+ed': if the verb lemma ends in a consonant, double the last consonant and add 'ed'

Different students have different confusion points, but each student has one verb category that they are the least familiar with.";

const VERB_RULES: &str = "Please make sure to follow these instructions:
- You are only allowed to give students example verb lemmas, and ask them to guess verb categories. You may not explain any concepts to them directly, or ask any other questions. Anything other than example verb lemmas and categories will be ignored by the student.
- Please format input/output examples as: 'LEMMA' is a 'CATEGORY' verb
- Keep teaching until the student says they would like to stop, even if you think they understand the verb categories.
- You are only allowed to teach students about verbs in the four categories ('+ed', '+d', 'y_to_ied', and '+consonant+ed'). Please do not give examples from other categories, like irregular verbs.

For example, your interactions will look like the following, where capital words indicate placeholders for actual verb lemmas and categories:

Your interactions will look like the following:
System: What type of verb is 'LEMMA'?
User: 'LEMMA' is a 'CATEGORY' verb
System: That's [correct/incorrect]. 'LEMMA' is a 'CATEGORY' verb. What type of verb is 'LEMMA'?

Please start by asking the student for their guess on a lemma.";

fn verb_unknown_class(spec: &StudentTypeSpec) -> Result<VerbClass, LlmError> {
    match spec {
        StudentTypeSpec::VerbLearner { unknown } => Ok(*unknown),
        other => Err(LlmError::MissingSlot(format!("{other} is not a verb student"))),
    }
}

pub fn verb_prompt(
    variant: PromptVariant,
    candidates: &[StudentTypeSpec],
) -> Result<String, LlmError> {
    match variant {
        PromptVariant::Known(i) => {
            let class = verb_unknown_class(known_index(i, candidates)?)?;
            Ok(format!(
                "{VERB_INTRO} The student you will be interacting with is the least familiar with the '{}' category.\n\n{VERB_RULES}",
                class.prompt_name()
            ))
        }
        PromptVariant::Unknown => Ok(format!(
            "{VERB_INTRO} While teaching the student, you should aim to infer what verb category they are the least familiar with in order to teach and correct their misconceptions most efficiently.\n\n{VERB_RULES}"
        )),
    }
}

pub fn verb_type_query() -> String {
    "Based on this interaction, which verb category do you think I was the least familiar with at the start of this teaching session?".to_string()
}

/// Student message that ends teaching and asks for the type.
pub fn stop_message(type_query: &str) -> String {
    format!("I would like to stop learning now. {type_query}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::Predicate;

    fn row() -> FunctionCondition {
        crate::harness::condition_table()[3]
    }

    #[test]
    fn function_known_slots() {
        let p = function_condition_prompt(PromptVariant::Known(0), &row()).unwrap();
        assert!(p.contains("wug(x) is undefined when x is greater than 2. When defined, wug(x) computes x+7."));
        assert!(p.contains("a student who correctly thinks that b=7 but incorrectly thinks that wug is undefined when inputs are greater than 4."));
        assert!(p.contains("In the real wug machine, a=1 and b=7."));
        assert!(!p.lines().any(|l| l.ends_with(' ')));
    }

    #[test]
    fn function_unknown_and_query() {
        let p = function_condition_prompt(PromptVariant::Unknown, &row()).unwrap();
        assert!(p.contains("There are two kinds of students:\n1) Students who correctly think that b=7 but incorrectly think wug is undefined when inputs are greater than 4\n2) Students who correctly think that wug is undefined when inputs are greater than 2 but incorrectly think that b=3\n"));
        let q = function_type_query(&row().candidates()).unwrap();
        assert!(q.ends_with("\n\nPlease select (1) or (2)."));
    }

    #[test]
    fn fraction_and_verb_variants() {
        let cands = [StudentTypeSpec::MultLearner, StudentTypeSpec::AddLearner];
        let u = fraction_prompt(PromptVariant::Unknown, &cands).unwrap();
        assert!(u.contains("There are 2 kinds of students"));
        let k = fraction_prompt(PromptVariant::Known(1), &cands).unwrap();
        assert!(k.contains("The student you will be interacting with is a student who performs multiplication correctly"));
        assert!(fraction_prompt(PromptVariant::Known(2), &cands).is_err());
        let v: Vec<StudentTypeSpec> = VerbClass::ALL
            .iter()
            .map(|&unknown| StudentTypeSpec::VerbLearner { unknown })
            .collect();
        let k = verb_prompt(PromptVariant::Known(2), &v).unwrap();
        assert!(k.contains("least familiar with the 'y_to_ied' category."));
    }

    #[test]
    fn wrong_task_slot() {
        let spec = StudentTypeSpec::FLearner {
            spurious_f: Predicate::Odd,
            target_b: 1,
        };
        assert!(fraction_prompt(PromptVariant::Known(0), &[spec]).is_err());
    }
}
