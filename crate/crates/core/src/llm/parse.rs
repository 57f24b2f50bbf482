//! Reading examples out of free-form teacher messages.

use std::ops::Range;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::concepts::function::INPUT_RANGE;
use crate::concepts::{Fraction, FractionProblem, FunctionOutput, Operation, VerbClass, VerbCorpus};

/// Outcome of parsing one teacher turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnStatus {
    /// An input with a claimed output.
    Ok,
    /// An input without an output, e.g. a question.
    NoOutput,
    NoInput,
}

/// The first example found in a message.
#[derive(Clone, Debug, PartialEq)]
pub struct Found<I, O> {
    pub input: I,
    /// Parsed claimed output; `None` for questions or unreadable answers.
    pub output: Option<O>,
    /// Byte range of the match in the searched text.
    pub span: Range<usize>,
}

/// Task-specific surface syntax of examples.
pub trait TurnFormat: Send + Sync {
    type Input: Clone + PartialEq + std::fmt::Debug + std::fmt::Display;
    type Output: Clone + PartialEq + std::fmt::Debug + std::fmt::Display;

    /// Earliest valid example or question in `text`.
    fn find(&self, text: &str) -> Option<Found<Self::Input, Self::Output>>;

    /// `x` labelled `y` in the prompt's example syntax.
    fn format_example(&self, x: &Self::Input, y: &Self::Output) -> String;

    /// Reply sent when a turn has an input but no output.
    fn no_output_reply(&self) -> &'static str;
}

/// A parsed turn. `text` is the string the span refers to, which is the
/// normalized message when the strict pass found nothing.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTurn<I, O> {
    pub status: TurnStatus,
    pub found: Option<Found<I, O>>,
    pub text: String,
    pub lenient: bool,
}

/// First match wins. Falls back to a normalized copy of the message
/// (markdown emphasis removed, typographic quotes and dashes folded,
/// whitespace collapsed).
pub fn parse_turn<F: TurnFormat>(fmt: &F, text: &str) -> ParsedTurn<F::Input, F::Output> {
    let (found, text, lenient) = match fmt.find(text) {
        Some(f) => (Some(f), text.to_string(), false),
        None => {
            let norm = normalize(text);
            (fmt.find(&norm), norm, true)
        }
    };
    let status = match &found {
        None => TurnStatus::NoInput,
        Some(f) if f.output.is_some() => TurnStatus::Ok,
        Some(_) => TurnStatus::NoOutput,
    };
    ParsedTurn {
        status,
        found,
        text,
        lenient,
    }
}

pub fn normalize(text: &str) -> String {
    let folded: String = text
        .replace("**", "")
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '`' => '\'',
            '\u{201c}' | '\u{201d}' => '"',
            '\u{2212}' | '\u{2013}' | '\u{2014}' => '-',
            '\u{00d7}' => '*',
            c => c,
        })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// "That's correct. " or "That's incorrect. " followed by the true example
/// and whatever followed the first match in the teacher's text.
pub fn relabel<F: TurnFormat>(
    fmt: &F,
    turn: &ParsedTurn<F::Input, F::Output>,
    truth: &F::Output,
    student_correct: bool,
) -> Option<String> {
    let found = turn.found.as_ref()?;
    let verdict = if student_correct { "correct" } else { "incorrect" };
    Some(format!(
        "That's {verdict}. {}{}",
        fmt.format_example(&found.input, truth),
        &turn.text[found.span.end..]
    ))
}

/// The part of a message after its first example.
pub fn suffix<I, O>(turn: &ParsedTurn<I, O>) -> &str {
    match &turn.found {
        Some(f) => &turn.text[f.span.end..],
        None => &turn.text,
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

fn strip_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FunctionFormat;

impl TurnFormat for FunctionFormat {
    type Input = i32;
    type Output = FunctionOutput;

    fn find(&self, text: &str) -> Option<Found<i32, FunctionOutput>> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = re(
            &RE,
            r"(?i)wug\s*\(\s*([+-]?\s*\d+)\s*\)(?:\s*=\s*(undefined|[+-]?\s*\d+))?",
        );
        re.captures_iter(text).find_map(|c| {
            let x: i32 = strip_ws(&c[1]).parse().ok()?;
            if !INPUT_RANGE.contains(&x) {
                return None;
            }
            let output = c.get(2).and_then(|m| strip_ws(m.as_str()).parse().ok());
            let whole = c.get(0).expect("group 0");
            Some(Found {
                input: x,
                output,
                span: whole.range(),
            })
        })
    }

    fn format_example(&self, x: &i32, y: &FunctionOutput) -> String {
        format!("wug({x})={y}")
    }

    fn no_output_reply(&self) -> &'static str {
        "Sorry, I could not learn from that example. Please format examples as wug(INPUT)=ANSWER."
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FractionFormat;

impl TurnFormat for FractionFormat {
    type Input = FractionProblem;
    type Output = Fraction;

    fn find(&self, text: &str) -> Option<Found<FractionProblem, Fraction>> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = re(
            &RE,
            r"(\d+)\s*/\s*(\d+)\s*([+*×])\s*(\d+)\s*/\s*(\d+)(?:\s*=\s*(\d+)\s*/\s*(\d+))?",
        );
        re.captures_iter(text).find_map(|c| {
            let frac = |n: usize, d: usize| -> Option<Fraction> {
                Fraction::new(c[n].parse().ok()?, c[d].parse().ok()?).ok()
            };
            let op = if &c[3] == "+" {
                Operation::Add
            } else {
                Operation::Mul
            };
            let input = FractionProblem::new(frac(1, 2)?, frac(4, 5)?, op);
            let output = if c.get(6).is_some() { frac(6, 7) } else { None };
            Some(Found {
                input,
                output,
                span: c.get(0).expect("group 0").range(),
            })
        })
    }

    fn format_example(&self, x: &FractionProblem, y: &Fraction) -> String {
        format!("{x}={y}")
    }

    fn no_output_reply(&self) -> &'static str {
        "Sorry, I could not learn from that example. Please format examples as a/b+c/d=e/f or a/b*c/d=e/f."
    }
}

/// Lemmas must appear in the corpus; others (irregular or invented verbs)
/// are ignored.
#[derive(Clone, Debug)]
pub struct VerbFormat {
    pub corpus: Arc<VerbCorpus>,
}

impl VerbFormat {
    pub fn new(corpus: Arc<VerbCorpus>) -> Self {
        Self { corpus }
    }
}

const Q: &str = "['`\u{2018}\u{2019}\"]";

impl TurnFormat for VerbFormat {
    type Input = String;
    type Output = VerbClass;

    fn find(&self, text: &str) -> Option<Found<String, VerbClass>> {
        static LABELED: OnceLock<Regex> = OnceLock::new();
        static QUESTION: OnceLock<Regex> = OnceLock::new();
        let labeled = re(
            &LABELED,
            &format!(r"(?i){Q}([a-z]+){Q}\s+is\s+an?\s+{Q}([^'`\u{{2018}}\u{{2019}}\x22\n]+){Q}(?:\s+verb)?"),
        );
        let question = re(&QUESTION, &format!(r"(?i)verb\s+is\s+{Q}([a-z]+){Q}"));
        let known = |lemma: &str| {
            let l = lemma.to_ascii_lowercase();
            self.corpus.class_of(&l).map(|_| l)
        };
        let a = labeled.captures_iter(text).find_map(|c| {
            let input = known(&c[1])?;
            Some(Found {
                input,
                output: c[2].parse().ok(),
                span: c.get(0).expect("group 0").range(),
            })
        });
        let b = question.captures_iter(text).find_map(|c| {
            Some(Found {
                input: known(&c[1])?,
                output: None,
                span: c.get(0).expect("group 0").range(),
            })
        });
        match (a, b) {
            (Some(a), Some(b)) => Some(if a.span.start <= b.span.start { a } else { b }),
            (a, b) => a.or(b),
        }
    }

    fn format_example(&self, x: &String, y: &VerbClass) -> String {
        format!("'{x}' is a '{}' verb", y.prompt_name())
    }

    fn no_output_reply(&self) -> &'static str {
        "Sorry, I could not learn from that example. Please format examples as 'LEMMA' is a 'CATEGORY' verb."
    }
}

/// Reply to a turn with no usable input.
pub const NO_INPUT_REPLY: &str = "I would like to keep learning. Can I have another example?";

/// Reads a type-query answer. Numbered answers ("1", "(2)", "option 2")
/// select a 1-based candidate; verb answers may name the category. Returns
/// a 0-based index.
pub fn parse_type_answer(text: &str, n_candidates: usize, verbs: bool) -> Option<usize> {
    if verbs {
        if let Some(i) = find_verb_class(text) {
            return Some(i);
        }
    }
    static NUM: OnceLock<Regex> = OnceLock::new();
    let num = re(&NUM, r"\(?\b(\d+)\b\)?");
    num.captures_iter(text).find_map(|c| {
        let k: usize = c[1].parse().ok()?;
        (1..=n_candidates).contains(&k).then(|| k - 1)
    })
}

fn find_verb_class(text: &str) -> Option<usize> {
    let lower = text.to_ascii_lowercase();
    let names: [(&str, VerbClass); 6] = [
        ("+consonant+ed", VerbClass::ConsonantEd),
        ("consonant", VerbClass::ConsonantEd),
        ("y_to_ied", VerbClass::Ied),
        ("+ied", VerbClass::Ied),
        ("+ed", VerbClass::Ed),
        ("+d", VerbClass::D),
    ];
    let mut best: Option<(usize, VerbClass)> = None;
    for (name, class) in names {
        if let Some(pos) = lower.find(name) {
            // "+ed" also occurs inside "+consonant+ed"
            let inside_longer = name == "+ed" && lower[..pos].ends_with("consonant");
            if !inside_longer && best.is_none_or(|(p, _)| pos < p) {
                best = Some((pos, class));
            }
        }
    }
    best.map(|(_, c)| c.index())
}
