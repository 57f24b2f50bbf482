//! Chat-model teachers: prompting, parsing their turns, relabelling them
//! with ground truth and driving a dialogue with a student.

pub mod dialogue;
pub mod parse;
pub mod prompts;
pub mod transport;

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{FractionProgram, Task};
use crate::harness::{
    program_candidates, verb_candidates, Assets, Condition, ExperimentConfig, HarnessError,
};
use crate::students::{Learner, SimulatedStudent, StudentTypeSpec};
use crate::teachers::{PolicyKind, PoolPolicy, Teacher};

pub use dialogue::{Dialogue, Next};
pub use parse::{
    parse_turn, parse_type_answer, relabel, FractionFormat, FunctionFormat, ParsedTurn,
    TurnFormat, TurnStatus, VerbFormat, NO_INPUT_REPLY,
};
pub use prompts::PromptVariant;
pub use transport::{
    parse_dialogue, ChatMessage, ChatRequest, ChatTransport, RecordingTransport, ReplayTransport, Role,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt slot: {0}")]
    MissingSlot(String),
    #[error("replay transport has no more replies")]
    ReplayExhausted,
    #[error("transport: {0}")]
    Transport(String),
    #[error("scripted student expected input {expected} but was asked {got}")]
    ScriptMismatch { expected: String, got: String },
    #[error("scripted student ran out of guesses")]
    ScriptExhausted,
    #[error("cannot read a candidate from `{0}`")]
    UnparseableAnswer(String),
    #[error("dialogue: {0}")]
    Protocol(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// The student side of a dialogue.
pub trait StudentAgent<I, O> {
    fn guess(&mut self, x: &I) -> Result<O, LlmError>;
    /// Guess for an input the teacher labelled without asking first.
    fn unasked_guess(&mut self, x: &I) -> Result<Option<O>, LlmError> {
        self.guess(x).map(Some)
    }
    fn observe(&mut self, x: &I, y: &O);
    /// Learning-curve metric, if the student has one.
    fn metric(&self) -> Option<f64> {
        None
    }
}

/// A simulated student scored against a target.
pub struct ScoredStudent<L: Learner> {
    pub student: SimulatedStudent<L>,
    pub target: L::Target,
}

impl<L: Learner> StudentAgent<L::Input, L::Output> for ScoredStudent<L> {
    fn guess(&mut self, x: &L::Input) -> Result<L::Output, LlmError> {
        Ok(self.student.guess(x))
    }

    fn observe(&mut self, x: &L::Input, y: &L::Output) {
        self.student.observe(x, y);
    }

    fn metric(&self) -> Option<f64> {
        Some(self.student.belief.target_score(&self.target))
    }
}

/// Plays back recorded guesses, checking the inputs they were made for.
pub struct ScriptedStudent<I, O> {
    script: std::collections::VecDeque<(I, O)>,
}

impl<I, O> ScriptedStudent<I, O> {
    pub fn new(script: Vec<(I, O)>) -> Self {
        Self {
            script: script.into(),
        }
    }
}

impl<I: PartialEq + std::fmt::Display, O> StudentAgent<I, O> for ScriptedStudent<I, O> {
    fn guess(&mut self, x: &I) -> Result<O, LlmError> {
        let (want, y) = self.script.pop_front().ok_or(LlmError::ScriptExhausted)?;
        if want != *x {
            return Err(LlmError::ScriptMismatch {
                expected: want.to_string(),
                got: x.to_string(),
            });
        }
        Ok(y)
    }

    fn observe(&mut self, _x: &I, _y: &O) {}
}

/// Tracks a belief over the student's type from its guesses.
pub trait TypeTracker<I, O> {
    fn observe(&mut self, x: &I, guess: &O, y: &O);
    fn map_index(&self) -> usize;
}

impl<L: Learner> TypeTracker<L::Input, L::Output> for Teacher<L> {
    fn observe(&mut self, x: &L::Input, guess: &L::Output, y: &L::Output) {
        Teacher::observe(self, x, Some(guess), y);
    }

    fn map_index(&self) -> usize {
        Teacher::map_index(self)
    }
}

/// System prompts and the closing type query for one condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub unknown: String,
    /// Known-type prompt per candidate.
    pub known: Vec<String>,
    pub type_query: String,
    pub verbs: bool,
}

impl PromptSet {
    pub fn for_condition(condition: &Condition) -> Result<Self, LlmError> {
        let cands = condition.candidates();
        let n = cands.len();
        let build = |v: PromptVariant| -> Result<String, LlmError> {
            match condition {
                Condition::Fractions { .. } => prompts::fraction_prompt(v, &cands),
                Condition::Functions { row, .. } => prompts::function_prompt(v, &row.target, &cands),
                Condition::Verbs { .. } => prompts::verb_prompt(v, &cands),
            }
        };
        let type_query = match condition {
            Condition::Fractions { .. } => prompts::fraction_type_query(&cands)?,
            Condition::Functions { .. } => prompts::function_type_query(&cands)?,
            Condition::Verbs { .. } => prompts::verb_type_query(),
        };
        Ok(Self {
            unknown: build(PromptVariant::Unknown)?,
            known: (0..n)
                .map(|i| build(PromptVariant::Known(i)))
                .collect::<Result<_, _>>()?,
            type_query,
            verbs: condition.task() == Task::Verbs,
        })
    }

    pub fn get(&self, v: PromptVariant) -> Option<&str> {
        match v {
            PromptVariant::Unknown => Some(&self.unknown),
            PromptVariant::Known(i) => self.known.get(i).map(String::as_str),
        }
    }
}

/// How the chat model is prompted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TeacherMode {
    /// Told the true type.
    Known,
    Unknown,
    /// Unknown prompt until the first guess, then the known prompt for the
    /// type a Bayesian tracker currently finds most likely.
    Combined,
}

impl std::str::FromStr for TeacherMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "known" => Ok(TeacherMode::Known),
            "unknown" => Ok(TeacherMode::Unknown),
            "combined" => Ok(TeacherMode::Combined),
            _ => Err(format!("unknown teacher mode `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LlmConfig {
    pub model: String,
    pub temperature: f64,
    /// Labelled examples before the type query.
    pub horizon: usize,
    /// Cap on teacher turns, counting unusable ones.
    pub max_turns: usize,
    pub clock: fn() -> u64,
}

pub fn system_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl LlmConfig {
    pub fn new(model: impl Into<String>, horizon: usize) -> Self {
        Self {
            model: model.into(),
            temperature: 0.0,
            horizon,
            max_turns: 4 * horizon + 8,
            clock: system_clock,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: usize,
    pub role: Role,
    pub content: String,
    /// Parse result for teacher turns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<TurnStatus>,
    /// Raw teacher text when it was rewritten.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptVariant>,
    /// Automatic student reply, not shown to human participants.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub canned: bool,
    /// Labelled steps completed when this turn was sent.
    pub steps: usize,
    pub at_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogueStep {
    pub step: usize,
    pub input: String,
    /// `None` when the teacher labelled an input it had not asked about.
    pub guess: Option<String>,
    pub label: String,
    pub correct: bool,
    /// Input already taught earlier in the dialogue.
    pub repeated: bool,
    pub metric: Option<f64>,
    pub believed_type: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmTranscript {
    pub model: String,
    pub mode: TeacherMode,
    pub initial_metric: Option<f64>,
    pub turns: Vec<TurnRecord>,
    pub steps: Vec<DialogueStep>,
    /// Whether the horizon was reached before the turn cap.
    pub completed: bool,
    pub type_reply: Option<String>,
    /// 0-based candidate index read from the type reply.
    pub type_answer: Option<usize>,
}

impl LlmTranscript {
    /// `role: content` lines, the format [`transport::parse_dialogue`] reads.
    pub fn dialogue(&self) -> String {
        let mut out = String::new();
        for t in &self.turns {
            let role = match t.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            out.push_str(role);
            out.push_str(": ");
            out.push_str(&t.content);
            out.push('\n');
        }
        out
    }

    /// One turn per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), LlmError> {
        for t in &self.turns {
            serde_json::to_writer(&mut w, t).map_err(|e| LlmError::Io(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| LlmError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn metric_curve(&self) -> Option<Vec<f64>> {
        let mut v = vec![self.initial_metric?];
        for s in &self.steps {
            v.push(s.metric?);
        }
        Some(v)
    }

    pub fn inputs(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.input.as_str()).collect()
    }
}

/// Runs a dialogue until `horizon` labelled examples were taught or the
/// turn cap is hit, then asks the type query. An unreadable type reply
/// leaves `type_answer` empty.
#[allow(clippy::too_many_arguments)]
pub fn run_dialogue<F>(
    fmt: &F,
    transport: &dyn ChatTransport,
    prompts: &PromptSet,
    mode: TeacherMode,
    true_type: Option<usize>,
    cfg: &LlmConfig,
    truth: &dyn Fn(&F::Input) -> F::Output,
    student: &mut dyn StudentAgent<F::Input, F::Output>,
    mut tracker: Option<&mut dyn TypeTracker<F::Input, F::Output>>,
) -> Result<LlmTranscript, LlmError>
where
    F: TurnFormat + Clone,
    F::Input: std::hash::Hash + Eq,
{
    if mode == TeacherMode::Combined && tracker.is_none() {
        return Err(LlmError::MissingSlot("combined mode needs a tracker".into()));
    }
    let mut d = Dialogue::new(fmt.clone(), prompts.clone(), mode, true_type, cfg, student.metric())?;
    loop {
        let t = tracker.as_mut().map(|t| &mut **t as &mut dyn TypeTracker<_, _>);
        match d.teacher_turn(transport, truth, student, t, (cfg.clock)())? {
            Next::Guess(x) => {
                let g = student.guess(&x)?;
                d.answer(g, (cfg.clock)())?;
            }
            Next::Teacher => {}
            Next::Done => break,
        }
    }
    match d.query_type(transport, tracker.as_deref().map(|t| t as _), (cfg.clock)()) {
        Ok(_) | Err(LlmError::UnparseableAnswer(_)) | Err(LlmError::ReplayExhausted) => {}
        Err(e) => return Err(e),
    }
    Ok(d.transcript())
}

/// A chat-model teacher against the simulated student of `exp.condition`.
/// `exp` supplies the seed, noise and prior; its policy is ignored. In
/// combined mode an AToM teacher over the same candidates tracks the type.
pub fn run_simulated(
    exp: &ExperimentConfig,
    mode: TeacherMode,
    transport: &dyn ChatTransport,
    cfg: &LlmConfig,
    assets: &Assets,
) -> Result<LlmTranscript, LlmError> {
    let prompts = PromptSet::for_condition(&exp.condition)?;
    let specs = exp.condition.candidates();
    let truth = exp.condition.true_index();
    match &exp.condition {
        Condition::Fractions { .. } => {
            let cands = program_candidates(assets.fraction_space(), &specs, exp)
                .map_err(HarnessError::from)?;
            let pool = assets.fraction_pool(exp.fraction_range);
            simulated(
                &FractionFormat,
                transport,
                &prompts,
                mode,
                cfg,
                exp,
                cands,
                truth,
                FractionProgram::TARGET,
                pool,
            )
        }
        Condition::Functions { row, .. } => {
            let cands = program_candidates(assets.function_space(), &specs, exp)
                .map_err(HarnessError::from)?;
            simulated(
                &FunctionFormat,
                transport,
                &prompts,
                mode,
                cfg,
                exp,
                cands,
                truth,
                row.target,
                assets.function_pool().clone(),
            )
        }
        Condition::Verbs { .. } => {
            let v = assets.verbs();
            let cands = verb_candidates(&v.fit, &specs).map_err(HarnessError::from)?;
            simulated(
                &VerbFormat::new(v.corpus.clone()),
                transport,
                &prompts,
                mode,
                cfg,
                exp,
                cands,
                truth,
                assets.verb_target(),
                v.pool.clone(),
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulated<F, L>(
    fmt: &F,
    transport: &dyn ChatTransport,
    prompts: &PromptSet,
    mode: TeacherMode,
    cfg: &LlmConfig,
    exp: &ExperimentConfig,
    cands: Vec<(StudentTypeSpec, L)>,
    truth: usize,
    target: L::Target,
    pool: std::sync::Arc<[L::Input]>,
) -> Result<LlmTranscript, LlmError>
where
    F: TurnFormat<Input = L::Input, Output = L::Output> + Clone,
    L: Learner,
{
    let mut student = ScoredStudent {
        student: SimulatedStudent::new(cands[truth].1.clone(), exp.seed),
        target: target.clone(),
    };
    let mut tracker = match mode {
        TeacherMode::Combined => Some(
            Teacher::new(
                PolicyKind::Atom,
                target.clone(),
                pool,
                PoolPolicy::Full,
                cands,
                None,
                exp.seed,
            )
            .map_err(HarnessError::from)?,
        ),
        _ => None,
    };
    let label = |x: &L::Input| L::label(&target, x);
    run_dialogue(
        fmt,
        transport,
        prompts,
        mode,
        Some(truth),
        cfg,
        &label,
        &mut student,
        tracker
            .as_mut()
            .map(|t| t as &mut dyn TypeTracker<L::Input, L::Output>),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::FunctionOutput;
    use crate::harness::{condition_table, FunctionStudent};

    const DIALOGUE: &str = include_str!("../../tests/fixtures/function_dialogue.txt");

    fn fixture_condition() -> Condition {
        Condition::Functions {
            row: condition_table()[3],
            student: FunctionStudent::FLearner,
        }
    }

    fn scripted() -> ScriptedStudent<i32, FunctionOutput> {
        let msgs = transport::parse_dialogue(DIALOGUE);
        let guesses = msgs
            .iter()
            .filter(|m| m.role == Role::User)
            .filter_map(|m| FunctionFormat.find(&m.content))
            .filter_map(|f| Some((f.input, f.output?)))
            .collect();
        ScriptedStudent::new(guesses)
    }

    #[test]
    fn replays_fixture_exactly() {
        let cond = fixture_condition();
        let prompts = PromptSet::for_condition(&cond).unwrap();
        let transport = ReplayTransport::from_dialogue(DIALOGUE);
        let mut cfg = LlmConfig::new("replay", 10);
        cfg.clock = || 0;
        let Condition::Functions { row, .. } = cond else {
            unreachable!()
        };
        let truth = |x: &i32| row.target.eval_unchecked(*x);
        let mut student = scripted();
        let t = run_dialogue(
            &FunctionFormat,
            &transport,
            &prompts,
            TeacherMode::Unknown,
            Some(0),
            &cfg,
            &truth,
            &mut student,
            None,
        )
        .unwrap();
        assert_eq!(t.dialogue(), DIALOGUE);
        assert_eq!(t.steps.len(), 10);
        assert_eq!(t.type_answer, Some(0));
        assert!(t.completed);
    }

    #[test]
    fn wrong_labels_are_rewritten() {
        let cond = fixture_condition();
        let prompts = PromptSet::for_condition(&cond).unwrap();
        let transport = ReplayTransport::new([
            "What is wug(3)?",
            "That's correct. wug(3)=10. What is wug(0)?",
            "wug(5)",
            "Here you go: wug(0)=7",
            "1",
        ]);
        let mut cfg = LlmConfig::new("replay", 2);
        cfg.clock = || 0;
        let truth = |x: &i32| row_target().eval_unchecked(*x);
        let mut student = ScriptedStudent::new(vec![
            (3, FunctionOutput::Value(10)),
            (0, FunctionOutput::Value(7)),
        ]);
        let t = run_dialogue(
            &FunctionFormat,
            &transport,
            &prompts,
            TeacherMode::Unknown,
            None,
            &cfg,
            &truth,
            &mut student,
            None,
        )
        .unwrap();
        let texts: Vec<&str> = t.turns.iter().map(|t| t.content.as_str()).collect();
        assert_eq!(texts[2], "That's incorrect. wug(3)=undefined. What is wug(0)?");
        assert_eq!(texts[3], "wug(0)=7");
        assert_eq!(texts[5], FunctionFormat.no_output_reply());
        assert_eq!(texts[6], "That's correct. wug(0)=7");
        assert!(texts[7].starts_with("I would like to stop learning now. "));
        assert_eq!(t.type_answer, Some(0));
    }

    fn row_target() -> crate::concepts::FunctionConcept {
        condition_table()[3].target
    }
}
