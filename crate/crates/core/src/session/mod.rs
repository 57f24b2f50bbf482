//! Timed human-study sessions on the function task, kept as an append-only
//! event log that replays to the same state.

pub mod scoring;
pub mod store;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{function_inputs, FunctionConcept, FunctionOutput, Predicate};
use crate::harness::{human_conditions, FunctionCondition, FunctionStudent};
use crate::llm::{
    ChatRequest, ChatTransport, Dialogue, FunctionFormat, LlmConfig, LlmError, Next, PromptSet,
    ReplayTransport, Role, StudentAgent, TeacherMode, TurnFormat, TypeTracker,
};
use crate::students::{
    build_program_prior, PriorWeighting, ProgramBelief, StudentError, FUNCTION_PRIOR_C,
    HUMAN_STUDY_NOISE,
};
use crate::teachers::{PolicyKind, PoolPolicy, Teacher, TeacherError};

pub use scoring::{
    compute_bonus, partial_correctness, session_auc, standing_guess, BonusStatement, GuessRecord,
    GuessTrace, WugGuess,
};
pub use store::{IndexEntry, SessionStore};

pub const SESSION_LIMIT_MS: u64 = 600_000;
/// Model calls allowed per participant event before the teacher is left
/// without a question.
pub const MAX_MODEL_CALLS_PER_EVENT: usize = 8;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("condition {0} is not a human-study condition")]
    UnknownCondition(String),
    #[error("session has expired")]
    Expired,
    #[error("session is {0}")]
    NotActive(SessionStatus),
    #[error("cannot read prediction `{0}`")]
    UnparseablePrediction(String),
    #[error("no question is waiting for a prediction")]
    NoQuestion,
    #[error("guess has no components")]
    EmptyGuess,
    #[error("session is still active")]
    NotFinished,
    #[error("policy needs a chat model but none is configured")]
    ModelUnavailable,
    #[error("replay: {0}")]
    Replay(String),
    #[error("store: {0}")]
    Io(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Student(#[from] StudentError),
}

/// Who picks the examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionPolicy {
    Teacher { policy: PolicyKind },
    Llm { mode: TeacherMode },
}

impl fmt::Display for SessionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionPolicy::Teacher { policy } => write!(f, "{policy}"),
            SessionPolicy::Llm { mode } => {
                let m = match mode {
                    TeacherMode::Known => "known",
                    TeacherMode::Unknown => "unknown",
                    TeacherMode::Combined => "combined",
                };
                write!(f, "llm-{m}")
            }
        }
    }
}

impl FromStr for SessionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("llm-") {
            Some(m) => Ok(SessionPolicy::Llm { mode: m.parse()? }),
            None => Ok(SessionPolicy::Teacher { policy: s.parse()? }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub row: FunctionCondition,
    pub student: FunctionStudent,
    pub policy: SessionPolicy,
    pub seed: u64,
}

impl SessionSpec {
    pub fn validate(&self) -> Result<(), SessionError> {
        if human_conditions().contains(&self.row) {
            Ok(())
        } else {
            Err(SessionError::UnknownCondition(self.row.id()))
        }
    }

    /// Uniform draw over human rows and both students.
    pub fn sample(policy: SessionPolicy, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        let row = *human_conditions().choose(&mut rng).expect("human rows");
        let student = *FunctionStudent::ALL.choose(&mut rng).expect("two students");
        Self {
            row,
            student,
            policy,
            seed,
        }
    }

    pub fn target(&self) -> FunctionConcept {
        self.row.target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintComponent {
    F,
    B,
}

/// The note that primes a participant: one claim right, one wrong.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub claimed_f: Predicate,
    pub claimed_b: i32,
    pub wrong: HintComponent,
}

impl Hint {
    pub fn for_condition(row: &FunctionCondition, student: FunctionStudent) -> Self {
        match student {
            FunctionStudent::FLearner => Hint {
                claimed_f: row.spurious_f,
                claimed_b: row.target.b,
                wrong: HintComponent::F,
            },
            FunctionStudent::BLearner => Hint {
                claimed_f: row.target.f,
                claimed_b: row.spurious_b,
                wrong: HintComponent::B,
            },
        }
    }

    pub fn render(&self) -> String {
        format!(
            "Dr. Smith spent a bunch of time studying this machine. She figured out that when wug is defined, it computes a function of the form a*x+b, where a and b are constant numbers, so you only need to figure out what a and b are.

She also left a note with some thoughts:
I'm pretty sure, but not totally confident, that:
1) wug is undefined when inputs are {}
2) When wug is defined, b = {}
--Dr. Smith

Dr. Smith is quite familiar with wug, so her note should give you a good place to start! But keep in mind that it is possible that she is wrong.",
            self.claimed_f.describe(),
            self.claimed_b
        )
    }
}

/// Everything that happened in a session; the log is the source of truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        at_ms: u64,
        id: String,
        spec: SessionSpec,
    },
    /// Raw chat-model output, consumed in order on replay.
    ModelReply { at_ms: u64, text: String },
    Prediction { at_ms: u64, text: String },
    Guess { at_ms: u64, guess: WugGuess },
    Finished { at_ms: u64 },
    Expired { at_ms: u64 },
}

impl SessionEvent {
    pub fn at_ms(&self) -> u64 {
        match self {
            SessionEvent::Created { at_ms, .. }
            | SessionEvent::ModelReply { at_ms, .. }
            | SessionEvent::Prediction { at_ms, .. }
            | SessionEvent::Guess { at_ms, .. }
            | SessionEvent::Finished { at_ms }
            | SessionEvent::Expired { at_ms } => *at_ms,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Expired,
    Completed,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::Active => "active",
            SessionStatus::Expired => "expired",
            SessionStatus::Completed => "completed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Teacher,
    Participant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub at_ms: u64,
    pub from: Speaker,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub at_ms: u64,
    pub input: i32,
    pub guess: FunctionOutput,
    pub label: FunctionOutput,
    pub correct: bool,
}

/// Read-only configuration shared by all sessions.
#[derive(Clone, Debug)]
pub struct SessionContext {
    pub space: Arc<[FunctionConcept]>,
    pub pool: Arc<[i32]>,
    pub noise: f64,
    pub prior_c: f64,
    pub weighting: PriorWeighting,
    pub limit_ms: u64,
    /// Reject rows that are not human-study rows.
    pub human_rows_only: bool,
    pub llm: LlmConfig,
}

impl Default for SessionContext {
    fn default() -> Self {
        // The clock ends a session long before this many examples.
        let llm = LlmConfig::new("gpt-4", 10_000);
        Self {
            space: FunctionConcept::all().into(),
            pool: function_inputs().into(),
            noise: HUMAN_STUDY_NOISE,
            prior_c: FUNCTION_PRIOR_C,
            weighting: PriorWeighting::default(),
            limit_ms: SESSION_LIMIT_MS,
            human_rows_only: true,
            llm,
        }
    }
}

type FnTeacher = Teacher<ProgramBelief<FunctionConcept>>;

#[derive(Clone, Debug)]
enum Engine {
    Policy(Box<FnTeacher>),
    Llm {
        dialogue: Box<Dialogue<FunctionFormat>>,
        tracker: Option<Box<FnTeacher>>,
        shown: usize,
    },
}

/// A human participant: guesses arrive as events, never on demand.
struct Participant;

impl StudentAgent<i32, FunctionOutput> for Participant {
    fn guess(&mut self, _x: &i32) -> Result<FunctionOutput, LlmError> {
        Err(LlmError::Protocol("participant guesses arrive as events".into()))
    }

    fn unasked_guess(&mut self, _x: &i32) -> Result<Option<FunctionOutput>, LlmError> {
        Ok(None)
    }

    fn observe(&mut self, _x: &i32, _y: &FunctionOutput) {}
}

/// Forwards to a transport and keeps the replies for the event log.
struct Capture<'a> {
    inner: &'a dyn ChatTransport,
    replies: Mutex<Vec<String>>,
}

impl ChatTransport for Capture<'_> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let r = self.inner.complete(request)?;
        self.replies.lock().expect("capture lock").push(r.clone());
        Ok(r)
    }
}

/// Snapshot used by the API and to compare replayed sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: SessionStatus,
    pub policy: SessionPolicy,
    pub hint: String,
    pub started_at: u64,
    pub ended_at: Option<u64>,
    pub remaining_ms: u64,
    pub question: Option<i32>,
    pub messages: Vec<Message>,
    pub guesses: Vec<GuessRecord>,
    pub predictions: Vec<PredictionRecord>,
    /// The teacher's current guess at the participant's type, if it keeps
    /// one.
    pub believed_type: Option<usize>,
    pub teacher_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub id: String,
    pub status: SessionStatus,
    pub concept: String,
    pub student: FunctionStudent,
    pub policy: SessionPolicy,
    pub bonus: BonusStatement,
    pub predictions: usize,
    pub correct_predictions: usize,
    pub final_guess: WugGuess,
    pub final_correctness: f64,
    /// Guess metric of this session alone.
    pub guess_auc: f64,
    pub believed_type: Option<usize>,
    pub true_type: usize,
}

#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    spec: SessionSpec,
    hint: Hint,
    limit_ms: u64,
    started_at: u64,
    ended_at: Option<u64>,
    status: SessionStatus,
    messages: Vec<Message>,
    guesses: Vec<GuessRecord>,
    predictions: Vec<PredictionRecord>,
    question: Option<i32>,
    events: Vec<SessionEvent>,
    last_ms: Option<u64>,
    engine: Engine,
}

/// Reads "9", "-3", "undefined" or "wug(1)=9".
pub fn parse_prediction(text: &str) -> Option<FunctionOutput> {
    let t = text.trim();
    if let Some(found) = FunctionFormat.find(t) {
        if found.span.start == 0 && found.span.end == t.len() {
            return found.output;
        }
    }
    t.trim_end_matches('.').parse().ok()
}

fn question_text(x: i32) -> String {
    format!("What is wug({x})?")
}

impl Session {
    /// Starts a session and poses the first question. `transport` is
    /// needed only for chat-model policies.
    pub fn create(
        ctx: &SessionContext,
        id: impl Into<String>,
        spec: SessionSpec,
        now: u64,
        transport: Option<&dyn ChatTransport>,
    ) -> Result<Session, SessionError> {
        if ctx.human_rows_only {
            spec.validate()?;
        }
        let id = id.into();
        let mut s = Session::init(ctx, id.clone(), spec, now)?;
        let at = s.stamp(now);
        s.started_at = at;
        s.events.push(SessionEvent::Created { at_ms: at, id, spec });
        s.live(transport, at, |s, t| s.ask(t, at))?;
        Ok(s)
    }

    fn init(ctx: &SessionContext, id: String, spec: SessionSpec, now: u64) -> Result<Self, SessionError> {
        let truth = spec.student.index();
        let teacher = |policy: PolicyKind| -> Result<FnTeacher, SessionError> {
            let cands = spec
                .row
                .candidates()
                .into_iter()
                .map(|c| {
                    build_program_prior(ctx.space.clone(), &c, ctx.prior_c, ctx.weighting, ctx.noise)
                        .map(|b| (c, b))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Teacher::new(
                policy,
                spec.target(),
                ctx.pool.clone(),
                PoolPolicy::Full,
                cands,
                Some(truth),
                spec.seed,
            )?)
        };
        let engine = match spec.policy {
            SessionPolicy::Teacher { policy } => Engine::Policy(Box::new(teacher(policy)?)),
            SessionPolicy::Llm { mode } => {
                let cond = crate::harness::Condition::Functions {
                    row: spec.row,
                    student: spec.student,
                };
                let prompts = PromptSet::for_condition(&cond)?;
                let dialogue = Dialogue::new(FunctionFormat, prompts, mode, Some(truth), &ctx.llm, None)?;
                let tracker = match mode {
                    TeacherMode::Combined => Some(Box::new(teacher(PolicyKind::Atom)?)),
                    _ => None,
                };
                Engine::Llm {
                    dialogue: Box::new(dialogue),
                    tracker,
                    shown: 0,
                }
            }
        };
        Ok(Session {
            id,
            hint: Hint::for_condition(&spec.row, spec.student),
            spec,
            limit_ms: ctx.limit_ms,
            started_at: now,
            ended_at: None,
            status: SessionStatus::Active,
            messages: Vec::new(),
            guesses: Vec::new(),
            predictions: Vec::new(),
            question: None,
            events: Vec::new(),
            last_ms: None,
            engine,
        })
    }

    /// Rebuilds a session from its log. Model replies are taken from the
    /// log instead of a live model.
    pub fn replay(ctx: &SessionContext, events: &[SessionEvent]) -> Result<Session, SessionError> {
        let Some(SessionEvent::Created { at_ms, id, spec }) = events.first() else {
            return Err(SessionError::Replay("log does not start with a creation".into()));
        };
        let replies = ReplayTransport::new(events.iter().filter_map(|e| match e {
            SessionEvent::ModelReply { text, .. } => Some(text.clone()),
            _ => None,
        }));
        let mut s = Session::init(ctx, id.clone(), *spec, *at_ms)?;
        let t: &dyn ChatTransport = &replies;
        let at = s.stamp(*at_ms);
        s.ask(Some(t), at)?;
        for ev in &events[1..] {
            if let SessionEvent::ModelReply { .. } = ev {
                continue;
            }
            let at = s.stamp(ev.at_ms());
            if at != ev.at_ms() {
                return Err(SessionError::Replay(format!(
                    "event time {} is not after {}",
                    ev.at_ms(),
                    at - 1
                )));
            }
            match ev {
                SessionEvent::Created { .. } => {
                    return Err(SessionError::Replay("second creation".into()));
                }
                SessionEvent::Prediction { text, .. } => {
                    let g = parse_prediction(text)
                        .ok_or_else(|| SessionError::UnparseablePrediction(text.clone()))?;
                    s.apply_prediction(g, Some(t), at)?;
                }
                SessionEvent::Guess { guess, .. } => s.guesses.push(GuessRecord { at_ms: at, guess: *guess }),
                SessionEvent::Finished { .. } => s.end(SessionStatus::Completed, at),
                SessionEvent::Expired { .. } => s.end(SessionStatus::Expired, s.started_at + s.limit_ms),
                SessionEvent::ModelReply { .. } => unreachable!(),
            }
        }
        if replies.remaining() > 0 {
            return Err(SessionError::Replay(format!(
                "{} model replies were not used",
                replies.remaining()
            )));
        }
        s.events = events.to_vec();
        Ok(s)
    }

    /// Strictly increasing server time.
    fn stamp(&mut self, now: u64) -> u64 {
        let t = match self.last_ms {
            Some(last) => now.max(last + 1),
            None => now,
        };
        self.last_ms = Some(t);
        t
    }

    /// Runs `op` against a capturing transport and logs the model replies.
    fn live<R>(
        &mut self,
        transport: Option<&dyn ChatTransport>,
        at: u64,
        op: impl FnOnce(&mut Self, Option<&dyn ChatTransport>) -> Result<R, SessionError>,
    ) -> Result<R, SessionError> {
        let capture = transport.map(|inner| Capture {
            inner,
            replies: Mutex::new(Vec::new()),
        });
        let r = op(self, capture.as_ref().map(|c| c as &dyn ChatTransport));
        if let Some(c) = capture {
            for text in c.replies.into_inner().expect("capture lock") {
                let at = self.stamp(at);
                self.events.push(SessionEvent::ModelReply { at_ms: at, text });
            }
        }
        r
    }

    fn end(&mut self, status: SessionStatus, at: u64) {
        self.status = status;
        self.ended_at = Some(at);
        self.question = None;
    }

    /// Expires the session if its time is up at `now`; returns whether it
    /// did.
    pub fn sweep(&mut self, now: u64) -> bool {
        if self.status == SessionStatus::Active && now >= self.started_at + self.limit_ms {
            let at = self.stamp(now);
            self.events.push(SessionEvent::Expired { at_ms: at });
            self.end(SessionStatus::Expired, self.started_at + self.limit_ms);
            true
        } else {
            false
        }
    }

    fn check_active(&mut self, now: u64) -> Result<(), SessionError> {
        if self.sweep(now) {
            return Err(SessionError::Expired);
        }
        match self.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Expired => Err(SessionError::Expired),
            other => Err(SessionError::NotActive(other)),
        }
    }

    /// Poses the next question, if the teacher has one.
    fn ask(&mut self, transport: Option<&dyn ChatTransport>, at: u64) -> Result<(), SessionError> {
        match &mut self.engine {
            Engine::Policy(t) => {
                if let Ok(x) = t.select() {
                    self.question = Some(x);
                    let m = self.stamp(at);
                    self.messages.push(Message {
                        at_ms: m,
                        from: Speaker::Teacher,
                        text: question_text(x),
                    });
                }
                Ok(())
            }
            Engine::Llm { .. } => self.llm_until_question(transport, at, None),
        }
    }

    /// Calls the model until it asks something, showing its turns.
    fn llm_until_question(
        &mut self,
        transport: Option<&dyn ChatTransport>,
        at: u64,
        mut reply_prefix: Option<String>,
    ) -> Result<(), SessionError> {
        let transport = transport.ok_or(SessionError::ModelUnavailable)?;
        let target = self.spec.target();
        let truth = move |x: &i32| target.eval_unchecked(*x);
        let Engine::Llm {
            dialogue,
            tracker,
            shown,
        } = &mut self.engine
        else {
            unreachable!("llm engine");
        };
        let mut question = None;
        for _ in 0..MAX_MODEL_CALLS_PER_EVENT {
            let t = tracker.as_deref_mut().map(|t| t as &mut dyn TypeTracker<_, _>);
            match dialogue.teacher_turn(transport, &truth, &mut Participant, t, at)? {
                Next::Guess(x) => {
                    question = Some(x);
                    break;
                }
                Next::Teacher => {}
                Next::Done => break,
            }
        }
        let mut texts: Vec<String> = Vec::new();
        for turn in &dialogue.turns()[*shown..] {
            if turn.role == Role::Assistant {
                texts.push(turn.content.clone());
            }
        }
        *shown = dialogue.turns().len();
        self.question = question;
        if let Some(p) = reply_prefix.take() {
            texts.insert(0, p);
        }
        for text in texts {
            let m = self.stamp(at);
            self.messages.push(Message {
                at_ms: m,
                from: Speaker::Teacher,
                text,
            });
        }
        Ok(())
    }

    /// Participant's answer to the current question. Returns the teacher's
    /// reply messages.
    pub fn predict(
        &mut self,
        text: &str,
        now: u64,
        transport: Option<&dyn ChatTransport>,
    ) -> Result<Vec<Message>, SessionError> {
        self.check_active(now)?;
        let guess = parse_prediction(text)
            .ok_or_else(|| SessionError::UnparseablePrediction(text.to_string()))?;
        if self.question.is_none() {
            return Err(SessionError::NoQuestion);
        }
        let at = self.stamp(now);
        self.events.push(SessionEvent::Prediction {
            at_ms: at,
            text: text.to_string(),
        });
        let before = self.messages.len();
        self.live(transport, at, |s, t| s.apply_prediction(guess, t, at))?;
        Ok(self.messages[before..]
            .iter()
            .filter(|m| m.from == Speaker::Teacher)
            .cloned()
            .collect())
    }

    fn apply_prediction(
        &mut self,
        guess: FunctionOutput,
        transport: Option<&dyn ChatTransport>,
        at: u64,
    ) -> Result<(), SessionError> {
        let x = self.question.take().ok_or(SessionError::NoQuestion)?;
        let y = self.spec.target().eval_unchecked(x);
        let correct = guess == y;
        self.messages.push(Message {
            at_ms: at,
            from: Speaker::Participant,
            text: FunctionFormat.format_example(&x, &guess),
        });
        self.predictions.push(PredictionRecord {
            at_ms: at,
            input: x,
            guess,
            label: y,
            correct,
        });
        match &mut self.engine {
            Engine::Policy(t) => {
                t.observe(&x, Some(&guess), &y);
                let verdict = if correct { "correct" } else { "incorrect" };
                let mut reply = format!("That's {verdict}. wug({x})={y}.");
                if let Ok(next) = t.select() {
                    reply.push(' ');
                    reply.push_str(&question_text(next));
                    self.question = Some(next);
                }
                let m = self.stamp(at);
                self.messages.push(Message {
                    at_ms: m,
                    from: Speaker::Teacher,
                    text: reply,
                });
                Ok(())
            }
            Engine::Llm { dialogue, .. } => {
                dialogue.answer(guess, at)?;
                self.llm_until_question(transport, at, None)
            }
        }
    }

    pub fn submit_guess(&mut self, guess: WugGuess, now: u64) -> Result<(), SessionError> {
        self.check_active(now)?;
        if guess.is_empty() {
            return Err(SessionError::EmptyGuess);
        }
        let at = self.stamp(now);
        self.events.push(SessionEvent::Guess { at_ms: at, guess });
        self.guesses.push(GuessRecord { at_ms: at, guess });
        Ok(())
    }

    /// Ends an active session early.
    pub fn finish(&mut self, now: u64) -> Result<(), SessionError> {
        self.check_active(now)?;
        let at = self.stamp(now);
        self.events.push(SessionEvent::Finished { at_ms: at });
        self.end(SessionStatus::Completed, at);
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &SessionSpec {
        &self.spec
    }

    pub fn hint(&self) -> &Hint {
        &self.hint
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn started_at(&self) -> u64 {
        self.started_at
    }

    pub fn question(&self) -> Option<i32> {
        self.question
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn guesses(&self) -> &[GuessRecord] {
        &self.guesses
    }

    pub fn predictions(&self) -> &[PredictionRecord] {
        &self.predictions
    }

    pub fn remaining_ms(&self, now: u64) -> u64 {
        match self.status {
            SessionStatus::Active => (self.started_at + self.limit_ms).saturating_sub(now),
            _ => 0,
        }
    }

    /// Model dialogue of a chat-model session, including hidden turns.
    pub fn dialogue(&self) -> Option<&Dialogue<FunctionFormat>> {
        match &self.engine {
            Engine::Llm { dialogue, .. } => Some(dialogue),
            Engine::Policy(_) => None,
        }
    }

    fn type_tracker(&self) -> Option<&FnTeacher> {
        match &self.engine {
            Engine::Policy(t) => Some(t),
            Engine::Llm { tracker, .. } => tracker.as_deref(),
        }
    }

    pub fn believed_type(&self) -> Option<usize> {
        self.type_tracker().and_then(|t| t.query_student_type_index().ok())
    }

    pub fn guess_trace(&self) -> GuessTrace<'_> {
        GuessTrace {
            started_at: self.started_at,
            target: self.spec.target(),
            guesses: &self.guesses,
        }
    }

    pub fn view(&self, now: u64) -> SessionView {
        SessionView {
            id: self.id.clone(),
            status: self.status,
            policy: self.spec.policy,
            hint: self.hint.render(),
            started_at: self.started_at,
            ended_at: self.ended_at,
            remaining_ms: self.remaining_ms(now),
            question: self.question,
            messages: self.messages.clone(),
            guesses: self.guesses.clone(),
            predictions: self.predictions.clone(),
            believed_type: self.believed_type(),
            teacher_scores: self
                .type_tracker()
                .map(|t| t.candidates().iter().map(|c| c.log_score).collect())
                .unwrap_or_default(),
        }
    }

    pub fn report(&self) -> Result<SessionReport, SessionError> {
        let Some(ended_at) = self.ended_at else {
            return Err(SessionError::NotFinished);
        };
        let correct = self.predictions.iter().filter(|p| p.correct).count();
        let trace = self.guess_trace();
        let final_guess = standing_guess(&self.guesses, ended_at);
        Ok(SessionReport {
            id: self.id.clone(),
            status: self.status,
            concept: self.spec.row.id(),
            student: self.spec.student,
            policy: self.spec.policy,
            bonus: compute_bonus(&trace, ended_at, correct, self.predictions.len()),
            predictions: self.predictions.len(),
            correct_predictions: correct,
            final_correctness: partial_correctness(&final_guess, &self.spec.target()),
            final_guess,
            guess_auc: session_auc(&[trace]),
            believed_type: self.believed_type(),
            true_type: self.spec.student.index(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::condition_table;

    fn spec(student: FunctionStudent, policy: PolicyKind) -> SessionSpec {
        SessionSpec {
            row: condition_table()[5],
            student,
            policy: SessionPolicy::Teacher { policy },
            seed: 4,
        }
    }

    #[test]
    fn hints() {
        let row = condition_table()[3];
        let b = Hint::for_condition(&row, FunctionStudent::BLearner).render();
        assert!(b.contains("1) wug is undefined when inputs are greater than 2\n2) When wug is defined, b = 3\n"));
        let f = Hint::for_condition(&row, FunctionStudent::FLearner).render();
        assert!(f.contains("greater than 4") && f.contains("b = 7"));
    }

    #[test]
    fn prediction_parsing() {
        assert_eq!(parse_prediction(" 9 "), Some(FunctionOutput::Value(9)));
        assert_eq!(parse_prediction("Undefined"), Some(FunctionOutput::Undefined));
        assert_eq!(parse_prediction("wug(1)=-3"), Some(FunctionOutput::Value(-3)));
        assert_eq!(parse_prediction("nine"), None);
        assert_eq!(parse_prediction("wug(1)=9 or 10"), None);
    }

    #[test]
    fn policy_names() {
        for s in ["atom", "random", "llm-combined", "llm-unknown"] {
            let p: SessionPolicy = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn not_human_row() {
        let mut s = spec(FunctionStudent::FLearner, PolicyKind::Atom);
        s.row = condition_table()[0];
        let err = Session::create(&SessionContext::default(), "x", s, 0, None).unwrap_err();
        assert!(matches!(err, SessionError::UnknownCondition(_)));
    }

    #[test]
    fn unanswered_session_replays() {
        let ctx = SessionContext::default();
        let mut s = Session::create(&ctx, "s", spec(FunctionStudent::BLearner, PolicyKind::Random), 100, None).unwrap();
        assert!(s.sweep(100 + SESSION_LIMIT_MS));
        let r = Session::replay(&ctx, s.events()).unwrap();
        assert_eq!(r.view(0), s.view(0));
    }
}
