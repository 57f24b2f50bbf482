//! Turn-by-turn state of a chat-model teaching dialogue.

use std::collections::HashSet;
use std::hash::Hash;

use super::parse::{self, parse_turn, parse_type_answer, relabel, TurnFormat, TurnStatus, NO_INPUT_REPLY};
use super::prompts::{stop_message, PromptVariant};
use super::transport::{ChatMessage, ChatRequest, ChatTransport, Role};
use super::{
    DialogueStep, LlmConfig, LlmError, LlmTranscript, PromptSet, StudentAgent, TeacherMode,
    TurnRecord, TypeTracker,
};

/// What the dialogue waits for after a teacher turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Next<I> {
    /// The teacher asked about this input; call [`Dialogue::answer`].
    Guess(I),
    /// The student side replied with a canned message; call the teacher
    /// again.
    Teacher,
    /// Horizon or turn cap reached.
    Done,
}

/// Message history and step log of one dialogue.
///
/// A teacher turn with an example has its claimed answer replaced by the
/// truth. The student's guess for that input is the one it gave when asked;
/// if the teacher never asked, [`StudentAgent::unasked_guess`] decides. A
/// question after the example, or a bare question, makes the dialogue wait
/// for a guess, unless a guess is still waiting for its label, in which case
/// the student asks for a formatted example.
#[derive(Clone, Debug)]
pub struct Dialogue<F: TurnFormat> {
    fmt: F,
    prompts: PromptSet,
    mode: TeacherMode,
    fixed: Option<PromptVariant>,
    cfg: LlmConfig,
    history: Vec<ChatMessage>,
    turns: Vec<TurnRecord>,
    steps: Vec<DialogueStep>,
    seen: HashSet<F::Input>,
    asked: Option<F::Input>,
    pending: Option<(F::Input, F::Output)>,
    calls: usize,
    initial_metric: Option<f64>,
    type_reply: Option<String>,
    type_answer: Option<usize>,
}

impl<F> Dialogue<F>
where
    F: TurnFormat + Clone,
    F::Input: Hash + Eq,
{
    /// `true_type` is required in known mode.
    pub fn new(
        fmt: F,
        prompts: PromptSet,
        mode: TeacherMode,
        true_type: Option<usize>,
        cfg: &LlmConfig,
        initial_metric: Option<f64>,
    ) -> Result<Self, LlmError> {
        let fixed = match mode {
            TeacherMode::Known => {
                let i = true_type.ok_or_else(|| LlmError::MissingSlot("true type".into()))?;
                if i >= prompts.known.len() {
                    return Err(LlmError::MissingSlot(format!("no known prompt {i}")));
                }
                Some(PromptVariant::Known(i))
            }
            TeacherMode::Unknown => Some(PromptVariant::Unknown),
            TeacherMode::Combined => None,
        };
        Ok(Self {
            fmt,
            prompts,
            mode,
            fixed,
            cfg: cfg.clone(),
            history: Vec::new(),
            turns: Vec::new(),
            steps: Vec::new(),
            seen: HashSet::new(),
            asked: None,
            pending: None,
            calls: 0,
            initial_metric,
            type_reply: None,
            type_answer: None,
        })
    }

    pub fn turns(&self) -> &[TurnRecord] {
        &self.turns
    }

    pub fn steps(&self) -> &[DialogueStep] {
        &self.steps
    }

    /// Input the teacher asked about and no guess was given for yet.
    pub fn asked(&self) -> Option<&F::Input> {
        self.asked.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.steps.len() >= self.cfg.horizon || self.calls >= self.cfg.max_turns
    }

    /// System prompt in force: fixed by the mode, or in combined mode the
    /// unknown prompt until the first labelled step and then the known
    /// prompt of the tracker's MAP type.
    pub fn prompt_variant(&self, tracker: Option<&dyn TypeTracker<F::Input, F::Output>>) -> PromptVariant {
        self.fixed.unwrap_or_else(|| match (self.steps.len(), tracker) {
            (0, _) | (_, None) => PromptVariant::Unknown,
            (_, Some(t)) => PromptVariant::Known(t.map_index()),
        })
    }

    pub fn request(&self, variant: PromptVariant) -> ChatRequest {
        let system = self.prompts.get(variant).unwrap_or_default().to_string();
        let mut messages = Vec::with_capacity(self.history.len() + 1);
        messages.push(ChatMessage::new(Role::System, system));
        messages.extend_from_slice(&self.history);
        ChatRequest {
            model: self.cfg.model.clone(),
            temperature: self.cfg.temperature,
            messages,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        role: Role,
        content: String,
        status: Option<TurnStatus>,
        raw: Option<String>,
        prompt: Option<PromptVariant>,
        canned: bool,
        now: u64,
    ) {
        self.history.push(ChatMessage::new(role, content.clone()));
        self.turns.push(TurnRecord {
            index: self.turns.len(),
            role,
            content,
            status,
            raw,
            prompt,
            canned,
            steps: self.steps.len(),
            at_ms: now,
        });
    }

    fn canned(&mut self, text: &str, now: u64) {
        self.push(Role::User, text.to_string(), None, None, None, true, now);
    }

    /// Requests and processes one teacher turn.
    pub fn teacher_turn(
        &mut self,
        transport: &dyn ChatTransport,
        truth: &dyn Fn(&F::Input) -> F::Output,
        student: &mut dyn StudentAgent<F::Input, F::Output>,
        mut tracker: Option<&mut dyn TypeTracker<F::Input, F::Output>>,
        now: u64,
    ) -> Result<Next<F::Input>, LlmError> {
        if let Some(x) = &self.asked {
            return Ok(Next::Guess(x.clone()));
        }
        if self.is_done() {
            return Ok(Next::Done);
        }
        let variant = self.prompt_variant(tracker.as_deref());
        let raw = transport.complete(&self.request(variant))?;
        self.calls += 1;
        let turn = parse_turn(&self.fmt, &raw);
        let Some(found) = turn.found.clone() else {
            self.push(Role::Assistant, raw, Some(TurnStatus::NoInput), None, Some(variant), false, now);
            self.canned(NO_INPUT_REPLY, now);
            return Ok(Next::Teacher);
        };
        if turn.status != TurnStatus::Ok {
            self.push(Role::Assistant, raw, Some(TurnStatus::NoOutput), None, Some(variant), false, now);
            if self.pending.is_some() {
                let reply = self.fmt.no_output_reply();
                self.canned(reply, now);
                return Ok(Next::Teacher);
            }
            self.asked = Some(found.input.clone());
            return Ok(Next::Guess(found.input));
        }
        let x = found.input;
        let guess = match self.pending.take() {
            Some((px, g)) if px == x => Some(g),
            _ => student.unasked_guess(&x)?,
        };
        let y = truth(&x);
        let correct = guess.as_ref() == Some(&y);
        student.observe(&x, &y);
        if let Some(t) = tracker.as_deref_mut() {
            if let Some(g) = &guess {
                t.observe(&x, g, &y);
            }
        }
        let repeated = !self.seen.insert(x.clone());
        self.steps.push(DialogueStep {
            step: self.steps.len() + 1,
            input: x.to_string(),
            guess: guess.as_ref().map(ToString::to_string),
            label: y.to_string(),
            correct,
            repeated,
            metric: student.metric(),
            believed_type: tracker.as_deref().map(|t| t.map_index()),
        });
        let text = relabel(&self.fmt, &turn, &y, correct).expect("turn has an example");
        let raw = (text != raw).then_some(raw);
        self.push(Role::Assistant, text, Some(TurnStatus::Ok), raw, Some(variant), false, now);
        if self.steps.len() >= self.cfg.horizon {
            return Ok(Next::Done);
        }
        match self.fmt.find(parse::suffix(&turn)) {
            Some(q) => {
                self.asked = Some(q.input.clone());
                Ok(Next::Guess(q.input))
            }
            None => {
                self.canned(NO_INPUT_REPLY, now);
                Ok(Next::Teacher)
            }
        }
    }

    /// The student's guess for the asked input.
    pub fn answer(&mut self, guess: F::Output, now: u64) -> Result<(), LlmError> {
        let x = self
            .asked
            .take()
            .ok_or_else(|| LlmError::Protocol("no question is waiting for a guess".into()))?;
        let text = self.fmt.format_example(&x, &guess);
        self.push(Role::User, text, None, None, None, false, now);
        self.pending = Some((x, guess));
        Ok(())
    }

    /// Ends teaching and asks which candidate the student was. The reply is
    /// kept even when it cannot be read.
    pub fn query_type(
        &mut self,
        transport: &dyn ChatTransport,
        tracker: Option<&dyn TypeTracker<F::Input, F::Output>>,
        now: u64,
    ) -> Result<usize, LlmError> {
        self.asked = None;
        let msg = stop_message(&self.prompts.type_query);
        self.push(Role::User, msg, None, None, None, false, now);
        let variant = self.prompt_variant(tracker);
        let reply = transport.complete(&self.request(variant))?;
        let ans = parse_type_answer(&reply, self.prompts.known.len(), self.prompts.verbs);
        self.push(Role::Assistant, reply.clone(), None, None, Some(variant), false, now);
        self.type_reply = Some(reply.clone());
        self.type_answer = ans;
        ans.ok_or(LlmError::UnparseableAnswer(reply))
    }

    pub fn transcript(&self) -> LlmTranscript {
        LlmTranscript {
            model: self.cfg.model.clone(),
            mode: self.mode,
            initial_metric: self.initial_metric,
            turns: self.turns.clone(),
            steps: self.steps.clone(),
            completed: self.steps.len() >= self.cfg.horizon,
            type_reply: self.type_reply.clone(),
            type_answer: self.type_answer,
        }
    }
}
