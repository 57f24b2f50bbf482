use std::sync::Mutex;

use adapt_core::harness::{condition_table, Assets, Condition, ExperimentConfig, FunctionStudent};
use adapt_core::llm::{
    run_simulated, ChatRequest, LlmConfig, LlmError, PromptSet, PromptVariant, RecordingTransport,
    Role, TeacherMode,
};
use adapt_core::teachers::PolicyKind;

/// Labels inputs 3 and 4 over and over, then answers the type query.
fn critical_teacher(req: &ChatRequest) -> Result<String, LlmError> {
    let last = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
    if last.contains("stop learning") {
        return Ok("I think they were the first kind of student (1).".into());
    }
    let n = req.messages.iter().filter(|m| m.role == Role::Assistant).count();
    let x = 3 + (n % 2);
    Ok(format!("Here is an example: wug({x})=0"))
}

fn f_learner_condition() -> Condition {
    Condition::Functions {
        row: condition_table()[3],
        student: FunctionStudent::FLearner,
    }
}

#[test]
fn combined_mode_switches_to_the_tracked_type() {
    let cond = f_learner_condition();
    let exp = ExperimentConfig::new(cond.clone(), PolicyKind::Atom, 0);
    let mut cfg = LlmConfig::new("scripted", 6);
    cfg.clock = || 7;
    let rec = RecordingTransport::new(critical_teacher);
    let t = run_simulated(&exp, TeacherMode::Combined, &rec, &cfg, &Assets::default()).unwrap();
    assert!(t.completed);
    assert_eq!(t.steps.len(), 6);
    assert_eq!(t.type_answer, Some(0));
    assert!(t.steps.iter().all(|s| s.label == "undefined"));
    // The f-learner thinks 3 and 4 are defined, so its guesses expose it.
    assert_eq!(t.steps.last().unwrap().believed_type, Some(0));

    let prompts = PromptSet::for_condition(&cond).unwrap();
    let systems: Vec<String> = rec
        .exchanges()
        .iter()
        .map(|e| e.request.messages[0].content.clone())
        .collect();
    assert_eq!(systems[0], prompts.unknown);
    assert_eq!(systems.last().unwrap(), &prompts.known[0]);
    let variants: Vec<_> = t.turns.iter().filter_map(|x| x.prompt).collect();
    assert_eq!(variants[0], PromptVariant::Unknown);
    assert!(variants[1..].iter().all(|v| *v == PromptVariant::Known(0)));
    assert!(t.turns.iter().all(|x| x.at_ms == 7));
    // Every labelled example was rewritten to the truth.
    assert!(t
        .turns
        .iter()
        .filter(|x| x.role == Role::Assistant && x.raw.is_some())
        .all(|x| x.content.contains("=undefined")));
}

#[test]
fn known_and_unknown_modes_keep_one_prompt() {
    let cond = f_learner_condition();
    let prompts = PromptSet::for_condition(&cond).unwrap();
    for (mode, want) in [
        (TeacherMode::Known, &prompts.known[0]),
        (TeacherMode::Unknown, &prompts.unknown),
    ] {
        let exp = ExperimentConfig::new(cond.clone(), PolicyKind::Atom, 1);
        let cfg = LlmConfig::new("scripted", 3);
        let rec = RecordingTransport::new(critical_teacher);
        let t = run_simulated(&exp, mode, &rec, &cfg, &Assets::default()).unwrap();
        assert_eq!(t.steps.len(), 3);
        assert!(rec.exchanges().iter().all(|e| &e.request.messages[0].content == want));
        assert!(t.steps.iter().all(|s| s.believed_type.is_none()));
        assert!(t.initial_metric.is_some());
    }
}

#[test]
fn silent_model_hits_the_turn_cap() {
    let exp = ExperimentConfig::new(f_learner_condition(), PolicyKind::Atom, 0);
    let cfg = LlmConfig::new("scripted", 2);
    let calls = Mutex::new(0usize);
    let model = |_: &ChatRequest| -> Result<String, LlmError> {
        *calls.lock().unwrap() += 1;
        Ok("Let me think about that.".into())
    };
    let t = run_simulated(&exp, TeacherMode::Unknown, &model, &cfg, &Assets::default()).unwrap();
    assert!(!t.completed);
    assert!(t.steps.is_empty());
    // Turn cap plus the closing type query.
    assert_eq!(*calls.lock().unwrap(), cfg.max_turns + 1);
    assert_eq!(t.type_answer, None);
    let jsonl = {
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    assert_eq!(jsonl.lines().count(), t.turns.len());
}

#[test]
fn transport_errors_propagate() {
    let exp = ExperimentConfig::new(f_learner_condition(), PolicyKind::Atom, 0);
    let cfg = LlmConfig::new("scripted", 2);
    let model = |_: &ChatRequest| -> Result<String, LlmError> { Err(LlmError::Transport("503".into())) };
    let err = run_simulated(&exp, TeacherMode::Unknown, &model, &cfg, &Assets::default()).unwrap_err();
    assert!(matches!(err, LlmError::Transport(_)));
}
