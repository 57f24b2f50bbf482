use adapt_core::concepts::{FunctionOutput, Predicate};
use adapt_core::harness::{condition_table, human_conditions, FunctionStudent};
use adapt_core::llm::{ChatRequest, LlmError, Role, TeacherMode};
use adapt_core::session::{
    Session, SessionContext, SessionError, SessionPolicy, SessionSpec, SessionStatus, SessionStore,
    Speaker, WugGuess, SESSION_LIMIT_MS,
};
use adapt_core::teachers::PolicyKind;

fn atom_spec(row: usize, student: FunctionStudent, seed: u64) -> SessionSpec {
    SessionSpec {
        row: condition_table()[row],
        student,
        policy: SessionPolicy::Teacher {
            policy: PolicyKind::Atom,
        },
        seed,
    }
}

fn answer(s: &Session) -> String {
    let x = s.question().unwrap();
    s.spec().target().eval_unchecked(x).to_string()
}

#[test]
fn reply_reports_verdict_and_label() {
    let ctx = SessionContext {
        human_rows_only: false,
        ..SessionContext::default()
    };
    // (greater(2), 1, 7) is not a human row.
    let spec = atom_spec(3, FunctionStudent::BLearner, 0);
    let mut s = Session::create(&ctx, "r", spec, 0, None).unwrap();
    while s.question() != Some(1) {
        let a = answer(&s);
        s.predict(&a, 10, None).unwrap();
    }
    let reply = s.predict("9", 20, None).unwrap();
    assert_eq!(reply.len(), 1);
    assert!(reply[0].text.starts_with("That's incorrect. wug(1)=8."), "{}", reply[0].text);
    let a = answer(&s);
    let reply = s.predict(&a, 30, None).unwrap();
    assert!(reply[0].text.starts_with("That's correct."));
}

#[test]
fn same_seed_same_first_question() {
    let ctx = SessionContext::default();
    for row in human_conditions() {
        let spec = SessionSpec {
            row,
            student: FunctionStudent::FLearner,
            policy: SessionPolicy::Teacher {
                policy: PolicyKind::Random,
            },
            seed: 77,
        };
        let a = Session::create(&ctx, "a", spec, 0, None).unwrap();
        let b = Session::create(&ctx, "b", spec, 5, None).unwrap();
        assert_eq!(a.question(), b.question());
        assert_eq!(a.messages()[0].text, b.messages()[0].text);
    }
}

#[test]
fn predictions_and_guesses_are_validated() {
    let ctx = SessionContext::default();
    let mut s = Session::create(&ctx, "v", atom_spec(5, FunctionStudent::FLearner, 1), 0, None).unwrap();
    let q = s.question();
    assert!(matches!(s.predict("twelve", 1, None), Err(SessionError::UnparseablePrediction(_))));
    assert_eq!(s.question(), q);
    assert!(s.predictions().is_empty());
    assert!(matches!(s.submit_guess(WugGuess::default(), 2), Err(SessionError::EmptyGuess)));
    let f_only = WugGuess {
        f: Some(Predicate::Greater(2)),
        ..WugGuess::default()
    };
    s.submit_guess(f_only, 3).unwrap();
    let b_only = WugGuess {
        b: Some(8),
        ..WugGuess::default()
    };
    s.submit_guess(b_only, 5_003).unwrap();
    assert_eq!(s.guesses().len(), 2);
    assert_eq!(s.guesses()[1].guess, b_only);
}

#[test]
fn timestamps_strictly_increase() {
    let ctx = SessionContext::default();
    let mut s = Session::create(&ctx, "t", atom_spec(1, FunctionStudent::BLearner, 2), 50, None).unwrap();
    for _ in 0..5 {
        let a = answer(&s);
        s.predict(&a, 50, None).unwrap();
        s.submit_guess(
            WugGuess {
                a: Some(-5),
                ..WugGuess::default()
            },
            50,
        )
        .unwrap();
    }
    let ev: Vec<u64> = s.events().iter().map(|e| e.at_ms()).collect();
    assert!(ev.windows(2).all(|w| w[0] < w[1]), "{ev:?}");
    let msg: Vec<u64> = s.messages().iter().map(|m| m.at_ms).collect();
    assert!(msg.windows(2).all(|w| w[0] < w[1]), "{msg:?}");
    let g: Vec<u64> = s.guesses().iter().map(|g| g.at_ms).collect();
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn expiry_rejects_events_and_report_pays_hold() {
    let ctx = SessionContext::default();
    let spec = atom_spec(5, FunctionStudent::BLearner, 3);
    let target = spec.target();
    let mut s = Session::create(&ctx, "e", spec, 1_000, None).unwrap();
    assert!(matches!(s.report(), Err(SessionError::NotFinished)));
    s.submit_guess(
        WugGuess {
            f: Some(target.f),
            a: Some(target.a),
            b: Some(target.b),
        },
        1_000,
    )
    .unwrap();
    let a = answer(&s);
    s.predict(&a, 2_000, None).unwrap();
    assert_eq!(s.remaining_ms(2_000), SESSION_LIMIT_MS - 1_000);
    let end = 1_000 + SESSION_LIMIT_MS;
    assert!(matches!(s.predict("1", end, None), Err(SessionError::Expired)));
    assert_eq!(s.status(), SessionStatus::Expired);
    assert!(matches!(s.predict("1", end + 1, None), Err(SessionError::Expired)));
    assert!(matches!(
        s.submit_guess(WugGuess { a: Some(1), ..WugGuess::default() }, end + 2),
        Err(SessionError::Expired)
    ));
    assert_eq!(s.remaining_ms(end), 0);
    let r = s.report().unwrap();
    assert!((r.bonus.guess_hold - 3.0).abs() < 1e-9, "{:?}", r.bonus);
    assert_eq!(r.bonus.prediction, 1.0);
    assert_eq!(r.final_correctness, 2.0);
}

#[test]
fn finished_session_replays_from_store() {
    let ctx = SessionContext::default();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let mut s = Session::create(&ctx, "p1", atom_spec(6, FunctionStudent::FLearner, 9), 0, None).unwrap();
    let mut written = 0;
    for k in 0..12u64 {
        let text = if k % 3 == 0 { "undefined".to_string() } else { answer(&s) };
        s.predict(&text, 1_000 * k, None).unwrap();
        if k == 4 {
            s.submit_guess(
                WugGuess {
                    f: Some(Predicate::Odd),
                    b: Some(2),
                    ..WugGuess::default()
                },
                4_500,
            )
            .unwrap();
        }
        store.append(s.id(), &s.events()[written..]).unwrap();
        written = s.events().len();
    }
    s.finish(20_000).unwrap();
    store.append(s.id(), &s.events()[written..]).unwrap();
    let events = store.load("p1").unwrap();
    let r = Session::replay(&ctx, &events).unwrap();
    assert_eq!(r.view(30_000), s.view(30_000));
    assert_eq!(r.report().unwrap(), s.report().unwrap());
    assert_eq!(store.index().unwrap()[0].id, "p1");
    assert!(matches!(s.finish(21_000), Err(SessionError::NotActive(SessionStatus::Completed))));
}

/// A model that asks about fixed inputs and claims wrong labels.
fn scripted_model(req: &ChatRequest) -> Result<String, LlmError> {
    let k = req.messages.iter().filter(|m| m.role == Role::Assistant).count();
    Ok(match k {
        0 => "Hello! Let's get started.".to_string(),
        1 => "What is wug(1)?".to_string(),
        n => format!("That's wrong. wug({})=0. What is wug({})?", 3 - n as i32, 2 - n as i32),
    })
}

#[test]
fn llm_session_hides_canned_turns_and_replays() {
    let ctx = SessionContext::default();
    let spec = SessionSpec {
        row: condition_table()[5],
        student: FunctionStudent::FLearner,
        policy: SessionPolicy::Llm {
            mode: TeacherMode::Combined,
        },
        seed: 0,
    };
    assert!(matches!(
        Session::create(&ctx, "x", spec, 0, None),
        Err(SessionError::ModelUnavailable)
    ));
    let mut s = Session::create(&ctx, "l1", spec, 100, Some(&scripted_model)).unwrap();
    let shown: Vec<&str> = s.messages().iter().map(|m| m.text.as_str()).collect();
    assert_eq!(shown, ["Hello! Let's get started.", "What is wug(1)?"]);
    assert_eq!(s.question(), Some(1));
    // target (greater(2), 3, 8): wug(1) = 11
    let reply = s.predict("11", 200, Some(&scripted_model)).unwrap();
    assert_eq!(reply.len(), 1);
    assert_eq!(reply[0].text, "That's correct. wug(1)=11. What is wug(0)?");
    let reply = s.predict("undefined", 300, Some(&scripted_model)).unwrap();
    assert_eq!(reply[0].text, "That's incorrect. wug(0)=8. What is wug(-1)?");
    assert!(s.believed_type().is_some());
    assert!(s
        .messages()
        .iter()
        .all(|m| m.from == Speaker::Participant || !m.text.contains("keep learning")));
    assert!(s.dialogue().unwrap().turns().iter().any(|t| t.canned));
    s.submit_guess(
        WugGuess {
            a: Some(3),
            ..WugGuess::default()
        },
        400,
    )
    .unwrap();
    let r = Session::replay(&ctx, s.events()).unwrap();
    assert_eq!(r.view(500), s.view(500));
    assert_eq!(r.dialogue().unwrap().turns(), s.dialogue().unwrap().turns());
    assert_eq!(r.predictions()[1].label, FunctionOutput::Value(8));
}

#[test]
fn replay_rejects_tampered_logs() {
    let ctx = SessionContext::default();
    let mut s = Session::create(&ctx, "z", atom_spec(5, FunctionStudent::FLearner, 1), 0, None).unwrap();
    let a = answer(&s);
    s.predict(&a, 10, None).unwrap();
    let mut ev = s.events().to_vec();
    ev.swap(0, 1);
    assert!(Session::replay(&ctx, &ev).is_err());
    let mut ev = s.events().to_vec();
    ev.push(ev[1].clone());
    assert!(Session::replay(&ctx, &ev).is_err());
}
