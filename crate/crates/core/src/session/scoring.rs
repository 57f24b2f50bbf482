//! Wug guesses, partial correctness, the cross-session guess metric and
//! bonus arithmetic.

use serde::{Deserialize, Serialize};

use crate::concepts::{FunctionConcept, Predicate};

/// Guess-hold credit per fully correct window.
pub const HOLD_RATE: f64 = 0.05;
pub const HOLD_WINDOW_MS: u64 = 10_000;
/// Prediction credit when every prediction is correct.
pub const PREDICTION_BONUS: f64 = 1.00;
/// Recorded on statements, not computed over.
pub const BASE_PAY: f64 = 4.00;

/// A possibly partial guess at `(f, a, b)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WugGuess {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Predicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<i32>,
}

impl WugGuess {
    pub fn is_empty(&self) -> bool {
        self.f.is_none() && self.a.is_none() && self.b.is_none()
    }

    /// Components of `newer` replace ours where present.
    pub fn overlay(self, newer: &WugGuess) -> WugGuess {
        WugGuess {
            f: newer.f.or(self.f),
            a: newer.a.or(self.a),
            b: newer.b.or(self.b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessRecord {
    pub at_ms: u64,
    pub guess: WugGuess,
}

/// `[f correct] + 0.5 [a correct] + 0.5 [b correct]`; missing components
/// count as wrong.
pub fn partial_correctness(g: &WugGuess, target: &FunctionConcept) -> f64 {
    let f = f64::from(u8::from(g.f == Some(target.f)));
    let a = f64::from(u8::from(g.a == Some(target.a)));
    let b = f64::from(u8::from(g.b == Some(target.b)));
    f + 0.5 * a + 0.5 * b
}

/// Latest value of each component submitted at or before `t`.
pub fn standing_guess(log: &[GuessRecord], t: u64) -> WugGuess {
    log.iter()
        .take_while(|r| r.at_ms <= t)
        .fold(WugGuess::default(), |acc, r| acc.overlay(&r.guess))
}

/// One participant's guesses, timed from their session start.
#[derive(Clone, Copy, Debug)]
pub struct GuessTrace<'a> {
    pub started_at: u64,
    pub target: FunctionConcept,
    pub guesses: &'a [GuessRecord],
}

impl GuessTrace<'_> {
    fn correctness_at(&self, elapsed: u64) -> f64 {
        partial_correctness(&standing_guess(self.guesses, self.started_at + elapsed), &self.target)
    }
}

/// Mean standing-guess correctness over every (session, time) pair, where
/// the times are all elapsed times at which any session guessed. 0 when
/// nobody guessed.
pub fn session_auc(traces: &[GuessTrace<'_>]) -> f64 {
    let mut times: Vec<u64> = traces
        .iter()
        .flat_map(|t| t.guesses.iter().map(move |g| g.at_ms.saturating_sub(t.started_at)))
        .collect();
    times.sort_unstable();
    times.dedup();
    if times.is_empty() {
        return 0.0;
    }
    let total: f64 = times
        .iter()
        .flat_map(|&e| traces.iter().map(move |t| t.correctness_at(e)))
        .sum();
    total / (times.len() * traces.len()) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BonusStatement {
    pub guess_hold: f64,
    pub prediction: f64,
    /// Bonus only; base pay is listed separately.
    pub total: f64,
    pub base_pay: f64,
}

/// Guess-hold credit: for each complete 10 s window of `[start, end]`, 0.05
/// times half the partial correctness of the guess standing at the window's
/// end. Prediction credit: 1.00 times the fraction of correct predictions.
pub fn compute_bonus(
    trace: &GuessTrace<'_>,
    ended_at: u64,
    correct_predictions: usize,
    predictions: usize,
) -> BonusStatement {
    let windows = ended_at.saturating_sub(trace.started_at) / HOLD_WINDOW_MS;
    let guess_hold: f64 = (1..=windows)
        .map(|k| HOLD_RATE * trace.correctness_at(k * HOLD_WINDOW_MS) / 2.0)
        .sum();
    let prediction = if predictions == 0 {
        0.0
    } else {
        PREDICTION_BONUS * correct_predictions as f64 / predictions as f64
    };
    BonusStatement {
        guess_hold,
        prediction,
        total: guess_hold + prediction,
        base_pay: BASE_PAY,
    }
}
