//! Running sweeps and flattening their results into table rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_episode, Assets, Condition, ExperimentConfig, HarnessError, Transcript};

/// Runs every config, in parallel, returning results in input order.
pub fn run_grid(configs: &[ExperimentConfig], assets: &Assets) -> Vec<Result<Transcript, HarnessError>> {
    configs.par_iter().map(|c| run_episode(c, assets)).collect()
}

/// One row per (condition, student, policy, seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub task: String,
    pub concept: String,
    pub student: String,
    pub policy: String,
    pub seed: u64,
    pub horizon: usize,
    pub auc: f64,
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    pub guess_accuracy: f64,
    /// Empty when the policy has no student model.
    pub type_correct: Option<bool>,
}

impl MetricRow {
    pub fn from_transcript(t: &Transcript) -> Self {
        let curve = t.curve();
        let n = t.steps.len();
        let hits = t.steps.iter().filter(|s| s.correct).count();
        Self {
            task: t.config.task().to_string(),
            concept: t.config.condition.concept_id(),
            student: student_label(&t.config.condition),
            policy: t.config.policy.to_string(),
            seed: t.config.seed,
            horizon: t.config.horizon,
            auc: curve.auc(),
            initial: t.initial_metric,
            final_value: curve.last(),
            guess_accuracy: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
            type_correct: t.type_correct_at(n),
        }
    }
}

/// One row per curve point, for plotting elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub task: String,
    pub concept: String,
    pub student: String,
    pub policy: String,
    pub seed: u64,
    pub step: usize,
    pub value: f64,
}

pub fn curve_rows(t: &Transcript) -> Vec<CurveRow> {
    t.curve()
        .values
        .iter()
        .enumerate()
        .map(|(step, &value)| CurveRow {
            task: t.config.task().to_string(),
            concept: t.config.condition.concept_id(),
            student: student_label(&t.config.condition),
            policy: t.config.policy.to_string(),
            seed: t.config.seed,
            step,
            value,
        })
        .collect()
}

pub fn student_label(c: &Condition) -> String {
    c.true_type().name()
}

/// Mean AUC per policy over rows matching `filter`.
pub fn mean_auc_by_policy<'a>(
    rows: impl IntoIterator<Item = &'a MetricRow>,
) -> std::collections::BTreeMap<String, f64> {
    let mut acc: std::collections::BTreeMap<String, (f64, usize)> = Default::default();
    for r in rows {
        let e = acc.entry(r.policy.clone()).or_default();
        e.0 += r.auc;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}
