//! Example-selection policies.
//!
//! A [`Teacher`] owns a candidate pool, the set of inputs already shown and
//! one internal student model per candidate student type. Depending on the
//! policy it picks inputs uniformly, from a frozen ranking, greedily under a
//! fixed type, or greedily under the type it currently infers (AToM).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::students::{Learner, StudentTypeSpec};

/// Candidates scored per step when a pool is sub-sampled.
pub const DEFAULT_VERB_SAMPLE: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeacherError {
    #[error("every candidate input has been used")]
    PoolExhausted,
    #[error("policy {0} has no student model")]
    NotSupported(PolicyKind),
    #[error("policy {0} needs the true student type")]
    MissingTrueType(PolicyKind),
    #[error("no candidate student types")]
    NoCandidates,
    #[error("true type index {0} is out of range")]
    BadTrueType(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicyKind {
    Random,
    Ranking { known: bool },
    NonAdaptive { known: bool },
    Atom,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Random,
        PolicyKind::Ranking { known: false },
        PolicyKind::NonAdaptive { known: false },
        PolicyKind::Atom,
        PolicyKind::Ranking { known: true },
        PolicyKind::NonAdaptive { known: true },
    ];

    pub fn needs_true_type(self) -> bool {
        matches!(
            self,
            PolicyKind::Ranking { known: true } | PolicyKind::NonAdaptive { known: true }
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Random => "random",
            PolicyKind::Ranking { known: false } => "ranking",
            PolicyKind::Ranking { known: true } => "ranking-known",
            PolicyKind::NonAdaptive { known: false } => "non-adaptive",
            PolicyKind::NonAdaptive { known: true } => "non-adaptive-known",
            PolicyKind::Atom => "atom",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.to_string() == t)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

impl From<PolicyKind> for String {
    fn from(p: PolicyKind) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which unused inputs are scored at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolPolicy {
    Full,
    /// A fresh uniform subset of this many unused inputs per step.
    Sampled(usize),
}

/// A candidate student type and the teacher's model of such a student.
#[derive(Clone, Debug)]
pub struct Candidate<L> {
    pub spec: StudentTypeSpec,
    pub belief: L,
    /// Sum of log predictive probabilities of the guesses seen so far.
    pub log_score: f64,
}

#[derive(Clone, Debug)]
pub struct Teacher<L: Learner> {
    policy: PolicyKind,
    target: L::Target,
    pool: Arc<[L::Input]>,
    pool_policy: PoolPolicy,
    used: Vec<bool>,
    n_used: usize,
    candidates: Vec<Candidate<L>>,
    fixed: Option<usize>,
    ranking: Option<Vec<usize>>,
    ranking_pos: usize,
    map: usize,
    rng: ChaCha8Rng,
}

impl<L: Learner> Teacher<L> {
    /// `true_type` indexes `candidates` and is required by the `-known`
    /// policies. Unknown fixed-type policies draw their type from `seed`.
    pub fn new(
        policy: PolicyKind,
        target: L::Target,
        pool: Arc<[L::Input]>,
        pool_policy: PoolPolicy,
        candidates: Vec<(StudentTypeSpec, L)>,
        true_type: Option<usize>,
        seed: u64,
    ) -> Result<Self, TeacherError> {
        if candidates.is_empty() && policy != PolicyKind::Random {
            return Err(TeacherError::NoCandidates);
        }
        if let Some(t) = true_type {
            if t >= candidates.len() {
                return Err(TeacherError::BadTrueType(t));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let fixed = match policy {
            PolicyKind::Ranking { known } | PolicyKind::NonAdaptive { known } => Some(if known {
                true_type.ok_or(TeacherError::MissingTrueType(policy))?
            } else {
                rng.gen_range(0..candidates.len())
            }),
            _ => None,
        };
        let n = pool.len();
        Ok(Self {
            policy,
            target,
            pool,
            pool_policy,
            used: vec![false; n],
            n_used: 0,
            candidates: candidates
                .into_iter()
                .map(|(spec, belief)| Candidate {
                    spec,
                    belief,
                    log_score: 0.0,
                })
                .collect(),
            fixed,
            ranking: None,
            ranking_pos: 0,
            map: 0,
            rng,
        })
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    pub fn target(&self) -> &L::Target {
        &self.target
    }

    pub fn pool(&self) -> &[L::Input] {
        &self.pool
    }

    pub fn candidates(&self) -> &[Candidate<L>] {
        &self.candidates
    }

    pub fn is_used(&self, pool_index: usize) -> bool {
        self.used[pool_index]
    }

    pub fn remaining(&self) -> usize {
        self.pool.len() - self.n_used
    }

    /// The fixed type of a Ranking or Non-Adaptive teacher.
    pub fn fixed_type(&self) -> Option<usize> {
        self.fixed
    }

    /// Current MAP candidate index (first on ties).
    pub fn map_index(&self) -> usize {
        self.map
    }

    /// Truthful label of `x`.
    pub fn label(&self, x: &L::Input) -> L::Output {
        L::label(&self.target, x)
    }

    /// Index into the candidate list of the teacher's current belief about
    /// the student type.
    pub fn query_student_type_index(&self) -> Result<usize, TeacherError> {
        match self.policy {
            PolicyKind::Random => Err(TeacherError::NotSupported(self.policy)),
            PolicyKind::Atom => Ok(self.map),
            _ => Ok(self.fixed.expect("fixed-type policy")),
        }
    }

    pub fn query_student_type(&self) -> Result<&StudentTypeSpec, TeacherError> {
        self.query_student_type_index()
            .map(|i| &self.candidates[i].spec)
    }

    /// Chooses the next input and marks it used.
    pub fn select(&mut self) -> Result<L::Input, TeacherError> {
        if self.n_used >= self.pool.len() {
            return Err(TeacherError::PoolExhausted);
        }
        let i = match self.policy {
            PolicyKind::Random => self.select_random(),
            PolicyKind::Ranking { .. } => self.select_ranking(),
            PolicyKind::NonAdaptive { .. } => {
                let k = self.fixed.expect("fixed-type policy");
                self.select_greedy(k)
            }
            PolicyKind::Atom => self.select_greedy(self.map),
        };
        self.used[i] = true;
        self.n_used += 1;
        Ok(self.pool[i].clone())
    }

    fn unused(&self) -> Vec<usize> {
        (0..self.pool.len()).filter(|&i| !self.used[i]).collect()
    }

    fn select_random(&mut self) -> usize {
        let unused = self.unused();
        unused[self.rng.gen_range(0..unused.len())]
    }

    /// Unused pool indices to score this step, ascending.
    fn scoring_set(&mut self) -> Vec<usize> {
        let unused = self.unused();
        match self.pool_policy {
            PoolPolicy::Sampled(n) if n < unused.len() => {
                let mut picked: Vec<usize> = sample(&mut self.rng, unused.len(), n)
                    .into_iter()
                    .map(|j| unused[j])
                    .collect();
                picked.sort_unstable();
                picked
            }
            _ => unused,
        }
    }

    fn select_greedy(&mut self, k: usize) -> usize {
        let idx = self.scoring_set();
        let xs: Vec<L::Input> = idx.iter().map(|&i| self.pool[i].clone()).collect();
        let scores = self.candidates[k].belief.ot_scores(&xs, &self.target);
        idx[argmax_first(&scores)]
    }

    fn select_ranking(&mut self) -> usize {
        if self.ranking.is_none() {
            let k = self.fixed.expect("fixed-type policy");
            let scores = self.candidates[k].belief.ot_scores(&self.pool, &self.target);
            let mut order: Vec<usize> = (0..self.pool.len()).collect();
            // Stable sort keeps pool order among equal scores.
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            self.ranking = Some(order);
        }
        let order = self.ranking.as_ref().expect("ranking computed");
        while self.used[order[self.ranking_pos]] {
            self.ranking_pos += 1;
        }
        order[self.ranking_pos]
    }

    /// Records one interaction. For AToM every candidate first scores the
    /// guess under its pre-update belief, then all beliefs condition on the
    /// true label. A missing guess skips scoring.
    pub fn observe(&mut self, x: &L::Input, guess: Option<&L::Output>, y: &L::Output) {
        match self.policy {
            PolicyKind::Random | PolicyKind::Ranking { .. } => {}
            PolicyKind::NonAdaptive { .. } => {
                let k = self.fixed.expect("fixed-type policy");
                self.candidates[k].belief.observe(x, y);
            }
            PolicyKind::Atom => {
                for c in &mut self.candidates {
                    if let Some(g) = guess {
                        c.log_score += c.belief.predictive_prob(x, g).ln();
                    }
                    c.belief.observe(x, y);
                }
                let scores: Vec<f64> = self.candidates.iter().map(|c| c.log_score).collect();
                self.map = argmax_first(&scores);
            }
        }
    }

    /// Marks an input as used without selecting it, e.g. when an external
    /// driver chose it.
    pub fn mark_used(&mut self, x: &L::Input) {
        if let Some(i) = self.pool.iter().position(|p| p == x) {
            if !self.used[i] {
                self.used[i] = true;
                self.n_used += 1;
            }
        }
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
