//! Seeded teaching episodes, learning curves and analysis.

pub mod conditions;
pub mod config;
pub mod grid;
pub mod metrics;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{
    bundled_corpus, enumerate_problems, ConceptError, FractionProblem, FractionProgram,
    FractionRange, FunctionConcept, Task, VerbCorpus, Vocabulary,
};
use crate::students::{
    build_program_prior, build_verb_prior, fit_verb_model, Learner, PriorWeighting, Program,
    ProgramBelief, SimulatedStudent, StudentError, StudentTypeSpec, TargetVerbConcept, VerbBelief,
    VerbTarget, FRACTION_NOISE, FRACTION_PRIOR_C, FUNCTION_NOISE, FUNCTION_PRIOR_C,
};
use crate::teachers::{PolicyKind, PoolPolicy, Teacher, TeacherError, DEFAULT_VERB_SAMPLE};

pub use conditions::{
    condition_table, human_conditions, sample_condition, spurious_f_options, Condition,
    FunctionCondition, FunctionStudent,
};
pub use metrics::{auc, critical_examples, critical_timing, magnitude_profile};

pub const PROGRAM_HORIZON: usize = 40;
pub const VERB_HORIZON: usize = 50;
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Student(#[from] StudentError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error("config: {0}")]
    Config(String),
    #[error("replay: {0}")]
    Replay(String),
}

/// Everything that determines one simulated episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub condition: Condition,
    pub policy: PolicyKind,
    pub seed: u64,
    pub horizon: usize,
    /// Label noise of the student and of the teacher's student models.
    pub noise: f64,
    /// Prior constant for program tasks; unused for verbs.
    pub prior_c: f64,
    pub weighting: PriorWeighting,
    pub fraction_range: FractionRange,
    /// Candidates scored per step for verbs.
    pub verb_sample: usize,
}

impl ExperimentConfig {
    /// Task defaults for horizon, noise and prior constant.
    pub fn new(condition: Condition, policy: PolicyKind, seed: u64) -> Self {
        let (horizon, noise, prior_c) = match condition.task() {
            Task::Fractions => (PROGRAM_HORIZON, FRACTION_NOISE, FRACTION_PRIOR_C),
            Task::Functions => (PROGRAM_HORIZON, FUNCTION_NOISE, FUNCTION_PRIOR_C),
            Task::Verbs => (VERB_HORIZON, 0.0, 0.0),
        };
        Self {
            condition,
            policy,
            seed,
            horizon,
            noise,
            prior_c,
            weighting: PriorWeighting::default(),
            fraction_range: FractionRange::default(),
            verb_sample: DEFAULT_VERB_SAMPLE,
        }
    }

    pub fn task(&self) -> Task {
        self.condition.task()
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_weighting(mut self, weighting: PriorWeighting) -> Self {
        self.weighting = weighting;
        self
    }
}

/// Shared, lazily built data for running many episodes.
pub struct Assets {
    fraction_range: FractionRange,
    fraction_space: Arc<[FractionProgram]>,
    fraction_pool: OnceLock<Arc<[FractionProblem]>>,
    function_space: Arc<[FunctionConcept]>,
    function_pool: Arc<[i32]>,
    verb_source: Option<(Arc<VerbCorpus>, Arc<Vocabulary>)>,
    verbs: OnceLock<VerbAssets>,
}

pub struct VerbAssets {
    pub corpus: Arc<VerbCorpus>,
    pub vocab: Arc<Vocabulary>,
    pub fit: VerbBelief,
    pub theta: Arc<TargetVerbConcept>,
    pub pool: Arc<[String]>,
}

impl Default for Assets {
    fn default() -> Self {
        Self::new(FractionRange::default())
    }
}

impl Assets {
    pub fn new(fraction_range: FractionRange) -> Self {
        Self {
            fraction_range,
            fraction_space: FractionProgram::all().into(),
            fraction_pool: OnceLock::new(),
            function_space: FunctionConcept::all().into(),
            function_pool: (-20..=20).collect::<Vec<_>>().into(),
            verb_source: None,
            verbs: OnceLock::new(),
        }
    }

    /// Uses `corpus` instead of the bundled lexicon for verbs.
    pub fn with_verb_corpus(mut self, corpus: VerbCorpus, min_suffix_count: usize) -> Self {
        let vocab = Arc::new(corpus.vocabulary(min_suffix_count));
        self.verb_source = Some((Arc::new(corpus), vocab));
        self
    }

    pub fn fraction_space(&self) -> &Arc<[FractionProgram]> {
        &self.fraction_space
    }

    pub fn function_space(&self) -> &Arc<[FunctionConcept]> {
        &self.function_space
    }

    pub fn function_pool(&self) -> &Arc<[i32]> {
        &self.function_pool
    }

    pub fn fraction_pool(&self, range: FractionRange) -> Arc<[FractionProblem]> {
        if range == self.fraction_range {
            self.fraction_pool
                .get_or_init(|| enumerate_problems(range).into())
                .clone()
        } else {
            enumerate_problems(range).into()
        }
    }

    pub fn verbs(&self) -> &VerbAssets {
        self.verbs.get_or_init(|| {
            let (corpus, vocab) = self.verb_source.clone().unwrap_or_else(bundled_corpus);
            let fit = fit_verb_model(&corpus, vocab.clone());
            let theta = Arc::new(TargetVerbConcept::from_fit(&fit));
            let pool = corpus.lemmas().into();
            VerbAssets {
                corpus,
                vocab,
                fit,
                theta,
                pool,
            }
        })
    }

    pub fn verb_target(&self) -> VerbTarget {
        let v = self.verbs();
        VerbTarget {
            theta: v.theta.clone(),
            corpus: v.corpus.clone(),
        }
    }
}

/// One teaching step as logged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub input: String,
    pub guess: String,
    pub label: String,
    pub correct: bool,
    /// Student's target score after the update.
    pub metric: f64,
    /// Candidate index the teacher believes in after this step, if it has
    /// a student model.
    pub believed_type: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: ExperimentConfig,
    pub initial_metric: f64,
    /// Teacher belief before any observation.
    pub initial_believed_type: Option<usize>,
    pub steps: Vec<StepRecord>,
}

impl Transcript {
    pub fn inputs(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.input.as_str())
    }

    /// Function-task inputs as integers.
    pub fn function_inputs(&self) -> Result<Vec<i32>, HarnessError> {
        self.steps
            .iter()
            .map(|s| {
                s.input
                    .parse()
                    .map_err(|_| HarnessError::Replay(format!("bad input {}", s.input)))
            })
            .collect()
    }

    pub fn curve(&self) -> LearningCurve {
        let mut values = Vec::with_capacity(self.steps.len() + 1);
        values.push(self.initial_metric);
        values.extend(self.steps.iter().map(|s| s.metric));
        LearningCurve {
            values,
            correct: self.steps.iter().map(|s| s.correct).collect(),
        }
    }

    /// Whether the teacher's believed type matched the truth after `step`
    /// observations (0 = before teaching).
    pub fn type_correct_at(&self, step: usize) -> Option<bool> {
        let truth = self.config.condition.true_index();
        let believed = if step == 0 {
            self.initial_believed_type
        } else {
            self.steps.get(step - 1)?.believed_type
        };
        believed.map(|b| b == truth)
    }
}

/// Per-step metric values including the step-0 prior value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub values: Vec<f64>,
    pub correct: Vec<bool>,
}

impl LearningCurve {
    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn auc(&self) -> f64 {
        metrics::auc(&self.values)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("curve has a step-0 value")
    }
}

/// Teacher models for each candidate type under the episode's prior.
pub fn program_candidates<P: Program>(
    space: &Arc<[P]>,
    specs: &[StudentTypeSpec],
    cfg: &ExperimentConfig,
) -> Result<Vec<(StudentTypeSpec, ProgramBelief<P>)>, StudentError> {
    specs
        .iter()
        .map(|s| {
            build_program_prior(space.clone(), s, cfg.prior_c, cfg.weighting, cfg.noise)
                .map(|b| (s.clone(), b))
        })
        .collect()
}

/// Verb candidates: the full fit with one class reset.
pub fn verb_candidates(
    fit: &VerbBelief,
    specs: &[StudentTypeSpec],
) -> Result<Vec<(StudentTypeSpec, VerbBelief)>, StudentError> {
    specs
        .iter()
        .map(|s| build_verb_prior(Some(fit), s).map(|b| (s.clone(), b)))
        .collect()
}

/// Runs one episode: the teacher picks an input, the student guesses, the
/// teacher reveals the truth, both update, the student's target score is
/// recorded.
pub fn run_episode(cfg: &ExperimentConfig, assets: &Assets) -> Result<Transcript, HarnessError> {
    let specs = cfg.condition.candidates();
    match &cfg.condition {
        Condition::Fractions { .. } => {
            let cands = program_candidates(assets.fraction_space(), &specs, cfg)?;
            let pool = assets.fraction_pool(cfg.fraction_range);
            drive(cfg, cands, FractionProgram::TARGET, pool, PoolPolicy::Full)
        }
        Condition::Functions { row, .. } => {
            for s in &specs {
                s.validate_for(&row.target)?;
            }
            let cands = program_candidates(assets.function_space(), &specs, cfg)?;
            drive(
                cfg,
                cands,
                row.target,
                assets.function_pool().clone(),
                PoolPolicy::Full,
            )
        }
        Condition::Verbs { .. } => {
            let v = assets.verbs();
            let cands = verb_candidates(&v.fit, &specs)?;
            drive(
                cfg,
                cands,
                assets.verb_target(),
                v.pool.clone(),
                PoolPolicy::Sampled(cfg.verb_sample),
            )
        }
    }
}

fn drive<L: Learner>(
    cfg: &ExperimentConfig,
    candidates: Vec<(StudentTypeSpec, L)>,
    target: L::Target,
    pool: Arc<[L::Input]>,
    pool_policy: PoolPolicy,
) -> Result<Transcript, HarnessError> {
    let truth = cfg.condition.true_index();
    let mut student = SimulatedStudent::new(candidates[truth].1.clone(), cfg.seed);
    let mut teacher = Teacher::new(
        cfg.policy,
        target.clone(),
        pool,
        pool_policy,
        candidates,
        Some(truth),
        cfg.seed,
    )?;
    let believed = |t: &Teacher<L>| t.query_student_type_index().ok();
    let initial_metric = student.belief.target_score(&target);
    let initial_believed_type = believed(&teacher);
    let mut steps = Vec::with_capacity(cfg.horizon);
    for step in 1..=cfg.horizon {
        let x = teacher.select()?;
        let guess = student.guess(&x);
        let y = teacher.label(&x);
        student.observe(&x, &y);
        teacher.observe(&x, Some(&guess), &y);
        steps.push(StepRecord {
            step,
            input: x.to_string(),
            guess: guess.to_string(),
            label: y.to_string(),
            correct: guess == y,
            metric: student.belief.target_score(&target),
            believed_type: believed(&teacher),
        });
    }
    Ok(Transcript {
        config: cfg.clone(),
        initial_metric,
        initial_believed_type,
        steps,
    })
}

/// Rebuilds the learning curve of a stored transcript by re-running the
/// student's updates on its inputs. Labels are recomputed and must match
/// the log.
pub fn replay_curve(t: &Transcript, assets: &Assets) -> Result<LearningCurve, HarnessError> {
    let cfg = &t.config;
    let specs = cfg.condition.candidates();
    let truth = cfg.condition.true_index();
    let values = match &cfg.condition {
        Condition::Fractions { .. } => {
            let mut c = program_candidates(assets.fraction_space(), &specs, cfg)?;
            let xs = parse_inputs::<FractionProblem>(t)?;
            replay_values(c.swap_remove(truth).1, &FractionProgram::TARGET, &xs, t)?
        }
        Condition::Functions { row, .. } => {
            let mut c = program_candidates(assets.function_space(), &specs, cfg)?;
            let xs = parse_inputs::<i32>(t)?;
            replay_values(c.swap_remove(truth).1, &row.target, &xs, t)?
        }
        Condition::Verbs { .. } => {
            let mut c = verb_candidates(&assets.verbs().fit, &specs)?;
            let xs: Vec<String> = t.inputs().map(String::from).collect();
            replay_values(c.swap_remove(truth).1, &assets.verb_target(), &xs, t)?
        }
    };
    Ok(LearningCurve {
        values,
        correct: t.steps.iter().map(|s| s.correct).collect(),
    })
}

fn parse_inputs<I: std::str::FromStr>(t: &Transcript) -> Result<Vec<I>, HarnessError> {
    t.inputs()
        .map(|s| {
            s.parse()
                .map_err(|_| HarnessError::Replay(format!("cannot parse input `{s}`")))
        })
        .collect()
}

fn replay_values<L: Learner>(
    mut belief: L,
    target: &L::Target,
    xs: &[L::Input],
    t: &Transcript,
) -> Result<Vec<f64>, HarnessError> {
    let mut values = vec![belief.target_score(target)];
    for (x, rec) in xs.iter().zip(&t.steps) {
        let y = L::label(target, x);
        if y.to_string() != rec.label {
            return Err(HarnessError::Replay(format!(
                "step {}: logged label {} but truth is {y}",
                rec.step, rec.label
            )));
        }
        belief.observe(x, &y);
        values.push(belief.target_score(target));
    }
    Ok(values)
}
