//! Naive Bayes verb-class learners with a Dirichlet over classes and Beta
//! priors over per-class suffix occurrence.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{Learner, StudentError, StudentTypeSpec, PREDICTIVE_FLOOR};
use crate::concepts::{featurize_lemma, FeatureVector, VerbClass, VerbCorpus, Vocabulary};

const K: usize = 4;
const THETA_CLIP: f64 = 1e-6;

/// Pseudo-counts of the conjugate naive Bayes model. Feature arrays are
/// class-major: entry `k * V + j` is feature `j` under class `k`.
#[derive(Clone, Debug)]
pub struct VerbBelief {
    vocab: Arc<Vocabulary>,
    dirichlet: [f64; K],
    present: Vec<f64>,
    absent: Vec<f64>,
    /// Per class, `sum_j ln(b / (a + b))`.
    absent_pred: [f64; K],
    floor: f64,
}

impl VerbBelief {
    /// Dirichlet(1,..,1) and Beta(1,1) everywhere.
    pub fn flat(vocab: Arc<Vocabulary>) -> Self {
        let v = vocab.len();
        Self::from_counts(vocab, [1.0; K], vec![1.0; K * v], vec![1.0; K * v])
            .expect("flat counts are valid")
    }

    pub fn from_counts(
        vocab: Arc<Vocabulary>,
        dirichlet: [f64; K],
        present: Vec<f64>,
        absent: Vec<f64>,
    ) -> Result<Self, StudentError> {
        let n = K * vocab.len();
        if present.len() != n || absent.len() != n {
            return Err(StudentError::Dimension(format!(
                "expected {n} Beta pairs, got {}/{}",
                present.len(),
                absent.len()
            )));
        }
        let positive = |x: &f64| *x > 0.0 && x.is_finite();
        if !dirichlet.iter().all(positive)
            || !present.iter().all(positive)
            || !absent.iter().all(positive)
        {
            return Err(StudentError::Dimension("pseudo-counts must be positive".into()));
        }
        let mut b = Self {
            vocab,
            dirichlet,
            present,
            absent,
            absent_pred: [0.0; K],
            floor: PREDICTIVE_FLOOR,
        };
        for k in 0..K {
            b.refresh_class(k);
        }
        Ok(b)
    }

    fn refresh_class(&mut self, k: usize) {
        let v = self.vocab.len();
        let range = k * v..(k + 1) * v;
        self.absent_pred[k] = self.present[range.clone()]
            .iter()
            .zip(&self.absent[range])
            .map(|(a, b)| (b / (a + b)).ln())
            .sum();
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dirichlet(&self) -> &[f64; K] {
        &self.dirichlet
    }

    pub fn present(&self) -> &[f64] {
        &self.present
    }

    pub fn absent(&self) -> &[f64] {
        &self.absent
    }

    /// Number of free parameters: class probabilities plus per-class
    /// feature probabilities.
    pub fn parameter_count(&self) -> usize {
        K + K * self.vocab.len()
    }

    pub fn featurize(&self, lemma: &str) -> FeatureVector {
        featurize_lemma(lemma, &self.vocab).unwrap_or_default()
    }

    pub fn update_features(&mut self, features: &FeatureVector, class: VerbClass) {
        let k = class.index();
        let v = self.vocab.len();
        self.dirichlet[k] += 1.0;
        let base = k * v;
        let mut it = features.indices.iter().peekable();
        for j in 0..v {
            if it.peek().is_some_and(|&&i| i as usize == j) {
                it.next();
                self.present[base + j] += 1.0;
            } else {
                self.absent[base + j] += 1.0;
            }
        }
        self.refresh_class(k);
    }

    pub fn update(&mut self, lemma: &str, class: VerbClass) {
        let f = self.featurize(lemma);
        self.update_features(&f, class);
    }

    /// Collapsed posterior predictive over the four classes.
    pub fn predictive_features(&self, features: &FeatureVector) -> [f64; K] {
        let v = self.vocab.len();
        let total: f64 = self.dirichlet.iter().sum();
        let mut logp = [0.0; K];
        for (k, lp) in logp.iter_mut().enumerate() {
            let mut s = (self.dirichlet[k] / total).ln() + self.absent_pred[k];
            for &j in &features.indices {
                let i = k * v + j as usize;
                let (a, b) = (self.present[i], self.absent[i]);
                s += (a / b).ln();
            }
            *lp = s;
        }
        let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = logp.map(|l| (l - max).exp());
        let z: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= z);
        out
    }

    pub fn predictive(&self, lemma: &str) -> [f64; K] {
        self.predictive_features(&self.featurize(lemma))
    }

    /// Most probable class, first on ties.
    pub fn predict(&self, lemma: &str) -> VerbClass {
        let p = self.predictive(lemma);
        let mut best = 0;
        for k in 1..K {
            if p[k] > p[best] {
                best = k;
            }
        }
        VerbClass::ALL[best]
    }

    /// Held-in accuracy of [`VerbBelief::predict`] on a corpus.
    pub fn accuracy(&self, corpus: &VerbCorpus) -> f64 {
        if corpus.is_empty() {
            return 0.0;
        }
        let hits = corpus
            .entries()
            .iter()
            .filter(|e| self.predict(&e.lemma) == e.class)
            .count();
        hits as f64 / corpus.len() as f64
    }

    /// Log density of `theta` under the Dirichlet and all Beta components.
    pub fn log_pdf(&self, theta: &TargetVerbConcept) -> Result<f64, StudentError> {
        if theta.feature_probs.len() != self.present.len() {
            return Err(StudentError::Dimension(format!(
                "target has {} feature probabilities, belief has {}",
                theta.feature_probs.len(),
                self.present.len()
            )));
        }
        if !theta.is_interior() {
            return Err(StudentError::DegenerateTarget);
        }
        let total: f64 = self.dirichlet.iter().sum();
        let mut s = ln_gamma(total);
        for k in 0..K {
            s += (self.dirichlet[k] - 1.0) * theta.class_probs[k].ln() - ln_gamma(self.dirichlet[k]);
        }
        for ((&a, &b), &t) in self.present.iter().zip(&self.absent).zip(&theta.feature_probs) {
            s += ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                + (a - 1.0) * t.ln()
                + (b - 1.0) * (1.0 - t).ln();
        }
        Ok(s)
    }

    /// Per class, the log-pdf change if a lemma with no active features were
    /// added to that class. Present features adjust this in
    /// [`VerbBelief::log_pdf_delta`].
    fn delta_bases(&self, theta: &TargetVerbConcept) -> [f64; K] {
        let v = self.vocab.len();
        let total: f64 = self.dirichlet.iter().sum();
        let mut out = [0.0; K];
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = total.ln() - self.dirichlet[k].ln() + theta.class_probs[k].ln();
            for i in k * v..(k + 1) * v {
                let (a, b) = (self.present[i], self.absent[i]);
                s += (a + b).ln() - b.ln() + (1.0 - theta.feature_probs[i]).ln();
            }
            *o = s;
        }
        out
    }

    fn log_pdf_delta(
        &self,
        bases: &[f64; K],
        theta: &TargetVerbConcept,
        features: &FeatureVector,
        class: VerbClass,
    ) -> f64 {
        let k = class.index();
        let v = self.vocab.len();
        let mut s = bases[k];
        for &j in &features.indices {
            let i = k * v + j as usize;
            let (a, b, t) = (self.present[i], self.absent[i], theta.feature_probs[i]);
            s += b.ln() - a.ln() + t.ln() - (1.0 - t).ln();
        }
        s
    }

    pub fn to_snapshot(&self) -> VerbSnapshot {
        VerbSnapshot {
            version: super::program::SNAPSHOT_VERSION,
            vocabulary: self.vocab.suffixes().to_vec(),
            dirichlet: self.dirichlet.to_vec(),
            present: self.present.clone(),
            absent: self.absent.clone(),
        }
    }

    pub fn from_snapshot(snap: &VerbSnapshot) -> Result<Self, StudentError> {
        if snap.version != super::program::SNAPSHOT_VERSION {
            return Err(StudentError::Snapshot(format!(
                "unsupported version {}",
                snap.version
            )));
        }
        let dirichlet: [f64; K] = snap
            .dirichlet
            .as_slice()
            .try_into()
            .map_err(|_| StudentError::Snapshot("Dirichlet must have 4 entries".into()))?;
        let vocab = Arc::new(Vocabulary::from_suffixes(snap.vocabulary.iter().cloned()));
        Self::from_counts(vocab, dirichlet, snap.present.clone(), snap.absent.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerbSnapshot {
    pub version: u32,
    pub vocabulary: Vec<String>,
    pub dirichlet: Vec<f64>,
    pub present: Vec<f64>,
    pub absent: Vec<f64>,
}

/// Posterior of flat priors updated with every corpus lemma.
pub fn fit_verb_model(corpus: &VerbCorpus, vocab: Arc<Vocabulary>) -> VerbBelief {
    let mut b = VerbBelief::flat(vocab);
    let v = b.vocab.len();
    for e in corpus.entries() {
        let f = b.featurize(&e.lemma);
        let k = e.class.index();
        b.dirichlet[k] += 1.0;
        let base = k * v;
        for j in 0..v {
            b.absent[base + j] += 1.0;
        }
        for &j in &f.indices {
            b.present[base + j as usize] += 1.0;
            b.absent[base + j as usize] -= 1.0;
        }
    }
    for k in 0..K {
        b.refresh_class(k);
    }
    b
}

/// Copies the fit and resets the unknown class to all-ones pseudo-counts.
pub fn build_verb_prior(
    fit: Option<&VerbBelief>,
    spec: &StudentTypeSpec,
) -> Result<VerbBelief, StudentError> {
    let fit = fit.ok_or(StudentError::MissingFit)?;
    let StudentTypeSpec::VerbLearner { unknown } = spec else {
        return Err(StudentError::WrongTask(spec.name()));
    };
    let mut b = fit.clone();
    let k = unknown.index();
    let v = b.vocab.len();
    b.dirichlet[k] = 1.0;
    b.present[k * v..(k + 1) * v].fill(1.0);
    b.absent[k * v..(k + 1) * v].fill(1.0);
    b.refresh_class(k);
    Ok(b)
}

/// A point in the verb model's parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetVerbConcept {
    pub class_probs: [f64; K],
    /// Class-major, like [`VerbBelief::present`].
    pub feature_probs: Vec<f64>,
}

impl TargetVerbConcept {
    /// Posterior mode of `fit`. Components whose pseudo-counts are all ones
    /// use the mean instead; every probability is clipped into the open
    /// unit interval.
    pub fn from_fit(fit: &VerbBelief) -> Self {
        let clip = |p: f64| p.clamp(THETA_CLIP, 1.0 - THETA_CLIP);
        let total: f64 = fit.dirichlet.iter().sum();
        let mut class_probs = if fit.dirichlet.iter().all(|&a| a == 1.0) {
            [1.0 / K as f64; K]
        } else {
            fit.dirichlet.map(|a| (a - 1.0) / (total - K as f64))
        };
        class_probs = class_probs.map(clip);
        let z: f64 = class_probs.iter().sum();
        class_probs.iter_mut().for_each(|p| *p /= z);
        let feature_probs = fit
            .present
            .iter()
            .zip(&fit.absent)
            .map(|(&a, &b)| {
                if a == 1.0 && b == 1.0 {
                    0.5
                } else {
                    clip((a - 1.0) / (a + b - 2.0))
                }
            })
            .collect();
        Self {
            class_probs,
            feature_probs,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.class_probs
            .iter()
            .chain(&self.feature_probs)
            .all(|&p| p > 0.0 && p < 1.0)
    }
}

/// What a verb teacher teaches toward: the fitted parameters plus the
/// corpus that labels lemmas.
#[derive(Clone, Debug)]
pub struct VerbTarget {
    pub theta: Arc<TargetVerbConcept>,
    pub corpus: Arc<VerbCorpus>,
}

impl Learner for VerbBelief {
    type Input = String;
    type Output = VerbClass;
    type Target = VerbTarget;

    fn label(target: &VerbTarget, x: &String) -> VerbClass {
        target.corpus.label(x)
    }

    fn observe(&mut self, x: &String, y: &VerbClass) {
        self.update(x, *y);
    }

    fn predictive_prob(&self, x: &String, y: &VerbClass) -> f64 {
        self.predictive(x)[y.index()].max(self.floor)
    }

    fn sample_guess(&self, x: &String, rng: &mut dyn rand::RngCore) -> VerbClass {
        let p = self.predictive(x);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                return VerbClass::ALL[k];
            }
        }
        VerbClass::ALL[p.iter().rposition(|&q| q > 0.0).unwrap_or(K - 1)]
    }

    fn target_score(&self, target: &VerbTarget) -> f64 {
        self.log_pdf(&target.theta)
            .expect("verb target matches the belief's dimensions")
    }

    fn ot_scores(&self, xs: &[String], target: &VerbTarget) -> Vec<f64> {
        let base = self.target_score(target);
        let bases = self.delta_bases(&target.theta);
        xs.iter()
            .map(|x| {
                let f = self.featurize(x);
                let y = target.corpus.label(x);
                base + self.log_pdf_delta(&bases, &target.theta, &f, y)
            })
            .collect()
    }
}
