//! Categorical beliefs over enumerated program spaces.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Learner, PriorWeighting, StudentError, StudentTypeSpec, PREDICTIVE_FLOOR};
use crate::concepts::{
    AddRule, Fraction, FractionProblem, FractionProgram, FunctionConcept, FunctionOutput, MulRule,
};

pub const SNAPSHOT_VERSION: u32 = 1;

/// A concept that maps inputs to outputs and can be scored against a
/// student type's special primitives.
pub trait Program: Clone + PartialEq + Debug + Display + Send + Sync + 'static {
    type Input: Clone + Eq + Hash + Debug + Display + Send + Sync;
    type Output: Clone + PartialEq + Debug + Display + Send + Sync;

    fn run(&self, x: &Self::Input) -> Self::Output;

    /// Number of the spec's special primitives this program uses.
    fn special_primitives(&self, spec: &StudentTypeSpec) -> Result<u32, StudentError>;

    /// The full hypothesis space in canonical order.
    fn space() -> Vec<Self>;
}

impl Program for FractionProgram {
    type Input = FractionProblem;
    type Output = Fraction;

    fn run(&self, x: &FractionProblem) -> Fraction {
        self.eval(x)
    }

    fn special_primitives(&self, spec: &StudentTypeSpec) -> Result<u32, StudentError> {
        let (add, mul) = match spec {
            StudentTypeSpec::MultLearner => (
                self.add_rule == AddRule::CommonDenominator,
                matches!(
                    self.mul_rule,
                    MulRule::CommonDenominator | MulRule::MultiplyBothUnlessEqual
                ),
            ),
            StudentTypeSpec::AddLearner => (
                matches!(
                    self.add_rule,
                    AddRule::AddBoth | AddRule::AddBothUnlessEqual
                ),
                self.mul_rule == MulRule::MultiplyBoth,
            ),
            other => return Err(StudentError::WrongTask(other.name())),
        };
        Ok(u32::from(add) + u32::from(mul))
    }

    fn space() -> Vec<Self> {
        FractionProgram::all()
    }
}

impl Program for FunctionConcept {
    type Input = i32;
    type Output = FunctionOutput;

    #[inline]
    fn run(&self, x: &i32) -> FunctionOutput {
        self.eval_unchecked(*x)
    }

    fn special_primitives(&self, spec: &StudentTypeSpec) -> Result<u32, StudentError> {
        match *spec {
            StudentTypeSpec::FLearner {
                spurious_f,
                target_b,
            } => Ok(u32::from(self.f == spurious_f) + u32::from(self.b == target_b)),
            StudentTypeSpec::BLearner {
                target_f,
                spurious_b,
            } => Ok(u32::from(self.f == target_f) + u32::from(self.b == spurious_b)),
            ref other => Err(StudentError::WrongTask(other.name())),
        }
    }

    fn space() -> Vec<Self> {
        FunctionConcept::all()
    }
}

/// Likelihood of an observed label under a hypothesis. `noise` is folded
/// so the consistent branch always carries the larger weight.
#[inline]
pub fn label_likelihood(consistent: bool, noise: f64) -> f64 {
    if consistent {
        noise.max(1.0 - noise)
    } else {
        noise.min(1.0 - noise)
    }
}

/// Posterior over a fixed, ordered list of programs.
#[derive(Clone, Debug)]
pub struct ProgramBelief<P: Program> {
    hypotheses: Arc<[P]>,
    probs: Vec<f64>,
    noise: f64,
    floor: f64,
}

impl<P: Program> ProgramBelief<P> {
    /// Normalizes `weights` into a belief. Panics if lengths differ or all
    /// weights are zero.
    pub fn from_weights(hypotheses: Arc<[P]>, weights: &[f64], noise: f64) -> Self {
        assert_eq!(hypotheses.len(), weights.len());
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0 && total.is_finite(), "prior weights must have positive finite mass");
        Self {
            hypotheses,
            probs: weights.iter().map(|w| w / total).collect(),
            noise,
            floor: PREDICTIVE_FLOOR,
        }
    }

    pub fn uniform(hypotheses: Arc<[P]>, noise: f64) -> Self {
        let w = vec![1.0; hypotheses.len()];
        Self::from_weights(hypotheses, &w, noise)
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn hypotheses(&self) -> &[P] {
        &self.hypotheses
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn prob_of(&self, h: &P) -> f64 {
        self.index_of(h).map_or(0.0, |i| self.probs[i])
    }

    pub fn index_of(&self, h: &P) -> Option<usize> {
        self.hypotheses.iter().position(|g| g == h)
    }

    /// Highest-probability hypothesis, first on ties.
    pub fn mode(&self) -> &P {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        &self.hypotheses[best]
    }

    /// Bayes update. If every hypothesis has zero likelihood the belief is
    /// left unchanged.
    pub fn update(&mut self, x: &P::Input, y: &P::Output) {
        let hi = label_likelihood(true, self.noise);
        let lo = label_likelihood(false, self.noise);
        let mut next: Vec<f64> = self
            .hypotheses
            .iter()
            .zip(&self.probs)
            .map(|(h, &p)| p * if h.run(x) == *y { hi } else { lo })
            .collect();
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            next.iter_mut().for_each(|p| *p /= total);
            self.probs = next;
        }
    }

    /// Unfloored predictive mass of `y` at `x`.
    pub fn predictive_mass(&self, x: &P::Input, y: &P::Output) -> f64 {
        self.hypotheses
            .iter()
            .zip(&self.probs)
            .filter(|(h, _)| h.run(x) == *y)
            .map(|(_, &p)| p)
            .sum()
    }

    pub fn to_snapshot(&self) -> ProgramSnapshot {
        ProgramSnapshot {
            version: SNAPSHOT_VERSION,
            hypotheses: self.hypotheses.iter().map(|h| h.to_string()).collect(),
            probs: self.probs.clone(),
            noise: self.noise,
            floor: self.floor,
        }
    }

    /// Restores a snapshot against `space`, matching hypotheses by their
    /// display ids.
    pub fn from_snapshot(snap: &ProgramSnapshot, space: Arc<[P]>) -> Result<Self, StudentError> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(StudentError::Snapshot(format!(
                "unsupported version {}",
                snap.version
            )));
        }
        if snap.hypotheses.len() != snap.probs.len() {
            return Err(StudentError::Snapshot("length mismatch".into()));
        }
        let ids: Vec<String> = space.iter().map(|h| h.to_string()).collect();
        let mut hyps = Vec::with_capacity(snap.hypotheses.len());
        for id in &snap.hypotheses {
            let i = ids
                .iter()
                .position(|s| s == id)
                .ok_or_else(|| StudentError::Snapshot(format!("unknown hypothesis {id}")))?;
            hyps.push(space[i].clone());
        }
        let same_order = hyps.len() == space.len() && hyps.iter().zip(space.iter()).all(|(a, b)| a == b);
        Ok(Self {
            hypotheses: if same_order { space } else { hyps.into() },
            probs: snap.probs.clone(),
            noise: snap.noise,
            floor: snap.floor,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramSnapshot {
    pub version: u32,
    pub hypotheses: Vec<String>,
    pub probs: Vec<f64>,
    pub noise: f64,
    pub floor: f64,
}

/// Prior of a student type: weight of `h` grows with the number of the
/// type's special primitives it contains.
pub fn build_program_prior<P: Program>(
    space: Arc<[P]>,
    spec: &StudentTypeSpec,
    c: f64,
    weighting: PriorWeighting,
    noise: f64,
) -> Result<ProgramBelief<P>, StudentError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(StudentError::InvalidSpec(format!("prior constant {c}")));
    }
    let weights = space
        .iter()
        .map(|h| h.special_primitives(spec).map(|n| weighting.weight(c, n)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProgramBelief::from_weights(space, &weights, noise))
}

impl<P: Program> Learner for ProgramBelief<P> {
    type Input = P::Input;
    type Output = P::Output;
    type Target = P;

    fn label(target: &P, x: &P::Input) -> P::Output {
        target.run(x)
    }

    fn observe(&mut self, x: &P::Input, y: &P::Output) {
        self.update(x, y);
    }

    fn predictive_prob(&self, x: &P::Input, y: &P::Output) -> f64 {
        self.predictive_mass(x, y).max(self.floor)
    }

    fn sample_guess(&self, x: &P::Input, rng: &mut dyn rand::RngCore) -> P::Output {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (h, &p) in self.hypotheses.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return h.run(x);
            }
        }
        // Rounding left `acc` just below 1: take the last hypothesis with mass.
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        self.hypotheses[last].run(x)
    }

    fn target_score(&self, target: &P) -> f64 {
        self.prob_of(target)
    }

    fn ot_scores(&self, xs: &[P::Input], target: &P) -> Vec<f64> {
        let Some(t) = self.index_of(target) else {
            return vec![0.0; xs.len()];
        };
        let hi = label_likelihood(true, self.noise);
        let lo = label_likelihood(false, self.noise);
        let pt = self.probs[t];
        xs.iter()
            .map(|x| {
                let y = target.run(x);
                let mut z = 0.0;
                for (h, &p) in self.hypotheses.iter().zip(&self.probs) {
                    if p > 0.0 {
                        z += p * if h.run(x) == y { hi } else { lo };
                    }
                }
                if z > 0.0 {
                    pt * hi / z
                } else {
                    pt
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{Operation, Predicate};
    use crate::students::{FRACTION_NOISE, FRACTION_PRIOR_C, FUNCTION_NOISE, FUNCTION_PRIOR_C};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frac(n: u32, d: u32) -> Fraction {
        Fraction::new(n, d).unwrap()
    }

    fn fraction_space() -> Arc<[FractionProgram]> {
        FractionProgram::all().into()
    }

    #[test]
    fn likelihood_is_folded() {
        assert_eq!(label_likelihood(true, 0.8), 0.8);
        assert_abs_diff_eq!(label_likelihood(false, 0.8), 0.2, epsilon = 1e-15);
        assert_eq!(label_likelihood(true, 0.05), 0.95);
        assert_eq!(label_likelihood(false, 0.05), 0.05);
        assert_eq!(label_likelihood(true, 0.0), 1.0);
        assert_eq!(label_likelihood(false, 0.0), 0.0);
    }

    #[test]
    fn zero_noise_two_hypotheses() {
        let a = FunctionConcept::new(Predicate::Greater(2), 1, 7);
        let b = FunctionConcept::new(Predicate::Greater(4), 1, 7);
        let mut belief = ProgramBelief::uniform(vec![a, b].into(), 0.0);
        belief.update(&3, &FunctionOutput::Undefined);
        assert_eq!(belief.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn uniform_when_c_is_one() {
        let space: Arc<[FunctionConcept]> = FunctionConcept::all().into();
        let spec = StudentTypeSpec::FLearner {
            spurious_f: Predicate::Greater(4),
            target_b: 7,
        };
        let b = build_program_prior(space, &spec, 1.0, PriorWeighting::Exponential, 0.05).unwrap();
        let u = 1.0 / 4158.0;
        assert!(b.probs().iter().all(|&p| (p - u).abs() < 1e-15));
    }

    #[test]
    fn mult_learner_modal_programs() {
        for weighting in [PriorWeighting::Exponential, PriorWeighting::Linear] {
            let b = build_program_prior(
                fraction_space(),
                &StudentTypeSpec::MultLearner,
                FRACTION_PRIOR_C,
                weighting,
                FRACTION_NOISE,
            )
            .unwrap();
            let top = b.probs().iter().cloned().fold(0.0, f64::max);
            let modal: Vec<String> = b
                .hypotheses()
                .iter()
                .zip(b.probs())
                .filter(|(_, &p)| p == top)
                .map(|(h, _)| h.to_string())
                .collect();
            assert_eq!(modal, vec!["(A1, M4)", "(A1, M6)"]);
            assert!(b.prob_of(&FractionProgram::TARGET) < 0.5);
        }
    }

    #[test]
    fn fraction_likelihood_ratio() {
        let mut b = ProgramBelief::uniform(fraction_space(), FRACTION_NOISE);
        let x = FractionProblem::new(frac(1, 5), frac(2, 5), Operation::Mul);
        let y = FractionProgram::TARGET.run(&x);
        b.update(&x, &y);
        let consistent = b.prob_of(&FractionProgram::TARGET);
        let inconsistent = b.prob_of(&FractionProgram::new(
            AddRule::CommonDenominator,
            MulRule::MultiplyBothUnlessEqual,
        ));
        assert_abs_diff_eq!(inconsistent / consistent, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_predictive_and_sampling() {
        let h = FunctionConcept::new(Predicate::Even, 2, 3);
        let mut w = vec![0.0; 2];
        w[0] = 1.0;
        let other = FunctionConcept::new(Predicate::Odd, 2, 3);
        let b = ProgramBelief::from_weights(vec![h, other].into(), &w, 0.05);
        assert_eq!(b.predictive_prob(&1, &FunctionOutput::Value(5)), 1.0);
        assert_eq!(b.predictive_prob(&1, &FunctionOutput::Undefined), PREDICTIVE_FLOOR);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in -20..=20 {
            assert_eq!(b.sample_guess(&x, &mut rng), h.run(&x));
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut b = build_program_prior(
            fraction_space(),
            &StudentTypeSpec::AddLearner,
            FRACTION_PRIOR_C,
            PriorWeighting::Linear,
            FRACTION_NOISE,
        )
        .unwrap();
        let x = FractionProblem::new(frac(1, 2), frac(2, 4), Operation::Add);
        b.update(&x, &frac(4, 4));
        let json = serde_json::to_string(&b.to_snapshot()).unwrap();
        let snap: ProgramSnapshot = serde_json::from_str(&json).unwrap();
        let back = ProgramBelief::from_snapshot(&snap, fraction_space()).unwrap();
        assert_eq!(back.probs(), b.probs());
        assert_eq!(back.hypotheses(), b.hypotheses());
    }

    #[test]
    fn f_learner_prior_prefers_spurious() {
        let space: Arc<[FunctionConcept]> = FunctionConcept::all().into();
        let spec = StudentTypeSpec::FLearner {
            spurious_f: Predicate::Greater(4),
            target_b: 7,
        };
        let target = FunctionConcept::new(Predicate::Greater(2), 1, 7);
        let spurious = FunctionConcept::new(Predicate::Greater(4), 1, 7);
        for w in [PriorWeighting::Exponential, PriorWeighting::Linear] {
            let b = build_program_prior(space.clone(), &spec, FUNCTION_PRIOR_C, w, FUNCTION_NOISE)
                .unwrap();
            assert!(b.prob_of(&target) < b.prob_of(&spurious));
            assert_eq!(b.mode().f, Predicate::Greater(4));
            assert_eq!(b.mode().b, 7);
        }
    }
}
