//! `key = value` experiment files.
//!
//! ```text
//! # comments start with '#'
//! tasks = functions, fractions
//! policies = random, atom, non-adaptive-known
//! seeds = 0, 1, 2
//! horizon = 40
//! conditions = human
//! ```

use serde::{Deserialize, Serialize};

use super::{Condition, ExperimentConfig, HarnessError, DEFAULT_SEEDS};
use crate::concepts::{FractionRange, Task};
use crate::students::PriorWeighting;
use crate::teachers::{PolicyKind, DEFAULT_VERB_SAMPLE};

/// A sweep over tasks, conditions, policies and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tasks: Vec<Task>,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    /// Overrides the task default when set.
    pub horizon: Option<usize>,
    pub noise: Option<f64>,
    pub prior_c: Option<f64>,
    pub weighting: PriorWeighting,
    pub fraction_range: FractionRange,
    pub verb_sample: usize,
    /// Restrict function conditions to the human-study rows.
    pub human_only: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tasks: vec![Task::Fractions, Task::Functions],
            policies: vec![
                PolicyKind::Random,
                PolicyKind::NonAdaptive { known: false },
                PolicyKind::Atom,
                PolicyKind::NonAdaptive { known: true },
            ],
            seeds: DEFAULT_SEEDS.to_vec(),
            horizon: None,
            noise: None,
            prior_c: None,
            weighting: PriorWeighting::default(),
            fraction_range: FractionRange::default(),
            verb_sample: DEFAULT_VERB_SAMPLE,
            human_only: false,
        }
    }
}

impl GridSpec {
    /// Condition-major, then policy, then seed.
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &task in &self.tasks {
            for condition in Condition::all_for(task) {
                if self.human_only {
                    if let Condition::Functions { row, .. } = &condition {
                        if !row.human {
                            continue;
                        }
                    }
                }
                for &policy in &self.policies {
                    for &seed in &self.seeds {
                        out.push(self.apply(ExperimentConfig::new(condition.clone(), policy, seed)));
                    }
                }
            }
        }
        out
    }

    /// Applies overrides to a config built with task defaults.
    pub fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(n) = self.noise {
            cfg.noise = n;
        }
        if let Some(c) = self.prior_c {
            cfg.prior_c = c;
        }
        cfg.weighting = self.weighting;
        cfg.fraction_range = self.fraction_range;
        cfg.verb_sample = self.verb_sample;
        cfg
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut spec = GridSpec::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            spec.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn list<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
        }
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad number `{v}`"))
        }
        match key {
            "tasks" | "task" => {
                self.tasks = list(value, |s| s.parse::<Task>().map_err(|e| e.to_string()))?
            }
            "policies" | "policy" => self.policies = list(value, |s| s.parse())?,
            "seeds" | "seed" => self.seeds = list(value, num)?,
            "horizon" => self.horizon = Some(num(value)?),
            "noise" => self.noise = Some(num(value)?),
            "prior_c" => self.prior_c = Some(num(value)?),
            "prior_weighting" | "weighting" => self.weighting = value.parse()?,
            "fraction_min" => self.fraction_range.min = num(value)?,
            "fraction_max" => self.fraction_range.max = num(value)?,
            "verb_sample" => self.verb_sample = num(value)?,
            "conditions" => {
                self.human_only = match value {
                    "all" => false,
                    "human" => true,
                    other => return Err(format!("conditions must be all or human, got `{other}`")),
                }
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_expands() {
        let spec = GridSpec::parse(
            "# sweep\ntasks = functions\npolicies = atom, random\nseeds = 0,1\nconditions = human\nhorizon = 12 # short\n",
        )
        .unwrap();
        assert_eq!(spec.tasks, vec![Task::Functions]);
        assert_eq!(spec.horizon, Some(12));
        let cfgs = spec.configs();
        assert_eq!(cfgs.len(), 11 * 2 * 2 * 2);
        assert!(cfgs.iter().all(|c| c.horizon == 12));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(GridSpec::parse("colour = blue").is_err());
        assert!(GridSpec::parse("no equals sign").is_err());
        assert!(GridSpec::parse("policies = telepathy").is_err());
    }
}
