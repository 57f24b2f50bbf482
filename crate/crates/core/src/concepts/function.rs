//! The `wug` function task: `if f(x): undefined else a*x+b`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ConceptError;

pub const INPUT_RANGE: RangeInclusive<i32> = -20..=20;
pub const SLOPE_RANGE: RangeInclusive<i32> = -5..=5;
pub const INTERCEPT_RANGE: RangeInclusive<i32> = 1..=9;
pub const DIVISIBLE_RANGE: RangeInclusive<u8> = 3..=20;
pub const GREATER_RANGE: RangeInclusive<u8> = 1..=20;

/// Boolean predicate deciding where `wug` is undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Predicate {
    Prime,
    Positive,
    Even,
    Odd,
    Divisible(u8),
    Greater(u8),
}

impl Predicate {
    /// The 42 predicates: four parameterless, then `divisible_3..=20`, then
    /// `greater_1..=20`.
    pub fn all() -> Vec<Predicate> {
        let mut out = vec![
            Predicate::Prime,
            Predicate::Positive,
            Predicate::Even,
            Predicate::Odd,
        ];
        out.extend(DIVISIBLE_RANGE.map(Predicate::Divisible));
        out.extend(GREATER_RANGE.map(Predicate::Greater));
        out
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Predicate::Divisible(n) => DIVISIBLE_RANGE.contains(n),
            Predicate::Greater(n) => GREATER_RANGE.contains(n),
            _ => true,
        }
    }

    pub fn eval(&self, x: i32) -> bool {
        match *self {
            Predicate::Prime => is_prime(x),
            Predicate::Positive => x > 0,
            Predicate::Even => x % 2 == 0,
            Predicate::Odd => x % 2 != 0,
            Predicate::Divisible(n) => x % i32::from(n) == 0,
            Predicate::Greater(n) => x > i32::from(n),
        }
    }

    /// English phrase used after "inputs are" / "x is".
    pub fn describe(&self) -> String {
        match self {
            Predicate::Prime => "prime".into(),
            Predicate::Positive => "positive".into(),
            Predicate::Even => "even".into(),
            Predicate::Odd => "odd".into(),
            Predicate::Divisible(n) => format!("divisible by {n}"),
            Predicate::Greater(n) => format!("greater than {n}"),
        }
    }
}

fn is_prime(x: i32) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Prime => f.write_str("prime"),
            Predicate::Positive => f.write_str("positive"),
            Predicate::Even => f.write_str("even"),
            Predicate::Odd => f.write_str("odd"),
            Predicate::Divisible(n) => write!(f, "divisible_{n}"),
            Predicate::Greater(n) => write!(f, "greater_{n}"),
        }
    }
}

impl FromStr for Predicate {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || ConceptError::Parse(s.to_string());
        let p = match t.as_str() {
            "prime" => Predicate::Prime,
            "positive" => Predicate::Positive,
            "even" => Predicate::Even,
            "odd" => Predicate::Odd,
            _ => {
                let (kind, n) = t.rsplit_once('_').ok_or_else(bad)?;
                let n: u8 = n.parse().map_err(|_| bad())?;
                match kind {
                    "divisible" | "divis" => Predicate::Divisible(n),
                    "greater" => Predicate::Greater(n),
                    _ => return Err(bad()),
                }
            }
        };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(ConceptError::UnknownPredicate(s.to_string()))
        }
    }
}

impl From<Predicate> for String {
    fn from(p: Predicate) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Predicate {
    type Error = ConceptError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FunctionOutput {
    Undefined,
    Value(i32),
}

impl fmt::Display for FunctionOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionOutput::Undefined => f.write_str("undefined"),
            FunctionOutput::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for FunctionOutput {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("undefined") {
            return Ok(FunctionOutput::Undefined);
        }
        t.parse()
            .map(FunctionOutput::Value)
            .map_err(|_| ConceptError::Parse(s.to_string()))
    }
}

impl From<FunctionOutput> for String {
    fn from(o: FunctionOutput) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for FunctionOutput {
    type Error = ConceptError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A program `if f(x): undefined else a*x+b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionConcept {
    pub f: Predicate,
    pub a: i32,
    pub b: i32,
}

impl FunctionConcept {
    pub fn new(f: Predicate, a: i32, b: i32) -> Self {
        Self { f, a, b }
    }

    /// All 4,158 concepts, predicate-major, then slope, then intercept.
    pub fn all() -> Vec<FunctionConcept> {
        let mut out = Vec::with_capacity(42 * 11 * 9);
        for f in Predicate::all() {
            for a in SLOPE_RANGE {
                for b in INTERCEPT_RANGE {
                    out.push(FunctionConcept { f, a, b });
                }
            }
        }
        out
    }

    pub fn eval(&self, x: i32) -> Result<FunctionOutput, ConceptError> {
        if !INPUT_RANGE.contains(&x) {
            return Err(ConceptError::InputOutOfRange(x));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the input range check.
    #[inline]
    pub fn eval_unchecked(&self, x: i32) -> FunctionOutput {
        if self.f.eval(x) {
            FunctionOutput::Undefined
        } else {
            FunctionOutput::Value(self.a * x + self.b)
        }
    }

    /// `a*x+b` rendered the way a person would write it: `x+7`, `-5*x+5`.
    pub fn expression(&self) -> String {
        let slope = match self.a {
            0 => String::new(),
            1 => "x".to_string(),
            -1 => "-x".to_string(),
            a => format!("{a}*x"),
        };
        if slope.is_empty() {
            self.b.to_string()
        } else {
            format!("{slope}+{}", self.b)
        }
    }
}

impl fmt::Display for FunctionConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.f, self.a, self.b)
    }
}

pub fn function_inputs() -> Vec<i32> {
    INPUT_RANGE.collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicate_examples() {
        assert!(Predicate::Greater(2).eval(3));
        assert!(Predicate::Prime.eval(7));
        assert!(!Predicate::Divisible(6).eval(4));
        assert!(!Predicate::Prime.eval(-7));
        assert!(!Predicate::Prime.eval(1));
        assert!(!Predicate::Prime.eval(0));
        assert!(Predicate::Odd.eval(-3));
        assert!(Predicate::Divisible(3).eval(0));
    }

    #[test]
    fn cardinalities() {
        let preds = Predicate::all();
        assert_eq!(preds.len(), 42);
        let mut d = preds.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 42);
        assert_eq!(FunctionConcept::all().len(), 4158);
        assert_eq!(function_inputs().len(), 41);
    }

    #[test]
    fn transcript_values() {
        let c = FunctionConcept::new(Predicate::Greater(2), 1, 7);
        assert_eq!(c.eval(1).unwrap(), FunctionOutput::Value(8));
        assert_eq!(c.eval(3).unwrap(), FunctionOutput::Undefined);
        assert_eq!(c.eval(0).unwrap(), FunctionOutput::Value(7));
        assert!(c.eval(21).is_err());
        assert!(c.eval(-21).is_err());
    }

    #[test]
    fn undefined_iff_predicate_holds() {
        for c in FunctionConcept::all() {
            for x in INPUT_RANGE {
                assert_eq!(c.eval(x).unwrap() == FunctionOutput::Undefined, c.f.eval(x));
            }
        }
    }

    #[test]
    fn predicate_names_round_trip() {
        for p in Predicate::all() {
            assert_eq!(p.to_string().parse::<Predicate>().unwrap(), p);
        }
        assert_eq!("divis_4".parse::<Predicate>().unwrap(), Predicate::Divisible(4));
        assert!("greater_0".parse::<Predicate>().is_err());
        assert!("divisible_2".parse::<Predicate>().is_err());
    }

    #[test]
    fn expressions() {
        assert_eq!(FunctionConcept::new(Predicate::Even, 1, 7).expression(), "x+7");
        assert_eq!(FunctionConcept::new(Predicate::Even, -5, 5).expression(), "-5*x+5");
        assert_eq!(FunctionConcept::new(Predicate::Even, 0, 5).expression(), "5");
        assert_eq!(FunctionConcept::new(Predicate::Even, -1, 2).expression(), "-x+2");
    }
}
