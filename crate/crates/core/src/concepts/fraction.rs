//! Fraction arithmetic: problems, unsimplified results and the nine
//! add-rule × mul-rule programs a student may hold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ConceptError;

/// A positive fraction. Never simplified: `4/4` stays `4/4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u32,
    pub denominator: u32,
}

impl Fraction {
    pub fn new(numerator: u32, denominator: u32) -> Result<Self, ConceptError> {
        if numerator == 0 || denominator == 0 {
            return Err(ConceptError::NonPositiveFraction {
                numerator,
                denominator,
            });
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    /// Rational equality (cross-multiplication), ignoring representation.
    pub fn value_eq(&self, other: &Fraction) -> bool {
        u64::from(self.numerator) * u64::from(other.denominator)
            == u64::from(other.numerator) * u64::from(self.denominator)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Fraction {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConceptError::Parse(s.to_string());
        let (n, d) = s.trim().split_once('/').ok_or_else(bad)?;
        let n = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim().parse().map_err(|_| bad())?;
        Fraction::new(n, d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Add,
    Mul,
}

impl Operation {
    pub fn symbol(self) -> char {
        match self {
            Operation::Add => '+',
            Operation::Mul => '*',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FractionProblem {
    pub left: Fraction,
    pub right: Fraction,
    pub op: Operation,
}

impl FractionProblem {
    pub fn new(left: Fraction, right: Fraction, op: Operation) -> Self {
        Self { left, right, op }
    }

    pub fn equal_denominators(&self) -> bool {
        self.left.denominator == self.right.denominator
    }
}

impl fmt::Display for FractionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.left, self.op.symbol(), self.right)
    }
}

impl FromStr for FractionProblem {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (pos, op) = s
            .char_indices()
            .find_map(|(i, c)| match c {
                '+' => Some((i, Operation::Add)),
                '*' | '×' => Some((i, Operation::Mul)),
                _ => None,
            })
            .ok_or_else(|| ConceptError::Parse(s.to_string()))?;
        let sym_len = s[pos..].chars().next().map_or(1, char::len_utf8);
        let left = s[..pos].parse()?;
        let right = s[pos + sym_len..].parse()?;
        Ok(FractionProblem { left, right, op })
    }
}

/// Addition sub-programs. `CommonDenominator` is the correct one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AddRule {
    /// A1: make common denominators, add numerators.
    CommonDenominator,
    /// A2: add numerators and denominators.
    AddBoth,
    /// A3: add numerators if denominators are equal, else add both.
    AddBothUnlessEqual,
}

/// Multiplication sub-programs. `MultiplyBoth` is the correct one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MulRule {
    /// M4: make common denominators, multiply numerators.
    CommonDenominator,
    /// M5: multiply numerators and denominators.
    MultiplyBoth,
    /// M6: multiply numerators if denominators are equal, else multiply both.
    MultiplyBothUnlessEqual,
}

impl AddRule {
    pub const ALL: [AddRule; 3] = [
        AddRule::CommonDenominator,
        AddRule::AddBoth,
        AddRule::AddBothUnlessEqual,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AddRule::CommonDenominator => "A1",
            AddRule::AddBoth => "A2",
            AddRule::AddBothUnlessEqual => "A3",
        }
    }

    pub fn apply(self, l: Fraction, r: Fraction) -> Fraction {
        match self {
            AddRule::CommonDenominator => {
                let d = lcm(l.denominator, r.denominator);
                Fraction {
                    numerator: l.numerator * (d / l.denominator) + r.numerator * (d / r.denominator),
                    denominator: d,
                }
            }
            AddRule::AddBoth => Fraction {
                numerator: l.numerator + r.numerator,
                denominator: l.denominator + r.denominator,
            },
            AddRule::AddBothUnlessEqual => {
                if l.denominator == r.denominator {
                    Fraction {
                        numerator: l.numerator + r.numerator,
                        denominator: l.denominator,
                    }
                } else {
                    AddRule::AddBoth.apply(l, r)
                }
            }
        }
    }
}

impl MulRule {
    pub const ALL: [MulRule; 3] = [
        MulRule::CommonDenominator,
        MulRule::MultiplyBoth,
        MulRule::MultiplyBothUnlessEqual,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MulRule::CommonDenominator => "M4",
            MulRule::MultiplyBoth => "M5",
            MulRule::MultiplyBothUnlessEqual => "M6",
        }
    }

    pub fn apply(self, l: Fraction, r: Fraction) -> Fraction {
        match self {
            MulRule::CommonDenominator => {
                let d = lcm(l.denominator, r.denominator);
                Fraction {
                    numerator: l.numerator * (d / l.denominator) * r.numerator * (d / r.denominator),
                    denominator: d,
                }
            }
            MulRule::MultiplyBoth => Fraction {
                numerator: l.numerator * r.numerator,
                denominator: l.denominator * r.denominator,
            },
            MulRule::MultiplyBothUnlessEqual => {
                if l.denominator == r.denominator {
                    Fraction {
                        numerator: l.numerator * r.numerator,
                        denominator: l.denominator,
                    }
                } else {
                    MulRule::MultiplyBoth.apply(l, r)
                }
            }
        }
    }
}

/// One hypothesis of the fraction task: an addition rule paired with a
/// multiplication rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FractionProgram {
    pub add_rule: AddRule,
    pub mul_rule: MulRule,
}

impl FractionProgram {
    pub const TARGET: FractionProgram = FractionProgram {
        add_rule: AddRule::CommonDenominator,
        mul_rule: MulRule::MultiplyBoth,
    };

    pub fn new(add_rule: AddRule, mul_rule: MulRule) -> Self {
        Self { add_rule, mul_rule }
    }

    /// All nine programs, add-rule major.
    pub fn all() -> Vec<FractionProgram> {
        AddRule::ALL
            .iter()
            .flat_map(|&a| MulRule::ALL.iter().map(move |&m| FractionProgram::new(a, m)))
            .collect()
    }

    pub fn eval(&self, problem: &FractionProblem) -> Fraction {
        match problem.op {
            Operation::Add => self.add_rule.apply(problem.left, problem.right),
            Operation::Mul => self.mul_rule.apply(problem.left, problem.right),
        }
    }
}

impl fmt::Display for FractionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.add_rule.label(), self.mul_rule.label())
    }
}

/// Inclusive bounds for numerators and denominators of enumerated problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionRange {
    pub min: u32,
    pub max: u32,
}

impl Default for FractionRange {
    fn default() -> Self {
        Self { min: 1, max: 10 }
    }
}

/// Every problem with operands in `range`, both operations. Order is
/// operation, left numerator, left denominator, right numerator, right
/// denominator.
pub fn enumerate_problems(range: FractionRange) -> Vec<FractionProblem> {
    let values: Vec<u32> = (range.min.max(1)..=range.max).collect();
    let mut out = Vec::with_capacity(2 * values.len().pow(4));
    for op in [Operation::Add, Operation::Mul] {
        for &ln in &values {
            for &ld in &values {
                for &rn in &values {
                    for &rd in &values {
                        out.push(FractionProblem {
                            left: Fraction {
                                numerator: ln,
                                denominator: ld,
                            },
                            right: Fraction {
                                numerator: rn,
                                denominator: rd,
                            },
                            op,
                        });
                    }
                }
            }
        }
    }
    out
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(s: &str) -> Fraction {
        s.parse().unwrap()
    }

    fn prob(s: &str) -> FractionProblem {
        s.parse().unwrap()
    }

    #[test]
    fn sub_program_examples() {
        let m5 = FractionProgram::new(AddRule::CommonDenominator, MulRule::MultiplyBoth);
        assert_eq!(m5.eval(&prob("1/5*2/5")), frac("2/25"));
        let m4 = FractionProgram::new(AddRule::CommonDenominator, MulRule::CommonDenominator);
        assert_eq!(m4.eval(&prob("1/2*1/6")), frac("3/6"));
        let m6 = FractionProgram::new(AddRule::CommonDenominator, MulRule::MultiplyBothUnlessEqual);
        assert_eq!(m6.eval(&prob("1/5*2/5")), frac("2/5"));
        assert_eq!(FractionProgram::TARGET.eval(&prob("1/2+2/4")), frac("4/4"));
    }

    #[test]
    fn addition_rules_on_unequal_denominators() {
        let p = prob("1/2+2/4");
        assert_eq!(AddRule::AddBoth.apply(p.left, p.right), frac("3/6"));
        assert_eq!(AddRule::AddBothUnlessEqual.apply(p.left, p.right), frac("3/6"));
        let q = prob("1/5+2/5");
        assert_eq!(AddRule::AddBothUnlessEqual.apply(q.left, q.right), frac("3/5"));
        assert_eq!(AddRule::AddBoth.apply(q.left, q.right), frac("3/10"));
    }

    #[test]
    fn nine_programs() {
        let all = FractionProgram::all();
        assert_eq!(all.len(), 9);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 9);
        assert!(all.contains(&FractionProgram::TARGET));
    }

    #[test]
    fn enumeration_count() {
        let all = enumerate_problems(FractionRange::default());
        assert_eq!(all.len(), 20_000);
        assert_eq!(all[0].to_string(), "1/1+1/1");
        assert_eq!(all[10_000].op, Operation::Mul);
    }

    #[test]
    fn target_agrees_with_rational_arithmetic() {
        for p in enumerate_problems(FractionRange::default()) {
            let got = FractionProgram::TARGET.eval(&p);
            let (ln, ld) = (u64::from(p.left.numerator), u64::from(p.left.denominator));
            let (rn, rd) = (u64::from(p.right.numerator), u64::from(p.right.denominator));
            let (num, den) = match p.op {
                Operation::Add => (ln * rd + rn * ld, ld * rd),
                Operation::Mul => (ln * rn, ld * rd),
            };
            assert_eq!(
                u64::from(got.numerator) * den,
                num * u64::from(got.denominator),
                "{p}"
            );
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(prob(" 1/2 × 1/6 ").op, Operation::Mul);
        assert_eq!(prob("3/4+1/2").to_string(), "3/4+1/2");
        assert!("0/4".parse::<Fraction>().is_err());
        assert!("1/2-1/3".parse::<FractionProblem>().is_err());
        assert!(frac("2/4").value_eq(&frac("1/2")));
    }
}
