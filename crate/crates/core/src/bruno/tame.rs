use serde::{Deserialize, Serialize};

use super::sequence::LogTerms;
use crate::error::Result;

/// Relative slack on log-domain comparisons, so that boundary cases such as
/// `a_n = 1, b_n = e^{-2^n}` register as equalities.
const LOG_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    ABelowOne,
    BAboveOne,
    BNotDecreasing,
}

/// A precondition of the tame-pair definition failing at one index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TameReport {
    pub tame: bool,
    /// Least `N` such that `a_n b_n^2 <= b_{n+1}` for all `N <= n < horizon`.
    pub taming_index: Option<usize>,
    /// `holds[n]` is the condition at index `n`, for `n < horizon`.
    pub holds: Vec<bool>,
    pub violations: Vec<Violation>,
}

pub(crate) fn log_le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + LOG_SLACK * rhs.abs().max(1.0)
}

/// Checks `(a, b)` for tameness over `0 <= n < horizon`.
///
/// Uses `a_0 ..= a_{horizon-1}` and `b_0 ..= b_horizon`. Precondition
/// failures (`a_n < 1`, `b_n > 1`, `b` not decreasing) are listed per index
/// rather than raised; the taming index is computed regardless.
pub fn is_tame<A, B>(a: &A, b: &B, horizon: usize) -> Result<TameReport>
where
    A: LogTerms + ?Sized,
    B: LogTerms + ?Sized,
{
    if horizon > 0 {
        a.check_index(horizon - 1)?;
    }
    b.check_index(horizon)?;

    let mut violations = Vec::new();
    let mut holds = Vec::with_capacity(horizon);
    for n in 0..=horizon {
        let lb = b.log_term(n)?;
        if lb > 0.0 {
            violations.push(Violation {
                index: n,
                kind: ViolationKind::BAboveOne,
            });
        }
        if n == horizon {
            break;
        }
        let la = a.log_term(n)?;
        let lb_next = b.log_term(n + 1)?;
        if la < 0.0 {
            violations.push(Violation {
                index: n,
                kind: ViolationKind::ABelowOne,
            });
        }
        if lb_next > lb {
            violations.push(Violation {
                index: n + 1,
                kind: ViolationKind::BNotDecreasing,
            });
        }
        holds.push(log_le(la + 2.0 * lb, lb_next));
    }

    let suffix = holds.iter().rev().take_while(|&&h| h).count();
    let taming_index = (suffix > 0).then(|| horizon - suffix);
    Ok(TameReport {
        tame: taming_index.is_some(),
        taming_index,
        holds,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruno::{LogSequence, PhaseSign, SequenceSpec};

    fn seq(spec: SequenceSpec, h: usize) -> LogSequence {
        spec.log_sequence(h).unwrap()
    }

    #[test]
    fn boundary_pair_is_tame_from_zero() {
        let a = seq(SequenceSpec::Constant { value: 1.0 }, 40);
        let b = seq(
            SequenceSpec::DoubleExponential {
                sign: PhaseSign::Negative,
                base: 2.0,
            },
            40,
        );
        let r = is_tame(&a, &b, 40).unwrap();
        assert!(r.tame);
        assert_eq!(r.taming_index, Some(0));
        assert!(r.violations.is_empty());
    }

    #[test]
    fn geometric_pair() {
        let a = seq(SequenceSpec::Geometric { ratio: 2.0 }, 40);
        let b = seq(SequenceSpec::Geometric { ratio: 0.25 }, 40);
        let r = is_tame(&a, &b, 40).unwrap();
        assert_eq!(r.taming_index, Some(2));
        assert!(!r.holds[1]);
    }

    #[test]
    fn geometric_boundary_lambda_mu_one_is_not_tame() {
        let a = seq(SequenceSpec::Geometric { ratio: 2.0 }, 40);
        let b = seq(SequenceSpec::Geometric { ratio: 0.5 }, 40);
        let r = is_tame(&a, &b, 40).unwrap();
        assert!(!r.tame);
        assert_eq!(r.taming_index, None);
    }

    #[test]
    fn double_exponential_pair() {
        let a = seq(
            SequenceSpec::DoubleExponential {
                sign: PhaseSign::Positive,
                base: 1.5,
            },
            40,
        );
        let b = seq(
            SequenceSpec::DoubleExponential {
                sign: PhaseSign::Negative,
                base: 1.9,
            },
            40,
        );
        let r = is_tame(&a, &b, 40).unwrap();
        assert_eq!(r.taming_index, Some(10));
    }

    #[test]
    fn violations_are_reported_per_index() {
        let a = LogSequence::new(vec![-0.1, 0.0, 0.0]).unwrap();
        let b = LogSequence::new(vec![0.2, -1.0, -0.5]).unwrap();
        let r = is_tame(&a, &b, 2).unwrap();
        assert!(r.violations.contains(&Violation {
            index: 0,
            kind: ViolationKind::ABelowOne
        }));
        assert!(r.violations.contains(&Violation {
            index: 0,
            kind: ViolationKind::BAboveOne
        }));
        assert!(r.violations.contains(&Violation {
            index: 2,
            kind: ViolationKind::BNotDecreasing
        }));
    }

    #[test]
    fn horizon_checked() {
        let a = seq(SequenceSpec::Constant { value: 1.0 }, 5);
        let b = seq(SequenceSpec::Constant { value: 0.5 }, 5);
        assert!(is_tame(&a, &b, 6).is_err());
    }
}
