use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sequence::LogTerms;
use super::tame::is_tame;
use super::{a_pi, log_bruno_transform};
use crate::error::{Error, Result};

/// Absolute floor below which an orbit counts as converged to zero.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Relative agreement required between the iterated and closed-form
/// quadratic orbit.
const CLOSED_FORM_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OrbitVerdict {
    ConvergedToZero,
    Diverged { step: usize },
    Undecided,
}

/// A scalar orbit `x_0, x_1, ...` with per-step flags.
///
/// `ratios[n] = x_{n+1} / x_n` (`None` when `x_n = 0`); `bound_flags` has one
/// entry per value, `bound_flags[0]` is always `true`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub values: Vec<f64>,
    pub ratios: Vec<Option<f64>>,
    pub verdict: OrbitVerdict,
    pub bound_flags: Vec<bool>,
}

impl OrbitTrace {
    fn from_values(values: Vec<f64>, bound_flags: Vec<bool>, diverged_at: Option<usize>) -> Self {
        let ratios = values
            .windows(2)
            .map(|w| if w[0] == 0.0 { None } else { Some(w[1] / w[0]) })
            .collect();
        let verdict = match diverged_at {
            Some(step) => OrbitVerdict::Diverged { step },
            None if values.last().is_some_and(|&x| x < ZERO_FLOOR) => OrbitVerdict::ConvergedToZero,
            None => OrbitVerdict::Undecided,
        };
        Self {
            values,
            ratios,
            verdict,
            bound_flags,
        }
    }

    pub fn all_flags(&self) -> bool {
        self.bound_flags.iter().all(|&f| f)
    }

    /// Writes the columns `n, x_n, ratio, flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "x_n", "ratio", "flag"])?;
        for (n, x) in self.values.iter().enumerate() {
            let ratio = self
                .ratios
                .get(n)
                .copied()
                .flatten()
                .map(|r| r.to_string())
                .unwrap_or_default();
            w.write_record([
                n.to_string(),
                x.to_string(),
                ratio,
                self.bound_flags[n].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_start(x0: f64) -> Result<()> {
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(Error::Precondition(format!(
            "initial value must be finite and nonnegative, got {x0}"
        )));
    }
    Ok(())
}

/// Iterates `u_{n+1} = a_n u_n^2` for `steps` steps.
///
/// `bound_flags[n]` records agreement with the closed form
/// `u_n = (hat a_{n-1} u_0)^{2^n}` to relative `1e-9` wherever both are
/// normal floats; the flag is vacuously true elsewhere.
pub fn quadratic_orbit<S: LogTerms + ?Sized>(a: &S, u0: f64, steps: usize) -> Result<OrbitTrace> {
    check_start(u0)?;
    if steps > 0 {
        a.check_index(steps - 1)?;
    }
    let mut values = vec![u0];
    let mut flags = vec![true];
    let mut diverged_at = None;
    let ln_u0 = u0.ln();
    for n in 0..steps {
        let x = values[n];
        let next = if x == 0.0 { 0.0 } else { a.term(n)? * x * x };
        if !next.is_finite() {
            diverged_at = Some(n + 1);
            break;
        }
        let closed = (2f64.powi(n as i32 + 1) * (log_bruno_transform(a, n)? + ln_u0)).exp();
        let flag = if next.is_normal() && closed.is_normal() {
            ((next - closed) / next).abs() <= CLOSED_FORM_RTOL
        } else {
            true
        };
        values.push(next);
        flags.push(flag);
    }
    Ok(OrbitTrace::from_values(values, flags, diverged_at))
}

/// Critical initial value `1 / a_pi`, when the Bruno product has converged.
pub fn quadratic_threshold<S: LogTerms + ?Sized>(a: &S, tol: f64) -> Result<Option<f64>> {
    let p = a_pi(a, tol)?;
    Ok(p.converged.then(|| (-p.log_limit).exp()))
}

/// Iterates the mixed model `x_{n+1} = (a_n x_n^2 + b_n x_n) / 2` and flags
/// `x_n <= b_n x_{n-1}` at every step.
///
/// The pair must be tame over the horizon of `b` used by the run.
pub fn mixed_orbit<A, B>(a: &A, b: &B, x0: f64, steps: usize) -> Result<OrbitTrace>
where
    A: LogTerms + ?Sized,
    B: LogTerms + ?Sized,
{
    check_start(x0)?;
    let horizon = steps.max(1);
    let report = is_tame(a, b, horizon)?;
    if !report.tame {
        return Err(Error::NotTame { horizon });
    }
    mixed_orbit_unchecked(a, b, x0, steps)
}

fn mixed_orbit_unchecked<A, B>(a: &A, b: &B, x0: f64, steps: usize) -> Result<OrbitTrace>
where
    A: LogTerms + ?Sized,
    B: LogTerms + ?Sized,
{
    let mut values = vec![x0];
    let mut flags = vec![true];
    let mut diverged_at = None;
    for n in 0..steps {
        let x = values[n];
        let next = if x == 0.0 {
            0.0
        } else {
            0.5 * (a.term(n)? * x * x + b.term(n)? * x)
        };
        if !next.is_finite() {
            diverged_at = Some(n + 1);
            break;
        }
        flags.push(next <= b.term(n + 1)? * x);
        values.push(next);
    }
    Ok(OrbitTrace::from_values(values, flags, diverged_at))
}

/// Result of [`delta_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearch {
    pub delta: f64,
    pub trace: OrbitTrace,
}

const BISECTION_STEPS: usize = 60;

/// Largest `x0 <= 1` (to 60 bisection steps) whose mixed orbit keeps every
/// bound flag over `steps` steps.
pub fn delta_search<A, B>(a: &A, b: &B, steps: usize) -> Result<DeltaSearch>
where
    A: LogTerms + ?Sized,
    B: LogTerms + ?Sized,
{
    let ok = |x0: f64| -> Result<bool> {
        let t = mixed_orbit(a, b, x0, steps)?;
        Ok(t.all_flags() && !matches!(t.verdict, OrbitVerdict::Diverged { .. }))
    };
    let delta = if ok(1.0)? {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(DeltaSearch {
        delta,
        trace: mixed_orbit(a, b, delta, steps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruno::{BrunoSequence, LogSequence, SequenceSpec};

    fn two(h: usize) -> BrunoSequence {
        BrunoSequence::constant(2.0, h).unwrap()
    }

    #[test]
    fn boundary_fixed_point() {
        let t = quadratic_orbit(&two(64), 0.5, 30).unwrap();
        assert!(t.values.iter().all(|&x| x == 0.5));
        assert_eq!(t.verdict, OrbitVerdict::Undecided);
    }

    #[test]
    fn below_and_above_threshold() {
        let a = two(64);
        let thr = quadratic_threshold(&a, 1e-12).unwrap().unwrap();
        assert!((thr - 0.5).abs() < 1e-12);
        assert_eq!(quadratic_orbit(&a, 0.49, 30).unwrap().verdict, OrbitVerdict::ConvergedToZero);
        assert!(matches!(
            quadratic_orbit(&a, 0.51, 30).unwrap().verdict,
            OrbitVerdict::Diverged { .. }
        ));
    }

    #[test]
    fn closed_form_agrees() {
        let a = SequenceSpec::PhasePower {
            sign: crate::bruno::PhaseSign::Positive,
            scale: 0.3,
            power: 2.0,
        }
        .bruno(64)
        .unwrap();
        for u0 in [0.01, 0.1, 0.2] {
            let t = quadratic_orbit(&a, u0, 40).unwrap();
            assert!(t.all_flags());
        }
    }

    #[test]
    fn zero_start_stays_zero() {
        let t = quadratic_orbit(&two(10), 0.0, 10).unwrap();
        assert!(t.values.iter().all(|&x| x == 0.0));
        assert_eq!(t.verdict, OrbitVerdict::ConvergedToZero);
        assert!(t.ratios.iter().all(|r| r.is_none()));
    }

    fn geometric(r: f64, h: usize) -> LogSequence {
        SequenceSpec::Geometric { ratio: r }.log_sequence(h).unwrap()
    }

    #[test]
    fn mixed_first_step() {
        let a = geometric(1.1, 31);
        let b = geometric(0.8, 31);
        let t = mixed_orbit(&a, &b, 0.5, 3).unwrap();
        // x_1 = (a_0 x_0^2 + b_0 x_0) / 2 = (0.25 + 0.5) / 2
        assert!((t.values[1] - 0.375).abs() < 1e-15);
        assert!(t.bound_flags[1]);
    }

    #[test]
    fn mixed_zero_orbit() {
        let a = geometric(1.1, 31);
        let b = geometric(0.8, 31);
        let t = mixed_orbit(&a, &b, 0.0, 30).unwrap();
        assert!(t.values.iter().all(|&x| x == 0.0));
        assert!(t.all_flags());
    }

    #[test]
    fn mixed_boundary_pair_fails_base_case() {
        let a = SequenceSpec::Constant { value: 1.0 }.log_sequence(10).unwrap();
        let b = SequenceSpec::DoubleExponential {
            sign: crate::bruno::PhaseSign::Negative,
            base: 2.0,
        }
        .log_sequence(10)
        .unwrap();
        let t = mixed_orbit(&a, &b, 0.01, 5).unwrap();
        assert!((t.values[1] - 0.0018894).abs() < 1e-6);
        assert!(!t.bound_flags[1]);
        assert!((b.term(1).unwrap() * 0.01 - 0.00135335).abs() < 1e-7);
    }

    #[test]
    fn mixed_rejects_non_tame() {
        // lambda * mu = 1 is not tame
        let a = geometric(2.0, 20);
        let b = geometric(0.5, 20);
        assert!(matches!(mixed_orbit(&a, &b, 0.1, 10), Err(Error::NotTame { .. })));
    }

    #[test]
    fn delta_search_geometric() {
        let a = geometric(1.1, 31);
        let b = geometric(0.8, 31);
        let d = delta_search(&a, &b, 30).unwrap();
        assert!(d.delta > 0.0 && d.delta <= 1.0);
        assert!(d.trace.all_flags());
        // x_1 <= b_1 x_0  <=>  x0 <= 2 b_1 - b_0 = 0.6
        assert!(d.delta <= 0.6 + 1e-12);
        let above = mixed_orbit(&a, &b, d.delta * (1.0 + 1e-9), 30).unwrap();
        assert!(!above.all_flags());
    }

    #[test]
    fn csv_columns() {
        let t = quadratic_orbit(&two(10), 0.25, 3).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "n,x_n,ratio,flag");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].ends_with(",,true"));
    }
}
