//! Bruno sequences, their transforms, tame pairs and the scalar iteration
//! models `u_{n+1} = a_n u_n^2` and `x_{n+1} = (a_n x_n^2 + b_n x_n) / 2`.

mod orbit;
mod sequence;
mod tame;

pub use orbit::{
    delta_search, mixed_orbit, quadratic_orbit, quadratic_threshold, DeltaSearch, OrbitTrace,
    OrbitVerdict, ZERO_FLOOR,
};
pub use sequence::{BrunoSequence, LogSequence, LogTerms, PhaseSign, SequenceSpec};
pub use tame::{is_tame, TameReport, Violation, ViolationKind};
pub(crate) use tame::log_le;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-domain Cauchy tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Root taken of `rho_n` in one schedule step: `rho_n^{1/2^{n+1}}` or
/// `rho_n^{1/2^n}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleExponent {
    /// `s_{n+1} = rho_n^{1/2^{n+1}} s_n`, so that `s_inf = t rho_pi`.
    #[default]
    Standard,
    /// `s_{n+1} = rho_n^{1/2^n} s_n`, the exponent of the absorb inequality.
    Absorb,
}

impl ScheduleExponent {
    /// Extra halvings on top of `1/2^n`.
    pub fn shift(self) -> i32 {
        match self {
            ScheduleExponent::Standard => 1,
            ScheduleExponent::Absorb => 0,
        }
    }

    /// `log(rho_n) / 2^{n + shift}`.
    pub fn step_log(self, log_rho: f64, n: usize) -> f64 {
        log_rho * 0.5f64.powi(n as i32 + self.shift())
    }
}

/// `log` of the n-th partial product `prod_{k<=n} a_k^{1/2^{k+1}}`.
pub fn log_bruno_transform<S: LogTerms + ?Sized>(a: &S, n: usize) -> Result<f64> {
    a.check_index(n)?;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += a.weighted_log_term(k)?;
    }
    Ok(acc)
}

/// The n-th term of the Bruno transform. May be `inf` when the log exceeds
/// the double range; use [`log_bruno_transform`] in that case.
pub fn bruno_transform<S: LogTerms + ?Sized>(a: &S, n: usize) -> Result<f64> {
    Ok(log_bruno_transform(a, n)?.exp())
}

/// Result of [`a_pi`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct APi {
    pub limit: f64,
    pub log_limit: f64,
    pub converged: bool,
}

/// Infinite Bruno product `a_pi`, approximated by the last partial product.
///
/// Converged when every increment of the partial log-products over the
/// trailing window (the last `max(1, horizon / 8)` indices) is below `tol`.
pub fn a_pi<S: LogTerms + ?Sized>(a: &S, tol: f64) -> Result<APi> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition(format!("tol must be positive, got {tol}")));
    }
    let horizon = a.horizon();
    let window = (horizon / 8).max(1);
    let mut acc = 0.0;
    let mut converged = horizon >= 1;
    for k in 0..=horizon {
        let inc = a.weighted_log_term(k)?;
        acc += inc;
        if k + window > horizon && (inc.is_nan() || inc.abs() >= tol) {
            converged = false;
        }
    }
    Ok(APi {
        limit: acc.exp(),
        log_limit: acc,
        converged,
    })
}

/// Summability test on the phase: the phase mass over the upper half of the
/// window, `sum_{horizon/2 < n <= horizon} u_n`, must be below `tol`.
pub fn is_bruno(a: &BrunoSequence, horizon: usize, tol: f64) -> Result<bool> {
    if horizon < 2 {
        return Err(Error::Precondition(format!(
            "is_bruno needs horizon >= 2, got {horizon}"
        )));
    }
    a.check_index(horizon)?;
    let tail: f64 = a.phases()[horizon / 2 + 1..=horizon].iter().sum();
    Ok(tail < tol)
}

/// One evaluation of the absorb inequality `1 - rho_n^{1/2^{n+shift}} >= 2^{-(n+1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the absorb inequality for a negative-phase sequence with
/// `rho_n <= 1/2`. With [`ScheduleExponent::Absorb`] the root is `1/2^n`.
///
/// `rho_n^{1/2^n} = e^{-u_n}`, so the left side is `-expm1(-u_n / 2^shift)`
/// and no power of two is ever formed.
pub fn absorb_check(rho: &BrunoSequence, n: usize, exponent: ScheduleExponent) -> Result<AbsorbCheck> {
    if rho.sign() != PhaseSign::Negative && rho.phase(n)? > 0.0 {
        return Err(Error::Precondition("absorb needs a negative-phase sequence".into()));
    }
    let u = rho.phase(n)?;
    // rho_n <= 1/2  <=>  2^n u_n >= ln 2
    if u * 2f64.powi(n as i32) < std::f64::consts::LN_2 * (1.0 - 1e-15) {
        return Err(Error::RhoTooLarge {
            index: n,
            log_term: -u * 2f64.powi(n as i32),
        });
    }
    let lhs = -(-u * 0.5f64.powi(exponent.shift())).exp_m1();
    let rhs = 0.5f64.powi(n as i32 + 1);
    Ok(AbsorbCheck {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, h: usize) -> BrunoSequence {
        BrunoSequence::constant(v, h).unwrap()
    }

    #[test]
    fn transform_identity() {
        assert_eq!(bruno_transform(&constant(1.0, 20), 10).unwrap(), 1.0);
    }

    #[test]
    fn transform_constant_four() {
        // 4^{1 - 2^{-(n+1)}} at n = 1
        let v = bruno_transform(&constant(4.0, 20), 1).unwrap();
        assert!((v - 4f64.powf(0.75)).abs() < 1e-14);
        assert!((v - 2.8284271247461903).abs() < 1e-12);
    }

    #[test]
    fn transform_unit_phase_grows_linearly() {
        let a = BrunoSequence::from_phases(PhaseSign::Positive, vec![1.0; 41]).unwrap();
        for n in [0usize, 5, 40] {
            let l = log_bruno_transform(&a, n).unwrap();
            assert!((l - (n as f64 + 1.0) / 2.0).abs() < 1e-12);
        }
        assert!(bruno_transform(&a, 41).is_err());
    }

    #[test]
    fn transform_is_monotone_with_fixed_sign() {
        let pos = SequenceSpec::PhasePower {
            sign: PhaseSign::Positive,
            scale: 1.0,
            power: 2.0,
        }
        .bruno(30)
        .unwrap();
        let neg = constant(0.25, 30);
        for n in 1..=30 {
            assert!(bruno_transform(&pos, n).unwrap() >= bruno_transform(&pos, n - 1).unwrap());
            assert!(bruno_transform(&neg, n).unwrap() <= bruno_transform(&neg, n - 1).unwrap());
        }
    }

    #[test]
    fn a_pi_examples() {
        let one = a_pi(&constant(1.0, 64), DEFAULT_TOL).unwrap();
        assert_eq!(one.limit, 1.0);
        assert!(one.converged);

        let four = a_pi(&constant(4.0, 64), DEFAULT_TOL).unwrap();
        assert!(four.converged);
        assert!((four.limit - 4.0).abs() < 1e-12);

        let div = BrunoSequence::from_phases(PhaseSign::Positive, vec![1.0; 65]).unwrap();
        assert!(!a_pi(&div, DEFAULT_TOL).unwrap().converged);
    }

    #[test]
    fn is_bruno_examples() {
        let inv_sq = SequenceSpec::PhasePower {
            sign: PhaseSign::Positive,
            scale: 1.0,
            power: 2.0,
        }
        .bruno(1000)
        .unwrap();
        assert!(is_bruno(&inv_sq, 1000, 0.01).unwrap());

        let harmonic = SequenceSpec::PhasePower {
            sign: PhaseSign::Positive,
            scale: 1.0,
            power: 1.0,
        }
        .bruno(1000)
        .unwrap();
        assert!(!is_bruno(&harmonic, 1000, 0.01).unwrap());

        let flat = BrunoSequence::from_phases(PhaseSign::Positive, vec![1.0; 101]).unwrap();
        assert!(!is_bruno(&flat, 100, 0.01).unwrap());

        assert!(is_bruno(&constant(0.25, 60), 60, 1e-6).unwrap());
        assert!(is_bruno(&constant(0.25, 60), 1, 1.0).is_err());
    }

    #[test]
    fn absorb_equality_at_half() {
        let rho = constant(0.5, 3);
        let c = absorb_check(&rho, 0, ScheduleExponent::Absorb).unwrap();
        assert!((c.lhs - 0.5).abs() < 1e-15);
        assert_eq!(c.rhs, 0.5);
    }

    #[test]
    fn absorb_rejects_large_terms() {
        let rho = constant(0.6, 3);
        assert!(matches!(
            absorb_check(&rho, 1, ScheduleExponent::Absorb),
            Err(Error::RhoTooLarge { index: 1, .. })
        ));
    }

    #[test]
    fn absorb_standard_exponent_can_fail_near_half() {
        // 1 - 2^{-1/2^{n+1}} ~ ln2 / 2^{n+1} < 2^{-(n+1)}
        let rho = constant(0.5, 10);
        let c = absorb_check(&rho, 10, ScheduleExponent::Standard).unwrap();
        assert!(!c.holds);
        let c = absorb_check(&rho, 10, ScheduleExponent::Absorb).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn exponent_step_log() {
        assert_eq!(ScheduleExponent::Standard.step_log(-4.0, 1), -1.0);
        assert_eq!(ScheduleExponent::Absorb.step_log(-4.0, 1), -2.0);
    }
}
