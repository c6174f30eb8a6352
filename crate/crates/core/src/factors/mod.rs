//! Local, perturbative and KAM factors evaluated in log-domain, radius
//! schedules, and finite-horizon checks of the schedule estimates.
//!
//! Every factor takes its arguments as `(n, s, t)` with inner radius
//! `s < t`.

mod checks;
mod schedule;

pub use checks::{
    geometric_bound_check, kam_schedule, kam_schedule_tame_check, perturbative_bound_check,
    perturbative_radius_search, rho_for_perturbative, BoundFlag, KamTameCheck, PerturbativeCheck,
    RadiusSearch, PERTURBATIVE_BRUNO_TOL,
};
pub use schedule::{schedule_build, schedule_build_with, RadiusPair, RadiusSchedule};

use serde::Serialize;

use crate::bruno::{BrunoSequence, LogTerms};
use crate::error::{Error, Result};

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "exponent {name} must be finite and nonnegative, got {v}"
        )))
    }
}

fn check_positive_phase(name: &str, a: &BrunoSequence) -> Result<()> {
    if a.sign() == crate::bruno::PhaseSign::Negative && a.phases().iter().any(|&u| u > 0.0) {
        return Err(Error::Precondition(format!("{name} must have positive phase")));
    }
    Ok(())
}

/// `x * 2^n` without forming `2^n` beyond the double range.
fn scale_pow2(x: f64, n: usize) -> f64 {
    let n = n.min(2000) as i32;
    if n <= 1000 {
        x * 2f64.powi(n)
    } else {
        x * 2f64.powi(1000) * 2f64.powi(n - 1000)
    }
}

/// `M(s, t) = C s^{-alpha} (t - s)^{-beta}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalFactor {
    c: f64,
    alpha: f64,
    beta: f64,
}

impl LocalFactor {
    pub fn new(c: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Precondition(format!("C must be positive, got {c}")));
        }
        check_exponent("alpha", alpha)?;
        check_exponent("beta", beta)?;
        Ok(Self { c, alpha, beta })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_eval(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.log_eval_pair(&RadiusPair::new(s, t)?))
    }

    pub fn log_eval_pair(&self, p: &RadiusPair) -> f64 {
        self.c.ln() - self.alpha * p.log_inner - self.beta * p.log_gap
    }
}

/// `lambda_n(s, t) = a_n s^{-alpha} (t - s)^{-beta} (s / t)^{2^n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbativeFactor {
    a: BrunoSequence,
    alpha: f64,
    beta: f64,
}

impl PerturbativeFactor {
    pub fn new(a: BrunoSequence, alpha: f64, beta: f64) -> Result<Self> {
        check_positive_phase("a", &a)?;
        check_exponent("alpha", alpha)?;
        check_exponent("beta", beta)?;
        Ok(Self { a, alpha, beta })
    }

    pub fn a(&self) -> &BrunoSequence {
        &self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_eval(&self, n: usize, s: f64, t: f64) -> Result<f64> {
        self.log_eval_pair(n, &RadiusPair::new(s, t)?)
    }

    pub fn log_eval_pair(&self, n: usize, p: &RadiusPair) -> Result<f64> {
        Ok(self.a.log_term(n)? - self.alpha * p.log_inner - self.beta * p.log_gap
            + scale_pow2(p.log_ratio, n))
    }
}

/// The pair `M_n(s, t) = a_n (t - s)^{-k} s^{-q}` and
/// `N_n(s, t) = b_n (t - s)^{-l} s^{-m} e^{2^n (s - t)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KamFactor {
    a: BrunoSequence,
    b: BrunoSequence,
    k: f64,
    q: f64,
    l: f64,
    m: f64,
}

impl KamFactor {
    pub fn new(a: BrunoSequence, b: BrunoSequence, k: f64, q: f64, l: f64, m: f64) -> Result<Self> {
        check_positive_phase("a", &a)?;
        check_positive_phase("b", &b)?;
        for (name, v) in [("k", k), ("q", q), ("l", l), ("m", m)] {
            check_exponent(name, v)?;
        }
        Ok(Self { a, b, k, q, l, m })
    }

    pub fn a(&self) -> &BrunoSequence {
        &self.a
    }

    pub fn b(&self) -> &BrunoSequence {
        &self.b
    }

    pub fn horizon(&self) -> usize {
        self.a.horizon().min(self.b.horizon())
    }

    pub fn log_m_pair(&self, n: usize, p: &RadiusPair) -> Result<f64> {
        Ok(self.a.log_term(n)? - self.k * p.log_gap - self.q * p.log_inner)
    }

    pub fn log_n_pair(&self, n: usize, p: &RadiusPair) -> Result<f64> {
        Ok(self.b.log_term(n)? - self.l * p.log_gap - self.m * p.log_inner
            - scale_pow2(p.gap(), n))
    }

    /// `(log M_n, log N_n)`.
    pub fn log_eval(&self, n: usize, s: f64, t: f64) -> Result<(f64, f64)> {
        self.log_eval_pair(n, &RadiusPair::new(s, t)?)
    }

    pub fn log_eval_pair(&self, n: usize, p: &RadiusPair) -> Result<(f64, f64)> {
        Ok((self.log_m_pair(n, p)?, self.log_n_pair(n, p)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Factor {
    Local(LocalFactor),
    Perturbative(PerturbativeFactor),
    Kam(KamFactor),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FactorLog {
    Single(f64),
    Pair { log_m: f64, log_n: f64 },
}

/// Natural log of a factor at `(n, s, t)`; `n` is ignored by local factors.
pub fn factor_eval(f: &Factor, n: usize, s: f64, t: f64) -> Result<FactorLog> {
    let p = RadiusPair::new(s, t)?;
    Ok(match f {
        Factor::Local(l) => FactorLog::Single(l.log_eval_pair(&p)),
        Factor::Perturbative(l) => FactorLog::Single(l.log_eval_pair(n, &p)?),
        Factor::Kam(k) => {
            let (log_m, log_n) = k.log_eval_pair(n, &p)?;
            FactorLog::Pair { log_m, log_n }
        }
    })
}
