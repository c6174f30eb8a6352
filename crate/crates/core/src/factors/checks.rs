use serde::Serialize;

use super::schedule::{schedule_build_with, RadiusSchedule};
use super::{KamFactor, LocalFactor, PerturbativeFactor};
use crate::bruno::{
    is_bruno, is_tame, log_le, BrunoSequence, LogSequence, LogTerms, PhaseSign, ScheduleExponent,
    SequenceSpec, TameReport,
};
use crate::error::{Error, Result};

use std::f64::consts::LN_2;

/// Tail-phase tolerance used to accept the sequence built by
/// [`rho_for_perturbative`] as Bruno.
pub const PERTURBATIVE_BRUNO_TOL: f64 = 0.1;

/// Value substituted for terms of [`rho_for_perturbative`] at or above `1/2`.
const RHO_CLIP: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundFlag {
    pub n: usize,
    pub log_value: f64,
    pub log_bound: f64,
    pub holds: bool,
}

/// Compares `M(s_{n+1}, s_n)` with `C 2^{beta(n+1)} (t rho_pi)^{-alpha-beta}`
/// at every step of the schedule.
pub fn geometric_bound_check(f: &LocalFactor, sched: &RadiusSchedule) -> Result<Vec<BoundFlag>> {
    let log_t_rho_pi = sched.log_t_rho_pi()?;
    (0..sched.steps())
        .map(|n| {
            let log_value = f.log_eval_pair(&sched.pair(n)?);
            let log_bound = f.c().ln() + f.beta() * (n as f64 + 1.0) * LN_2
                - (f.alpha() + f.beta()) * log_t_rho_pi;
            Ok(BoundFlag {
                n,
                log_value,
                log_bound,
                holds: log_le(log_value, log_bound),
            })
        })
        .collect()
}

/// `rho_n = 2^{-beta(n+1) - n} a_n^{-1} b_n`, with terms at or above `1/2`
/// replaced by `1/4`.
///
/// Built on the phase: `u^rho_n = (beta(n+1) + n) ln2 / 2^n + u^a_n + u^b_n`.
pub fn rho_for_perturbative(f: &PerturbativeFactor, b: &BrunoSequence) -> Result<BrunoSequence> {
    if b.sign() == PhaseSign::Positive && b.phases().iter().any(|&u| u > 0.0) {
        return Err(Error::Precondition("b must have negative phase".into()));
    }
    let horizon = f.a().horizon().min(b.horizon());
    let mut phases = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let scale = 0.5f64.powi(n as i32);
        let u = (f.beta() * (n as f64 + 1.0) + n as f64) * LN_2 * scale
            + f.a().log_term(n)? * scale
            - b.log_term(n)? * scale;
        // rho_n >= 1/2  <=>  2^n u_n <= ln 2
        let u = if u * 2f64.powi(n as i32) <= LN_2 {
            -RHO_CLIP.ln() * scale
        } else {
            u
        };
        phases.push(u);
    }
    let rho = BrunoSequence::from_phases(PhaseSign::Negative, phases)?;
    if horizon >= 2 && !is_bruno(&rho, horizon, PERTURBATIVE_BRUNO_TOL)? {
        return Err(Error::InvalidSequence(format!(
            "perturbative radius sequence is not Bruno within horizon {horizon}"
        )));
    }
    Ok(rho)
}

/// Evaluation of `lambda_n(s_{n+1}, s_n) <= b_n` along a schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbativeCheck {
    pub horizon: usize,
    /// Least `N` with the bound holding for all `N <= n <= horizon`.
    pub first_index: Option<usize>,
    pub holds: Vec<bool>,
    pub log_lambda: Vec<f64>,
    pub log_b: Vec<f64>,
    /// `lambda_n <= s_inf^{-alpha-beta} 2^{-n} b_n`.
    pub majorant_holds: Vec<bool>,
}

impl PerturbativeCheck {
    /// The bound holds on the upper half `[horizon / 2, horizon]`.
    pub fn passes(&self) -> bool {
        self.first_index.is_some_and(|n| n <= self.horizon / 2)
    }
}

/// Evaluates the perturbative bound for `0 <= n <= horizon`; the schedule
/// needs at least `horizon + 1` steps.
pub fn perturbative_bound_check(
    f: &PerturbativeFactor,
    b: &BrunoSequence,
    sched: &RadiusSchedule,
    horizon: usize,
) -> Result<PerturbativeCheck> {
    let mut holds = Vec::with_capacity(horizon + 1);
    let mut log_lambda = Vec::with_capacity(horizon + 1);
    let mut log_b = Vec::with_capacity(horizon + 1);
    let mut majorant_holds = Vec::with_capacity(horizon + 1);
    let weight = f.alpha() + f.beta();
    for n in 0..=horizon {
        let l = f.log_eval_pair(n, &sched.pair(n)?)?;
        let lb = b.log_term(n)?;
        let majorant = -weight * sched.log_s_inf() - n as f64 * LN_2 + lb;
        holds.push(log_le(l, lb));
        majorant_holds.push(log_le(l, majorant));
        log_lambda.push(l);
        log_b.push(lb);
    }
    let suffix = holds.iter().rev().take_while(|&&h| h).count();
    Ok(PerturbativeCheck {
        horizon,
        first_index: (suffix > 0).then(|| horizon + 1 - suffix),
        holds,
        log_lambda,
        log_b,
        majorant_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusSearch {
    pub t: f64,
    pub halvings: usize,
    pub schedule: RadiusSchedule,
    pub check: PerturbativeCheck,
}

/// Halves `t` starting from `t0` until the perturbative bound holds on the
/// upper half of the horizon. Uses the absorb-exponent schedule built from
/// [`rho_for_perturbative`].
pub fn perturbative_radius_search(
    f: &PerturbativeFactor,
    b: &BrunoSequence,
    t0: f64,
    horizon: usize,
    max_halvings: usize,
) -> Result<RadiusSearch> {
    let rho = rho_for_perturbative(f, b)?;
    let mut t = t0;
    for halvings in 0..=max_halvings {
        let schedule = schedule_build_with(t, &rho, horizon + 1, ScheduleExponent::Absorb)?;
        let check = perturbative_bound_check(f, b, &schedule, horizon)?;
        if check.passes() {
            return Ok(RadiusSearch {
                t,
                halvings,
                schedule,
                check,
            });
        }
        t *= 0.5;
    }
    Err(Error::NoIndex { horizon })
}

/// The KAM schedule: `rho` with negative phase `1 / n^{1+eps}` (read as
/// `1` at `n = 0`), absorb exponent, `horizon + 1` steps.
pub fn kam_schedule(eps: f64, t: f64, horizon: usize) -> Result<RadiusSchedule> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    let rho = SequenceSpec::PhasePower {
        sign: PhaseSign::Negative,
        scale: 1.0,
        power: 1.0 + eps,
    }
    .bruno(horizon)?;
    schedule_build_with(t, &rho, horizon + 1, ScheduleExponent::Absorb)
}

/// The KAM pair evaluated along [`kam_schedule`] with its tameness and
/// the comparison `N_n < c_n = e^{-2^n / n^{c_phase_exponent}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KamTameCheck {
    pub schedule: RadiusSchedule,
    pub log_m: Vec<f64>,
    pub log_n: Vec<f64>,
    pub tame: TameReport,
    pub log_c: Vec<f64>,
    pub c_flags: Vec<bool>,
    /// Least index from which every `c_flags` entry holds.
    pub c_index: Option<usize>,
}

impl KamTameCheck {
    pub fn c_holds_from(&self, n: usize) -> bool {
        self.c_index.is_some_and(|c| c <= n)
    }
}

pub fn kam_schedule_tame_check(
    k: &KamFactor,
    eps: f64,
    t: f64,
    c_phase_exponent: f64,
    horizon: usize,
) -> Result<KamTameCheck> {
    let delta = c_phase_exponent - 1.0;
    if delta.is_nan() || delta <= eps {
        return Err(Error::Precondition(format!(
            "c phase exponent {c_phase_exponent} must exceed 1 + eps = {}",
            1.0 + eps
        )));
    }
    let schedule = kam_schedule(eps, t, horizon)?;
    let mut log_m = Vec::with_capacity(horizon + 1);
    let mut log_n = Vec::with_capacity(horizon + 1);
    let mut log_c = Vec::with_capacity(horizon + 1);
    let mut c_flags = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let (m, nn) = k.log_eval_pair(n, &schedule.pair(n)?)?;
        let c = -2f64.powi(n as i32) / (n.max(1) as f64).powf(c_phase_exponent);
        log_m.push(m);
        log_n.push(nn);
        log_c.push(c);
        c_flags.push(nn < c);
    }
    let tame = is_tame(
        &LogSequence::new(log_m.clone())?,
        &LogSequence::new(log_n.clone())?,
        horizon,
    )?;
    let suffix = c_flags.iter().rev().take_while(|&&h| h).count();
    Ok(KamTameCheck {
        schedule,
        log_m,
        log_n,
        tame,
        log_c,
        c_flags,
        c_index: (suffix > 0).then(|| horizon + 1 - suffix),
    })
}
