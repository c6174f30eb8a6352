use std::io::Write;

use serde::Serialize;

use crate::bruno::{log_bruno_transform, BrunoSequence, LogTerms, ScheduleExponent};
use crate::error::{Error, Result};

/// An inner/outer radius pair `0 < s < t` kept in log-domain.
///
/// `log_ratio = log(s / t)` and `log_gap = log(t - s)` are stored separately
/// so that pairs taken from a schedule keep full relative precision even
/// when `s` and `t` agree to many digits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusPair {
    pub log_inner: f64,
    pub log_outer: f64,
    pub log_ratio: f64,
    pub log_gap: f64,
}

impl RadiusPair {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(s > 0.0 && s < t && t.is_finite()) {
            return Err(Error::InvalidRadii { inner: s, outer: t });
        }
        Ok(Self {
            log_inner: s.ln(),
            log_outer: t.ln(),
            log_ratio: (s / t).ln(),
            log_gap: (t - s).ln(),
        })
    }

    pub fn inner(&self) -> f64 {
        self.log_inner.exp()
    }

    pub fn outer(&self) -> f64 {
        self.log_outer.exp()
    }

    pub fn gap(&self) -> f64 {
        self.log_gap.exp()
    }
}

/// Decreasing radii `s_0 = t`, `s_{n+1} = rho_n^{1/2^{n+shift}} s_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusSchedule {
    t: f64,
    rho: BrunoSequence,
    exponent: ScheduleExponent,
    step_logs: Vec<f64>,
    log_radii: Vec<f64>,
    radii: Vec<f64>,
    log_s_inf: f64,
    s_inf: f64,
}

/// Builds `steps` steps of the standard schedule, `s_inf = t rho_pi`.
pub fn schedule_build(t: f64, rho: &BrunoSequence, steps: usize) -> Result<RadiusSchedule> {
    schedule_build_with(t, rho, steps, ScheduleExponent::Standard)
}

/// Builds a schedule with the given root exponent. Every materialized term
/// of `rho` must lie below `1/2`; `s_inf` uses all of them.
pub fn schedule_build_with(
    t: f64,
    rho: &BrunoSequence,
    steps: usize,
    exponent: ScheduleExponent,
) -> Result<RadiusSchedule> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("outer radius must be positive, got {t}")));
    }
    if steps > 0 {
        rho.check_index(steps - 1)?;
    }
    let ln_half = -std::f64::consts::LN_2;
    let mut all_steps = Vec::with_capacity(rho.horizon() + 1);
    for n in 0..=rho.horizon() {
        let u = rho.phase(n)?;
        let log_term = rho.sign().factor() * u * 2f64.powi(n as i32);
        if log_term.is_nan() || log_term >= ln_half {
            return Err(Error::RhoTooLarge { index: n, log_term });
        }
        // log(rho_n) / 2^{n+shift} = -u_n / 2^shift
        all_steps.push(-u * 0.5f64.powi(exponent.shift()));
    }

    let ln_t = t.ln();
    let mut cum = 0.0;
    let mut log_radii = vec![ln_t];
    let mut radii = vec![t];
    for &step in &all_steps[..steps] {
        cum += step;
        log_radii.push(ln_t + cum);
        radii.push(t * cum.exp());
    }
    let total: f64 = all_steps.iter().sum();
    Ok(RadiusSchedule {
        t,
        rho: rho.clone(),
        exponent,
        step_logs: all_steps[..steps].to_vec(),
        log_radii,
        radii,
        log_s_inf: ln_t + total,
        s_inf: t * total.exp(),
    })
}

impl RadiusSchedule {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn rho(&self) -> &BrunoSequence {
        &self.rho
    }

    pub fn exponent(&self) -> ScheduleExponent {
        self.exponent
    }

    pub fn steps(&self) -> usize {
        self.step_logs.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn log_radii(&self) -> &[f64] {
        &self.log_radii
    }

    pub fn radius(&self, n: usize) -> Result<f64> {
        self.radii.get(n).copied().ok_or(Error::HorizonExceeded {
            index: n,
            horizon: self.steps(),
        })
    }

    pub fn log_radius(&self, n: usize) -> Result<f64> {
        self.log_radii.get(n).copied().ok_or(Error::HorizonExceeded {
            index: n,
            horizon: self.steps(),
        })
    }

    /// `log(s_{n+1} / s_n)`.
    pub fn step_log(&self, n: usize) -> Result<f64> {
        self.step_logs.get(n).copied().ok_or(Error::HorizonExceeded {
            index: n,
            horizon: self.steps().saturating_sub(1),
        })
    }

    pub fn s_inf(&self) -> f64 {
        self.s_inf
    }

    pub fn log_s_inf(&self) -> f64 {
        self.log_s_inf
    }

    /// `log(t rho_pi)` over the materialized horizon of `rho`. Equals
    /// `log_s_inf` for the standard exponent.
    pub fn log_t_rho_pi(&self) -> Result<f64> {
        Ok(self.t.ln() + log_bruno_transform(&self.rho, self.rho.horizon())?)
    }

    /// The pair `(s_{n+1}, s_n)` with `t - s = s_n (1 - e^{step})` evaluated
    /// through `expm1`.
    pub fn pair(&self, n: usize) -> Result<RadiusPair> {
        let step = self.step_log(n)?;
        let log_outer = self.log_radii[n];
        Ok(RadiusPair {
            log_inner: self.log_radii[n + 1],
            log_outer,
            log_ratio: step,
            log_gap: log_outer + (-step.exp_m1()).ln(),
        })
    }

    /// Writes `n, s_n, log_factor_value, flag`. `log_values` and `flags` may
    /// be shorter than the radii; missing cells are left empty.
    pub fn write_csv<W: Write>(&self, log_values: &[f64], flags: &[bool], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "s_n", "log_factor_value", "flag"])?;
        for (n, s) in self.radii.iter().enumerate() {
            w.write_record([
                n.to_string(),
                s.to_string(),
                log_values.get(n).map(|v| v.to_string()).unwrap_or_default(),
                flags.get(n).map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
