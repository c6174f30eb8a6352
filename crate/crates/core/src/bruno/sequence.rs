//! Positive sequences stored in log-domain.
//!
//! Terms such as `e^{2^40}` are never formed as linear floats: a
//! [`BrunoSequence`] keeps its phase `u_n = |log a_n| / 2^n` and a
//! [`LogSequence`] keeps `log a_n` directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the phase: `a_n = e^{+2^n u_n}` or `a_n = e^{-2^n u_n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSign {
    Positive,
    Negative,
}

impl PhaseSign {
    pub fn factor(self) -> f64 {
        match self {
            PhaseSign::Positive => 1.0,
            PhaseSign::Negative => -1.0,
        }
    }
}

/// Read access to the natural logarithms of a positive sequence.
pub trait LogTerms {
    /// Largest materialized index.
    fn horizon(&self) -> usize;

    fn log_term(&self, n: usize) -> Result<f64>;

    /// `log(a_n) / 2^{n+1}`, the summand of the log Bruno transform.
    fn weighted_log_term(&self, n: usize) -> Result<f64> {
        Ok(self.log_term(n)? * 0.5f64.powi(n as i32 + 1))
    }

    fn term(&self, n: usize) -> Result<f64> {
        Ok(self.log_term(n)?.exp())
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.horizon() {
            Err(Error::HorizonExceeded {
                index: n,
                horizon: self.horizon(),
            })
        } else {
            Ok(())
        }
    }
}

/// An arbitrary positive sequence, materialized as `log a_0 ..= log a_horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSequence {
    log_terms: Vec<f64>,
}

impl LogSequence {
    pub fn new(log_terms: Vec<f64>) -> Result<Self> {
        if log_terms.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if let Some(i) = log_terms.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSequence(format!(
                "log term {i} is not finite"
            )));
        }
        Ok(Self { log_terms })
    }

    /// Builds from linear-scale terms, which must be positive and finite.
    pub fn from_terms(terms: &[f64]) -> Result<Self> {
        if let Some(i) = terms.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSequence(format!(
                "term {i} = {} is not a positive finite number",
                terms[i]
            )));
        }
        Self::new(terms.iter().map(|v| v.ln()).collect())
    }

    pub fn log_terms(&self) -> &[f64] {
        &self.log_terms
    }
}

impl LogTerms for LogSequence {
    fn horizon(&self) -> usize {
        self.log_terms.len() - 1
    }

    fn log_term(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.log_terms[n])
    }
}

/// A sequence `a_n = e^{±2^n u_n}` with nonnegative phase `u_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrunoSequence {
    sign: PhaseSign,
    phases: Vec<f64>,
}

impl BrunoSequence {
    pub fn from_phases(sign: PhaseSign, phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidSequence("empty phase sequence".into()));
        }
        if let Some(i) = phases.iter().position(|&u| !(u >= 0.0 && u.is_finite())) {
            return Err(Error::InvalidSequence(format!(
                "phase {i} = {} is not a nonnegative finite number",
                phases[i]
            )));
        }
        Ok(Self { sign, phases })
    }

    /// Recovers sign and phase from `log a_n`. Mixed signs are rejected;
    /// zero log-terms fit either sign.
    pub fn from_log_terms(log_terms: &[f64]) -> Result<Self> {
        let has_pos = log_terms.iter().any(|&v| v > 0.0);
        let has_neg = log_terms.iter().any(|&v| v < 0.0);
        if has_pos && has_neg {
            return Err(Error::InvalidSequence(
                "terms lie on both sides of 1; phase sign is not fixed".into(),
            ));
        }
        let sign = if has_neg {
            PhaseSign::Negative
        } else {
            PhaseSign::Positive
        };
        let phases = log_terms
            .iter()
            .enumerate()
            .map(|(n, v)| v.abs() * 0.5f64.powi(n as i32))
            .collect();
        Self::from_phases(sign, phases)
    }

    pub fn constant(value: f64, horizon: usize) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidSequence(format!(
                "constant {value} is not positive and finite"
            )));
        }
        Self::from_log_terms(&vec![value.ln(); horizon + 1])
    }

    pub fn sign(&self) -> PhaseSign {
        self.sign
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.phases[n])
    }

    pub fn to_log_sequence(&self) -> Result<LogSequence> {
        let logs = (0..=self.horizon())
            .map(|n| self.log_term(n))
            .collect::<Result<Vec<_>>>()?;
        LogSequence::new(logs)
    }

    /// Same phases, truncated to a smaller horizon.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        self.check_index(horizon)?;
        Ok(Self {
            sign: self.sign,
            phases: self.phases[..=horizon].to_vec(),
        })
    }
}

impl LogTerms for BrunoSequence {
    fn horizon(&self) -> usize {
        self.phases.len() - 1
    }

    fn log_term(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        if self.phases[n] == 0.0 {
            return Ok(0.0);
        }
        let v = self.sign.factor() * self.phases[n] * 2f64.powi(n as i32);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidSequence(format!(
                "log term {n} overflows the double range"
            )))
        }
    }

    fn weighted_log_term(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(0.5 * self.sign.factor() * self.phases[n])
    }
}

fn one() -> f64 {
    1.0
}

/// Declarative description of a sequence, as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// `a_n = value`.
    Constant { value: f64 },
    /// Phase `u_n = scale / max(n, 1)^power` with the given sign.
    PhasePower {
        sign: PhaseSign,
        #[serde(default = "one")]
        scale: f64,
        power: f64,
    },
    /// `a_n = ratio^n`.
    Geometric { ratio: f64 },
    /// `a_n = e^{± base^n}`.
    DoubleExponential { sign: PhaseSign, base: f64 },
    /// Listed terms, either linear or as logarithms.
    Explicit {
        #[serde(default)]
        terms: Vec<f64>,
        #[serde(default)]
        log_terms: Vec<f64>,
    },
}

impl SequenceSpec {
    pub fn log_sequence(&self, horizon: usize) -> Result<LogSequence> {
        let logs: Vec<f64> = match self {
            SequenceSpec::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::InvalidSequence(format!(
                        "constant {value} is not positive and finite"
                    )));
                }
                vec![value.ln(); horizon + 1]
            }
            SequenceSpec::PhasePower { .. } => {
                return self.bruno(horizon)?.to_log_sequence();
            }
            SequenceSpec::Geometric { ratio } => {
                if !(*ratio > 0.0 && ratio.is_finite()) {
                    return Err(Error::InvalidSequence(format!(
                        "geometric ratio {ratio} is not positive"
                    )));
                }
                (0..=horizon).map(|n| n as f64 * ratio.ln()).collect()
            }
            SequenceSpec::DoubleExponential { sign, base } => {
                if !(*base > 0.0 && base.is_finite()) {
                    return Err(Error::InvalidSequence(format!(
                        "double-exponential base {base} is not positive"
                    )));
                }
                (0..=horizon)
                    .map(|n| sign.factor() * base.powi(n as i32))
                    .collect()
            }
            SequenceSpec::Explicit { terms, log_terms } => {
                let logs = match (terms.is_empty(), log_terms.is_empty()) {
                    (false, true) => LogSequence::from_terms(terms)?.log_terms,
                    (true, false) => log_terms.clone(),
                    _ => {
                        return Err(Error::InvalidSequence(
                            "explicit sequence needs exactly one of `terms` or `log_terms`".into(),
                        ))
                    }
                };
                if logs.len() < horizon + 1 {
                    return Err(Error::HorizonExceeded {
                        index: horizon,
                        horizon: logs.len() - 1,
                    });
                }
                logs[..=horizon].to_vec()
            }
        };
        LogSequence::new(logs)
    }

    pub fn bruno(&self, horizon: usize) -> Result<BrunoSequence> {
        match self {
            SequenceSpec::PhasePower { sign, scale, power } => {
                if !(*scale >= 0.0 && scale.is_finite() && power.is_finite()) {
                    return Err(Error::InvalidSequence(format!(
                        "phase-power needs finite scale >= 0 and finite power (got {scale}, {power})"
                    )));
                }
                let phases = (0..=horizon)
                    .map(|n| scale / (n.max(1) as f64).powf(*power))
                    .collect();
                BrunoSequence::from_phases(*sign, phases)
            }
            _ => BrunoSequence::from_log_terms(self.log_sequence(horizon)?.log_terms()),
        }
    }
}
