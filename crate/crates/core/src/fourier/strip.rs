use std::io::Write;

use super::FourierSeries;
use crate::bruno::log_le;
use crate::error::{Error, Result};

/// `ln sinh x` for `x > 0`, stable for large and small arguments.
pub fn log_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
}

/// Log of the strip weight of harmonic `k`: `2t` for `k = 0`, otherwise
/// `sinh(2|k|t)/|k|`.
pub fn log_strip_weight(k: i64, t: f64) -> f64 {
    if k == 0 {
        (2.0 * t).ln()
    } else {
        let k = k.unsigned_abs() as f64;
        log_sinh(2.0 * k * t) - k.ln()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl FourierSeries {
    /// Log of the `L²` norm on the strip `|Im θ| < t`, normalized so that
    /// `dθ` has norm `sqrt(2t)`.
    pub fn log_strip_norm(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Precondition(format!("strip width must be positive, got {t}")));
        }
        let lse = log_sum_exp(
            self.support()
                .map(|(k, c)| 2.0 * c.norm().ln() + log_strip_weight(k, t)),
        );
        Ok(0.5 * lse)
    }

    /// Rows of the strip norm computation, one per harmonic.
    pub fn norm_table(&self, t: f64) -> Vec<NormRow> {
        let cap = self.cap() as i64;
        (-cap..=cap)
            .map(|k| {
                let modulus = self.coeff(k).norm();
                let log_weight = log_strip_weight(k, t);
                NormRow {
                    k,
                    modulus,
                    weight: log_weight.exp(),
                    contribution: (2.0 * modulus.ln() + log_weight).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRow {
    pub k: i64,
    pub modulus: f64,
    pub weight: f64,
    pub contribution: f64,
}

impl NormRow {
    pub fn write_csv<W: Write>(rows: &[NormRow], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "abs_c_k", "weight", "contribution"])?;
        for r in rows {
            w.write_record([
                r.k.to_string(),
                r.modulus.to_string(),
                r.weight.to_string(),
                r.contribution.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Strip norm of `w` at width `t`.
pub fn strip_l2_norm(w: &FourierSeries, t: f64) -> Result<f64> {
    Ok(w.log_strip_norm(t)?.exp())
}

/// Whether `sinh(2ks)/sinh(2kt)` strictly decreases over `k = kmin ..= kmax`.
pub fn sinh_ratio_decreasing(s: f64, t: f64, kmin: u64, kmax: u64) -> bool {
    let log_ratio = |k: u64| {
        let k = k as f64;
        log_sinh(2.0 * k * s) - log_sinh(2.0 * k * t)
    };
    (kmin.max(1)..kmax).all(|k| log_ratio(k + 1) < log_ratio(k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCheck {
    /// `|w|_s / |w|_t`.
    pub ratio: f64,
    /// `e^{2^{n-1}(s - t)}`.
    pub bound: f64,
    pub ok: bool,
    /// The sinh ratio decreases over the harmonics `2^n ..= cap`.
    pub monotone: bool,
}

/// Tail estimate for a form supported on `|k| >= 2^n`, `0 < s < t`.
pub fn tail_decay_check(w: &FourierSeries, n: u32, s: f64, t: f64) -> Result<TailCheck> {
    if !(0.0 < s && s < t) {
        return Err(Error::InvalidRadii { inner: s, outer: t });
    }
    let low = 1u64.checked_shl(n).unwrap_or(u64::MAX);
    if let Some((k, _)) = w.support().find(|(k, _)| k.unsigned_abs() < low) {
        return Err(Error::SupportViolation { harmonic: k, n });
    }
    let log_bound = (n as f64 - 1.0).exp2() * (s - t);
    let log_t = w.log_strip_norm(t)?;
    let log_ratio = if log_t == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        w.log_strip_norm(s)? - log_t
    };
    Ok(TailCheck {
        ratio: log_ratio.exp(),
        bound: log_bound.exp(),
        ok: log_le(log_ratio, log_bound),
        monotone: sinh_ratio_decreasing(s, t, low, (w.cap() as u64).max(low)),
    })
}
