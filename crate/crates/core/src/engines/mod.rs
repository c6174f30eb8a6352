//! Runnable iterations: the Morse normal form, the circle model, Newton and
//! quasi-Newton inversion on series, and generic drivers along radius
//! schedules.

mod circle;
mod drivers;
mod morse;
mod newton;

pub use circle::{circle_run, CircleOptions, CircleRun, HARMONIC_COLUMNS};
pub use drivers::{
    contraction_run, contraction_surrogate, fit_mixed_bound, kam_run, kam_surrogate, DriverRun,
    MixedFit,
};
pub use morse::{morse_run, MorseRun, MorseStep};
pub use newton::{newton_invert, quasi_newton_run, NewtonOptions, NewtonRun};

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::series::{PowerSeries, Scalar};

pub const REPORT_SCHEMA: &str = "scale-iter/report/v1";

/// Default tail tolerance for the convergence verdict.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// An element of a scale of normed spaces, measured at a radius.
pub trait ScaledElement: Clone {
    /// Nondecreasing in `radius`.
    fn norm_at(&self, radius: f64) -> f64;

    fn distance_at(&self, other: &Self, radius: f64) -> Result<f64>;
}

impl ScaledElement for f64 {
    fn norm_at(&self, _radius: f64) -> f64 {
        self.abs()
    }

    fn distance_at(&self, other: &Self, _radius: f64) -> Result<f64> {
        Ok((self - other).abs())
    }
}

/// Sup-bound norm on the disk of the given radius.
impl<S: Scalar> ScaledElement for PowerSeries<S> {
    fn norm_at(&self, radius: f64) -> f64 {
        self.sup_bound(radius)
    }

    fn distance_at(&self, other: &Self, radius: f64) -> Result<f64> {
        Ok(self.sub(other)?.sup_bound(radius))
    }
}

/// Strip `L²` norm of the given half-width.
impl ScaledElement for FourierSeries {
    fn norm_at(&self, radius: f64) -> f64 {
        crate::fourier::strip_l2_norm(self, radius).unwrap_or(f64::NAN)
    }

    fn distance_at(&self, other: &Self, radius: f64) -> Result<f64> {
        crate::fourier::strip_l2_norm(&self.sub(other)?, radius)
    }
}

/// One step `x_n -> x_{n+1}` of an iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub s_n: f64,
    /// `|x_{n+1} - x_n|` at `s_{n+1}`.
    pub step_norm: f64,
    pub residual: Option<f64>,
    pub bound: Option<f64>,
    pub bound_ok: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl StepRecord {
    pub fn new(n: usize, s_n: f64, step_norm: f64) -> Self {
        Self {
            n,
            s_n,
            step_norm,
            residual: None,
            bound: None,
            bound_ok: true,
            extras: BTreeMap::new(),
        }
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    Diverged { step: usize },
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationReport {
    pub schema: String,
    pub engine: String,
    pub records: Vec<StepRecord>,
    pub verdict: Verdict,
    /// `sum_{k <= n} step_norm_k`.
    pub cauchy_sums: Vec<f64>,
    /// Geometric continuation of the last two step norms.
    pub tail_estimate: Option<f64>,
}

/// Estimated `sum_{k > n} |x_{k+1} - x_k|` from the last two step norms;
/// `None` when they do not decrease.
fn tail_estimate(steps: &[f64]) -> Option<f64> {
    match steps {
        [] => Some(0.0),
        [.., last] if *last == 0.0 => Some(0.0),
        [.., prev, last] if last < prev => {
            let r = last / prev;
            Some(last * r / (1.0 - r))
        }
        _ => None,
    }
}

impl IterationReport {
    /// Assembles a report. Records must be numbered contiguously from 0.
    pub fn new(engine: &str, records: Vec<StepRecord>, tol: f64) -> Result<Self> {
        if let Some((i, r)) = records.iter().enumerate().find(|(i, r)| r.n != *i) {
            return Err(Error::Precondition(format!(
                "record {i} carries index {}",
                r.n
            )));
        }
        let steps: Vec<f64> = records.iter().map(|r| r.step_norm).collect();
        let cauchy_sums = steps
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        let tail = tail_estimate(&steps);
        let verdict = if let Some(k) = steps.iter().position(|s| !s.is_finite()) {
            Verdict::Diverged { step: k }
        } else if records.is_empty() {
            Verdict::Undecided
        } else if tail.is_some_and(|t| t + steps[steps.len() - 1] < tol) {
            Verdict::Converged
        } else {
            Verdict::Undecided
        };
        Ok(Self {
            schema: REPORT_SCHEMA.to_string(),
            engine: engine.to_string(),
            records,
            verdict,
            cauchy_sums,
            tail_estimate: tail,
        })
    }

    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    pub fn all_bounds_ok(&self) -> bool {
        self.records.iter().all(|r| r.bound_ok)
    }

    pub fn step_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.step_norm).collect()
    }

    /// Union of the extra column names, sorted.
    pub fn extra_columns(&self) -> Vec<String> {
        let mut keys: Vec<String> = self
            .records
            .iter()
            .flat_map(|r| r.extras.keys().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Columns `n, s_n, step_norm, residual, bound, flag`, then the extra
    /// columns in name order. Missing cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let extras = self.extra_columns();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n", "s_n", "step_norm", "residual", "bound", "flag"];
        header.extend(extras.iter().map(String::as_str));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row = vec![
                r.n.to_string(),
                r.s_n.to_string(),
                r.step_norm.to_string(),
                opt(r.residual),
                opt(r.bound),
                r.bound_ok.to_string(),
            ];
            row.extend(extras.iter().map(|k| opt(r.extra(k))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::Parse(format!("unknown report schema {:?}", report.schema)));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(steps: &[f64]) -> IterationReport {
        let records = steps
            .iter()
            .enumerate()
            .map(|(n, &s)| StepRecord::new(n, 1.0, s))
            .collect();
        IterationReport::new("test", records, 1e-10).unwrap()
    }

    #[test]
    fn verdicts() {
        assert!(report(&[1.0, 1e-6, 1e-12]).converged());
        assert_eq!(report(&[1.0, 2.0, 3.0]).verdict, Verdict::Undecided);
        assert_eq!(report(&[1.0, f64::INFINITY]).verdict, Verdict::Diverged { step: 1 });
        assert!(report(&[0.5, 0.0]).converged());
        assert_eq!(report(&[]).verdict, Verdict::Undecided);
        assert_eq!(report(&[1.0, 0.5, 0.25]).cauchy_sums, vec![1.0, 1.5, 1.75]);
    }

    #[test]
    fn records_must_be_contiguous() {
        let records = vec![StepRecord::new(1, 1.0, 0.0)];
        assert!(IterationReport::new("x", records, 1e-10).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        report(&[]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,s_n,step_norm,residual,bound,flag\n");

        let mut r = StepRecord::new(0, 0.5, 0.25);
        r.extras.insert("valuation".into(), 4.0);
        r.residual = Some(0.1);
        let rep = IterationReport::new("x", vec![r], 1e-10).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,s_n,step_norm,residual,bound,flag,valuation\n0,0.5,0.25,0.1,,true,4\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut r = StepRecord::new(0, 0.5, 0.1 + 0.2);
        r.bound = Some(1e-300);
        r.extras.insert("h1".into(), 2.5e-4);
        let rep = IterationReport::new("x", vec![r, StepRecord::new(1, 0.25, 0.0)], 1e-10).unwrap();
        assert_eq!(IterationReport::from_json_str(&rep.to_json_string()).unwrap(), rep);
    }

    #[test]
    fn element_norms() {
        assert_eq!(ScaledElement::norm_at(&-2.0f64, 0.3), 2.0);
        let f = crate::series::ExactSeries::from_ratios(3, &[(1, 1, 1), (3, 2, 1)]);
        assert!(f.norm_at(0.5) <= f.norm_at(0.6));
        let w = FourierSeries::from_cos_sin(3, 1.0, &[(2, 1.0)], &[]);
        assert!(w.norm_at(0.2) <= w.norm_at(0.3));
    }
}
