use super::{IterationReport, StepRecord, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::fourier::{oneform_lie_exp, solve_homological, strip_l2_norm, FourierSeries, OneForm};

/// Harmonics reported as per-step magnitude columns.
pub const HARMONIC_COLUMNS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleOptions {
    /// Strip half-width at which norms are taken.
    pub width: f64,
    /// Order of the Lie series at each step.
    pub order: usize,
}

impl Default for CircleOptions {
    fn default() -> Self {
        Self {
            width: 0.5,
            order: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleRun {
    pub report: IterationReport,
    /// `alpha_0, ..., alpha_steps`.
    pub forms: Vec<OneForm>,
}

/// Magnitude `sqrt(a_k^2 + b_k^2)` of harmonic `k` of a real form.
fn magnitude(w: &FourierSeries, k: usize) -> f64 {
    w.cos_coefficient(k).hypot(w.sin_coefficient(k))
}

/// Iterates on `alpha_0 = (1 + eps cos θ) dθ`: step `n` removes the
/// harmonics `1 <= |k| <= 2^n` of the perturbation by a homological solve
/// and pulls back by the Lie series of the solution.
///
/// Records the perturbation strip norm (with the previous one as bound),
/// the magnitudes of harmonics `1..=4`, the largest reappearing harmonic
/// among those just removed, and the drift of the mean.
pub fn circle_run(eps: f64, steps: usize, cap: usize, opts: CircleOptions) -> Result<CircleRun> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Precondition(format!("eps must lie in [0, 1), got {eps}")));
    }
    let need = 1usize << (steps + 1).min(63);
    if cap < need {
        return Err(Error::Precondition(format!(
            "cap {cap} is below 2^(steps + 1) = {need}"
        )));
    }
    if opts.width.is_nan() || opts.width <= 0.0 {
        return Err(Error::Precondition("strip width must be positive".into()));
    }
    let t = opts.width;
    let mut alpha = OneForm(FourierSeries::from_cos_sin(cap, 1.0, &[(1, eps)], &[]));
    let perturbation = |a: &OneForm| a.0.band(1, cap);
    let mut prev_residual = strip_l2_norm(&perturbation(&alpha), t)?;
    let mut forms = vec![alpha.clone()];
    let mut records = Vec::with_capacity(steps);
    for n in 0..steps {
        let band = 1usize << n;
        let mean = alpha.0.cos_coefficient(0);
        let beta = OneForm(alpha.0.band(1, band).scale(1.0 / mean));
        let mut obstruction = 0.0;
        let v = match solve_homological(&beta, band, false) {
            Ok(v) => v,
            Err(Error::Obstruction { mean }) => {
                obstruction = mean.abs();
                solve_homological(&beta, band, true)?
            }
            Err(e) => return Err(e),
        };
        let next = oneform_lie_exp(&v, &alpha, opts.order)?.form;
        let residual = strip_l2_norm(&perturbation(&next), t)?;
        let mut rec = StepRecord::new(n, t, alpha.0.distance(&next.0, t)?);
        rec.residual = Some(residual);
        rec.bound = Some(prev_residual);
        rec.bound_ok = residual <= prev_residual;
        for k in 1..=HARMONIC_COLUMNS {
            rec.extras.insert(format!("h{k}"), magnitude(&next.0, k));
        }
        let reappear = (1..=band).map(|k| magnitude(&next.0, k)).fold(0.0, f64::max);
        rec.extras.insert("reappearing".into(), reappear);
        rec.extras.insert("mean_drift".into(), (next.0.cos_coefficient(0) - 1.0).abs());
        rec.extras.insert("obstruction".into(), obstruction);
        records.push(rec);
        prev_residual = residual;
        forms.push(next.clone());
        alpha = next;
    }
    Ok(CircleRun {
        report: IterationReport::new("circle", records, DEFAULT_TAIL_TOL)?,
        forms,
    })
}

impl FourierSeries {
    fn distance(&self, other: &Self, t: f64) -> Result<f64> {
        strip_l2_norm(&self.sub(other)?, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reappearing_cos_theta_is_third_order() {
        let eps = 0.1;
        let run = circle_run(eps, 1, 4, CircleOptions::default()).unwrap();
        let a1 = &run.forms[1].0;
        let e3 = eps * eps * eps;
        assert!((a1.cos_coefficient(1) + e3 / 6.0).abs() < 5.0 * e3 * eps * eps);
        assert!((run.report.records[0].extra("h1").unwrap() - e3 / 6.0).abs() < 5.0 * e3 * eps * eps);

        let order_two = circle_run(eps, 1, 4, CircleOptions { order: 2, ..Default::default() }).unwrap();
        assert!((order_two.forms[1].0.cos_coefficient(1) + e3 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_eps_is_identity() {
        let run = circle_run(0.0, 3, 16, CircleOptions::default()).unwrap();
        for w in &run.forms {
            assert_eq!(w.0, FourierSeries::constant(16, 1.0));
        }
        assert!(run.report.step_norms().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn perturbation_norm_decreases() {
        let run = circle_run(0.05, 3, 16, CircleOptions::default()).unwrap();
        assert!(run.report.all_bounds_ok());
        let res: Vec<f64> = run.report.records.iter().map(|r| r.residual.unwrap()).collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]));
        for r in &run.report.records {
            assert!(r.extra("mean_drift").unwrap() < 1e-15);
            assert_eq!(r.extra("obstruction"), Some(0.0));
        }
    }

    #[test]
    fn preconditions() {
        assert!(circle_run(0.1, 3, 8, CircleOptions::default()).is_err());
        assert!(circle_run(1.0, 1, 8, CircleOptions::default()).is_err());
        assert!(circle_run(0.1, 1, 8, CircleOptions { width: 0.0, order: 4 }).is_err());
    }
}
