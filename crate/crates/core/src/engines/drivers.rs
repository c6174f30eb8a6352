use super::{IterationReport, ScaledElement, StepRecord, DEFAULT_TAIL_TOL};
use crate::bruno::{log_le, BrunoSequence, LogTerms, ScheduleExponent};
use crate::error::{Error, Result};
use crate::factors::{
    kam_schedule_tame_check, rho_for_perturbative, schedule_build_with, KamFactor,
    PerturbativeFactor, RadiusPair, RadiusSchedule,
};

#[derive(Clone, Debug, PartialEq)]
pub struct DriverRun<X> {
    pub report: IterationReport,
    /// `x_0, ..., x_steps`.
    pub iterates: Vec<X>,
    pub schedule: RadiusSchedule,
    /// The eventual bound (`< b_n` or `< c_n`) on the upper half of the run.
    pub eventual_ok: bool,
}

fn ln_sum(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

fn apply<X, F>(step: &mut F, n: usize, p: &RadiusPair, x: &X) -> Result<X>
where
    F: FnMut(usize, &RadiusPair, &X) -> Result<X>,
{
    step(n, p, x).map_err(|e| Error::StepMap {
        step: n,
        message: e.to_string(),
    })
}

/// Iterates `x_{n+1} = f_n(s_{n+1}, s_n, x_n)` along the absorb-exponent
/// schedule from [`rho_for_perturbative`]`(lambda, b)`.
///
/// Flags `|x_{n+1} - x_n|_{s_{n+1}} <= b_n |x_n - x_{n-1}|_{s_n}` per step
/// and records whether the step stays below `b_n`.
pub fn contraction_run<X, F>(
    mut step: F,
    lambda: &PerturbativeFactor,
    b: &BrunoSequence,
    t: f64,
    x0: X,
    steps: usize,
) -> Result<DriverRun<X>>
where
    X: ScaledElement,
    F: FnMut(usize, &RadiusPair, &X) -> Result<X>,
{
    let rho = rho_for_perturbative(lambda, b)?;
    let schedule = schedule_build_with(t, &rho, steps + 1, ScheduleExponent::Absorb)?;
    let mut iterates = vec![x0];
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    for n in 0..steps {
        let p = schedule.pair(n)?;
        let next = apply(&mut step, n, &p, &iterates[n])?;
        let norm = next.distance_at(&iterates[n], p.inner())?;
        let log_b = b.log_term(n)?;
        let mut rec = StepRecord::new(n, p.outer(), norm);
        if let Some(prev) = records.last() {
            let log_bound = log_b + prev.step_norm.ln();
            rec.bound = Some(log_bound.exp());
            rec.bound_ok = log_le(norm.ln(), log_bound);
        }
        rec.extras.insert("log_b".into(), log_b);
        rec.extras.insert("log_lambda".into(), lambda.log_eval_pair(n, &p)?);
        rec.extras.insert("below_b".into(), f64::from(u8::from(norm.ln() < log_b)));
        records.push(rec);
        iterates.push(next);
    }
    let eventual_ok = records[steps / 2..]
        .iter()
        .all(|r| r.extra("below_b") == Some(1.0));
    Ok(DriverRun {
        report: IterationReport::new("contraction", records, DEFAULT_TAIL_TOL)?,
        iterates,
        schedule,
        eventual_ok,
    })
}

/// The scalar step `x -> lambda_n(s, t) x^2`.
pub fn contraction_surrogate(
    lambda: &PerturbativeFactor,
) -> impl FnMut(usize, &RadiusPair, &f64) -> Result<f64> + '_ {
    move |n, p, x| {
        if *x == 0.0 {
            return Ok(0.0);
        }
        Ok(lambda.log_eval_pair(n, p)?.exp() * x * x)
    }
}

/// Iterates along the KAM schedule of [`kam_schedule_tame_check`], which
/// must report a tame pair.
///
/// Flags `|x_{n+1} - x_n| <= M_n |x_n - x_{n-1}|^2 + N_n |x_n - x_{n-1}|`
/// (log domain) and records whether the step stays below
/// `c_n = e^{-2^n / n^{c_phase_exponent}}`.
pub fn kam_run<X, F>(
    mut step: F,
    k: &KamFactor,
    eps: f64,
    c_phase_exponent: f64,
    t: f64,
    x0: X,
    steps: usize,
) -> Result<DriverRun<X>>
where
    X: ScaledElement,
    F: FnMut(usize, &RadiusPair, &X) -> Result<X>,
{
    let check = kam_schedule_tame_check(k, eps, t, c_phase_exponent, steps)?;
    if !check.tame.tame {
        return Err(Error::NotTame { horizon: steps });
    }
    let schedule = check.schedule;
    let mut iterates = vec![x0];
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    for n in 0..steps {
        let p = schedule.pair(n)?;
        let next = apply(&mut step, n, &p, &iterates[n])?;
        let norm = next.distance_at(&iterates[n], p.inner())?;
        let (log_m, log_n) = (check.log_m[n], check.log_n[n]);
        let mut rec = StepRecord::new(n, p.outer(), norm);
        if let Some(prev) = records.last() {
            let lp = prev.step_norm.ln();
            let log_bound = ln_sum(log_m + 2.0 * lp, log_n + lp);
            let bound = log_bound.exp();
            rec.bound = bound.is_finite().then_some(bound);
            rec.bound_ok = log_le(norm.ln(), log_bound);
            rec.extras.insert("log_bound".into(), log_bound);
        }
        rec.extras.insert("log_m".into(), log_m);
        rec.extras.insert("log_n".into(), log_n);
        rec.extras.insert("log_c".into(), check.log_c[n]);
        rec.extras.insert("below_c".into(), f64::from(u8::from(norm.ln() < check.log_c[n])));
        records.push(rec);
        iterates.push(next);
    }
    let eventual_ok = records[steps / 2..]
        .iter()
        .all(|r| r.extra("below_c") == Some(1.0));
    Ok(DriverRun {
        report: IterationReport::new("kam", records, DEFAULT_TAIL_TOL)?,
        iterates,
        schedule,
        eventual_ok,
    })
}

/// The scalar step `x -> (M_n x^2 + N_n x) / 2` with `(M_n, N_n)` the KAM
/// factor at the pair.
pub fn kam_surrogate(k: &KamFactor) -> impl FnMut(usize, &RadiusPair, &f64) -> Result<f64> + '_ {
    move |n, p, x| {
        if *x == 0.0 {
            return Ok(0.0);
        }
        let (m, nn) = k.log_eval_pair(n, p)?;
        Ok(0.5 * (m.exp() * x * x + nn.exp() * x))
    }
}

/// Constants with `d_{k+1} <= M d_k^2 + N d_k` for every consecutive pair
/// of step norms, minimizing `M + N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedFit {
    pub m: f64,
    pub n: f64,
}

pub fn fit_mixed_bound(d: &[f64]) -> Option<MixedFit> {
    let rows: Vec<(f64, f64, f64)> = d.windows(2).map(|w| (w[0] * w[0], w[0], w[1])).collect();
    let feasible = |m: f64, n: f64| {
        m >= 0.0
            && n >= 0.0
            && rows
                .iter()
                .all(|&(a, b, c)| c <= (m * a + n * b) * (1.0 + 1e-12))
    };
    let mut candidates = vec![(0.0, 0.0)];
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else if num > 0.0 { f64::INFINITY } else { 0.0 };
    candidates.push((0.0, rows.iter().map(|&(_, b, c)| ratio(c, b)).fold(0.0, f64::max)));
    candidates.push((rows.iter().map(|&(a, _, c)| ratio(c, a)).fold(0.0, f64::max), 0.0));
    for (i, &(a1, b1, c1)) in rows.iter().enumerate() {
        for &(a2, b2, c2) in &rows[i + 1..] {
            let det = a1 * b2 - a2 * b1;
            if det != 0.0 {
                candidates.push(((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det));
            }
        }
    }
    candidates
        .into_iter()
        .filter(|&(m, n)| m.is_finite() && n.is_finite() && feasible(m, n))
        .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
        .map(|(m, n)| MixedFit { m, n })
}
