use num_traits::Zero;

use super::{IterationReport, StepRecord, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::series::{lie_exp, BigRational, Derivation, ExactSeries, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct MorseStep {
    /// Generator of `v_n = a_n ∂_x`.
    pub v: ExactSeries,
    /// `f_{n+1} = e^{v_n} f_n`.
    pub f: ExactSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorseRun {
    pub report: IterationReport,
    pub f0: ExactSeries,
    pub steps: Vec<MorseStep>,
}

impl MorseRun {
    pub fn f(&self, n: usize) -> &ExactSeries {
        if n == 0 {
            &self.f0
        } else {
            &self.steps[n - 1].f
        }
    }
}

fn remainder(f: &ExactSeries) -> ExactSeries {
    let mut c = f.coeffs().to_vec();
    c[2] = BigRational::zero();
    ExactSeries::new(f.truncation(), c)
}

/// Runs `steps` Morse steps from `f0 = x^2/2 + R_0`.
///
/// Step `n` takes the first `2^n` terms of the remainder, divides them by
/// `x` and negates to get `a_n`, then applies `e^{a_n ∂_x}`. The remainder
/// valuation `>= 2^{n+1} + 2` is asserted after each step. Norms are sup
/// bounds at the fixed `radius`.
pub fn morse_run(f0: &ExactSeries, steps: usize, radius: f64) -> Result<MorseRun> {
    let d = f0.truncation();
    let need = 1usize
        .checked_shl(steps as u32)
        .and_then(|p| p.checked_add(2))
        .ok_or_else(|| Error::Precondition(format!("{steps} steps overflow")))?;
    if d < need {
        return Err(Error::Precondition(format!(
            "truncation {d} is below 2^{steps} + 2 = {need}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
    }
    if !f0.coeff(0).is_zero() || !f0.coeff(1).is_zero() || f0.coeff(2) != BigRational::from_ratio(1, 2) {
        return Err(Error::Precondition("f0 must start with x^2/2".into()));
    }

    let mut f = f0.clone();
    let mut records = Vec::with_capacity(steps);
    let mut out = Vec::with_capacity(steps);
    for n in 0..steps {
        let r = remainder(&f);
        let p = (1usize << n) + 2;
        let mut a = vec![BigRational::zero(); d + 1];
        for k in p..(p + (1 << n)).min(d + 1) {
            a[k - 1] = -r.coeff(k);
        }
        let v = ExactSeries::new(d, a);
        let next = if v.is_zero() {
            f.clone()
        } else {
            lie_exp(&Derivation::new(v.clone()), &f)?
        };
        let r_next = remainder(&next);
        let valuation = r_next.valuation();
        let required = (1usize << (n + 1)) + 2;
        if valuation < required.min(d + 1) {
            return Err(Error::Precondition(format!(
                "remainder valuation {valuation} after step {n} is below {required}"
            )));
        }
        let mut rec = StepRecord::new(n, radius, next.sub(&f)?.sup_bound(radius));
        rec.residual = Some(r_next.sup_bound(radius));
        rec.bound = Some(required as f64);
        rec.bound_ok = valuation >= required.min(d + 1);
        rec.extras.insert("valuation".into(), valuation as f64);
        rec.extras.insert("generator_norm".into(), v.sup_bound(radius));
        records.push(rec);
        out.push(MorseStep { v, f: next.clone() });
        f = next;
    }
    Ok(MorseRun {
        report: IterationReport::new("morse", records, DEFAULT_TAIL_TOL)?,
        f0: f0.clone(),
        steps: out,
    })
}
