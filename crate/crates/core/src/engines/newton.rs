use super::{IterationReport, StepRecord, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::factors::RadiusSchedule;
use crate::series::{linearization_action, PowerSeries, Scalar, ScalarMode};

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Fixed radius for the sup-bound norms.
    pub radius: f64,
    /// When set, step `n` measures the residual at `s_{2n+1}` and the step
    /// at `s_{2n+2}` instead of the fixed radius.
    pub schedule: Option<RadiusSchedule>,
    /// Top coefficient rows left out of the linear solve.
    pub defect: usize,
    /// `q` in the recorded bound `q * e_{n-1}^2`.
    pub quadratic_constant: f64,
    /// Abort when `|x_n(0)|` falls to this fraction of `|x_0(0)|`.
    pub singular_floor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            radius: 0.5,
            schedule: None,
            defect: 0,
            quadratic_constant: 5f64.exp(),
            singular_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonRun<S> {
    pub report: IterationReport,
    pub solution: PowerSeries<S>,
    pub iterates: Vec<PowerSeries<S>>,
}

/// `f(x) = x ∂^{-1} x`.
fn f_map<S: Scalar>(x: &PowerSeries<S>) -> Result<PowerSeries<S>> {
    x.mul(&x.antiderive())
}

/// Solves `x ∂^{-1} d + d ∂^{-1} x = r` for `d` by forward substitution on
/// coefficients `1 ..= D - defect`; the remaining entries of `d` are zero.
/// The diagonal entry for `d_{k-1}` is `x_0 (k + 1) / k`.
fn solve_linearization<S: Scalar>(x: &PowerSeries<S>, r: &PowerSeries<S>, defect: usize) -> Option<PowerSeries<S>> {
    let d = x.truncation();
    let xs = x.coeffs();
    let x0_inv = xs[0].recip()?;
    let mut delta = vec![S::zero(); d + 1];
    let rows = d.saturating_sub(defect);
    for k in 1..=rows {
        let mut acc = r.coeff(k);
        // off-diagonal parts of x_{k-j} d_{j-1} / j and d_{k-j} x_{j-1} / j
        for j in 1..k {
            acc = acc - xs[k - j].clone() * delta[j - 1].clone() * S::from_ratio(1, j as i64);
        }
        for j in 2..=k {
            acc = acc - delta[k - j].clone() * xs[j - 1].clone() * S::from_ratio(1, j as i64);
        }
        delta[k - 1] = acc * x0_inv.clone() * S::from_ratio(k as i64, k as i64 + 1);
    }
    Some(PowerSeries::new(d, delta))
}

fn radii(opts: &NewtonOptions, n: usize) -> Result<(f64, f64)> {
    match &opts.schedule {
        None => Ok((opts.radius, opts.radius)),
        Some(s) => Ok((s.radius(2 * n + 1)?, s.radius(2 * n + 2)?)),
    }
}

/// Newton iteration `x_{n+1} = x_n - L(x_n)(f(x_n) - y)` for
/// `f(x) = x ∂^{-1} x`.
pub fn newton_invert<S: Scalar>(
    y: &PowerSeries<S>,
    x0: &PowerSeries<S>,
    steps: usize,
    opts: &NewtonOptions,
) -> Result<NewtonRun<S>> {
    run(y, x0, steps, opts, "newton")
}

/// The same iteration with `opts.defect` rows dropped from the inverse;
/// records the defect `|r - Df(x_n) L(x_n) r|` and the ratio
/// `C = defect / |r|^2`.
pub fn quasi_newton_run<S: Scalar>(
    y: &PowerSeries<S>,
    x0: &PowerSeries<S>,
    steps: usize,
    opts: &NewtonOptions,
) -> Result<NewtonRun<S>> {
    run(y, x0, steps, opts, "quasi-newton")
}

fn run<S: Scalar>(
    y: &PowerSeries<S>,
    x0: &PowerSeries<S>,
    steps: usize,
    opts: &NewtonOptions,
    engine: &str,
) -> Result<NewtonRun<S>> {
    if y.truncation() != x0.truncation() {
        return Err(Error::TruncationMismatch {
            left: y.truncation(),
            right: x0.truncation(),
        });
    }
    if !y.coeff(0).is_zero() {
        return Err(Error::Precondition("y must vanish at the origin".into()));
    }
    let c0 = x0.coeff(0).modulus();
    if c0 == 0.0 {
        return Err(Error::SingularDiagonal { step: 0 });
    }
    if let Some(s) = &opts.schedule {
        if s.steps() < 2 * steps {
            return Err(Error::Precondition(format!(
                "schedule has {} steps, newton needs {}",
                s.steps(),
                2 * steps
            )));
        }
    }
    let floor = match S::MODE {
        ScalarMode::Float => 64.0 * f64::EPSILON,
        _ => 0.0,
    };
    let mut x = x0.clone();
    let mut iterates = vec![x.clone()];
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    for n in 0..steps {
        let (s_res, s_step) = radii(opts, n)?;
        let r = f_map(&x)?.sub(y)?;
        let e = r.sup_bound(s_res);
        let stop = e <= floor * y.sup_bound(s_res) || r.is_zero();
        let delta = if stop {
            PowerSeries::zero(x.truncation())
        } else {
            solve_linearization(&x, &r, opts.defect).ok_or(Error::SingularDiagonal { step: n })?
        };
        let mut rec = StepRecord::new(n, s_res, delta.sup_bound(s_step));
        rec.residual = Some(e);
        if let Some(prev) = records.last().and_then(|p| p.residual) {
            let bound = opts.quadratic_constant * prev * prev;
            rec.bound = Some(bound);
            rec.bound_ok = e <= bound;
        }
        rec.extras.insert("valuation".into(), r.valuation() as f64);
        rec.extras.insert("x0".into(), x.coeff(0).modulus());
        if opts.defect > 0 || engine != "newton" {
            let defect = r.sub(&linearization_action(&x, &delta)?)?.sup_bound(s_res);
            rec.extras.insert("defect".into(), defect);
            if e > 0.0 {
                rec.extras.insert("defect_ratio".into(), defect / (e * e));
            }
        }
        if n == 0 {
            rec.extras.insert("initial_residual_y".into(), e);
            rec.extras.insert("initial_residual_x0".into(), f_map(&x)?.sub(&x)?.sup_bound(s_res));
        }
        records.push(rec);
        if stop {
            break;
        }
        x = x.sub(&delta)?;
        if x.coeff(0).modulus() <= opts.singular_floor * c0 {
            return Err(Error::SingularDiagonal { step: n + 1 });
        }
        iterates.push(x.clone());
    }
    Ok(NewtonRun {
        report: IterationReport::new(engine, records, DEFAULT_TAIL_TOL)?,
        solution: x,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{BigRational, Complex64, ExactSeries, FloatSeries};
    use num_traits::Zero;

    fn y_exact(d: usize) -> ExactSeries {
        ExactSeries::from_ratios(d, &[(1, 1, 1), (2, 1, 10)])
    }

    #[test]
    fn solver_inverts_the_linearization() {
        let x = ExactSeries::from_ratios(8, &[(0, 2, 1), (1, -1, 3), (4, 5, 7)]);
        let r = ExactSeries::from_ratios(8, &[(1, 1, 1), (3, -2, 5), (8, 1, 9)]);
        let d = solve_linearization(&x, &r, 0).unwrap();
        assert_eq!(linearization_action(&x, &d).unwrap(), r);
        let d2 = solve_linearization(&x, &r, 2).unwrap();
        assert!(d2.coeff(6).is_zero() && d2.coeff(7).is_zero());
        let lhs = linearization_action(&x, &d2).unwrap();
        for k in 0..=6 {
            assert_eq!(lhs.coeff(k), r.coeff(k));
        }
    }

    #[test]
    fn identity_start_is_a_fixed_point() {
        let y = ExactSeries::z(6);
        let run = newton_invert(&y, &ExactSeries::one(6), 5, &NewtonOptions::default()).unwrap();
        assert_eq!(run.report.records.len(), 1);
        assert_eq!(run.report.records[0].residual, Some(0.0));
        assert_eq!(run.solution, ExactSeries::one(6));
        assert!(run.report.converged());
    }

    #[test]
    fn exact_valuations() {
        let run = newton_invert(&y_exact(32), &ExactSeries::one(32), 10, &NewtonOptions::default()).unwrap();
        let vals: Vec<f64> = run.report.records.iter().map(|r| r.extra("valuation").unwrap()).collect();
        assert_eq!(vals, vec![2.0, 3.0, 5.0, 9.0, 17.0, 33.0]);
        assert!(run.report.converged());
        let sol = &run.solution;
        assert_eq!(sol.mul(&sol.antiderive()).unwrap(), y_exact(32));
    }

    #[test]
    fn float_mode_is_quadratic() {
        let y = y_exact(32).to_c64();
        let run = newton_invert(&y, &FloatSeries::one(32), 12, &NewtonOptions::default()).unwrap();
        let e: Vec<f64> = run.report.records.iter().map(|r| r.residual.unwrap()).collect();
        assert!(e.len() >= 3);
        for w in e.windows(2) {
            if w[1] > 0.0 {
                assert!(w[1].ln() <= 2.0 * w[0].ln() + 5.0, "{e:?}");
            }
        }
        assert!(run.report.all_bounds_ok());
    }

    #[test]
    fn quasi_newton_with_defect() {
        let y = y_exact(32).to_c64();
        let exact = newton_invert(&y, &FloatSeries::one(32), 8, &NewtonOptions::default()).unwrap();
        let q0 = quasi_newton_run(&y, &FloatSeries::one(32), 8, &NewtonOptions::default()).unwrap();
        assert_eq!(q0.iterates, exact.iterates);

        let opts = NewtonOptions { defect: 2, ..Default::default() };
        let q2 = quasi_newton_run(&y, &FloatSeries::one(32), 12, &opts).unwrap();
        assert!(q2.report.converged(), "{:?}", q2.report.step_norms());
        let defects: Vec<f64> = q2.report.records.iter().map(|r| r.extra("defect").unwrap()).collect();
        for (d, r) in defects.iter().zip(&q2.report.records) {
            assert!(*d <= r.residual.unwrap() + 1e-15);
        }

        let opts = NewtonOptions { defect: 32, ..Default::default() };
        let stuck = quasi_newton_run(&y, &FloatSeries::one(32), 4, &opts).unwrap();
        assert!(stuck.iterates.iter().all(|x| *x == FloatSeries::one(32)));
        assert!(stuck.report.records.iter().all(|r| r.residual == stuck.report.records[0].residual));
    }

    #[test]
    fn zero_target_hits_the_singular_locus() {
        let y = FloatSeries::zero(8);
        let err = newton_invert(&y, &FloatSeries::one(8), 100, &NewtonOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularDiagonal { step } if step > 30));
        let zero_start = FloatSeries::constant(8, Complex64::new(0.0, 0.0));
        assert!(matches!(
            newton_invert(&y, &zero_start, 3, &NewtonOptions::default()),
            Err(Error::SingularDiagonal { step: 0 })
        ));
    }

    #[test]
    fn scheduled_radii() {
        use crate::bruno::BrunoSequence;
        use crate::factors::schedule_build;
        let rho = BrunoSequence::constant(0.25, 12).unwrap();
        let opts = NewtonOptions {
            schedule: Some(schedule_build(1.0, &rho, 12).unwrap()),
            ..Default::default()
        };
        let run = newton_invert(&y_exact(16), &ExactSeries::one(16), 5, &opts).unwrap();
        let sched = opts.schedule.as_ref().unwrap();
        for r in &run.report.records {
            assert_eq!(r.s_n, sched.radius(2 * r.n + 1).unwrap());
        }
        let _ = BigRational::from_ratio(1, 2);
    }
}
