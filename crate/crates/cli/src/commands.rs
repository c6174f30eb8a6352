use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scale_iter::bruno::{
    a_pi, delta_search, is_bruno, is_tame, quadratic_orbit, LogTerms, OrbitVerdict,
};
use scale_iter::engines::{
    circle_run, contraction_run, contraction_surrogate, kam_run, kam_surrogate, morse_run,
    newton_invert, quasi_newton_run, CircleOptions, IterationReport, NewtonOptions,
};
use scale_iter::factors::{
    geometric_bound_check, perturbative_radius_search, schedule_build_with, KamFactor, LocalFactor,
    PerturbativeFactor,
};
use scale_iter::fourier::FourierKind;
use scale_iter::series::{parse_rational, BigRational, ExactSeries, FloatSeries, Scalar};
use scale_iter::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    Arithmetic, BrunoParams, CircleParams, Command, DriveParams, ExperimentConfig, MorseParams,
    NewtonParams, Params, ScheduleParams, TameParams,
};
use crate::CliError;

pub const CLI_REPORT_SCHEMA: &str = "scale-iter/cli-report/v1";

/// Largest step count accepted by the doubling engines.
const MAX_DOUBLING_STEPS: usize = 24;

/// Envelope written for every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliReport {
    pub schema: String,
    pub command: Command,
    pub seed: u64,
    pub ok: bool,
    pub summary: String,
    pub result: Value,
}

/// A finished run: the report plus its plot-ready table.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: CliReport,
    pub csv: String,
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> scale_iter::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn series_from_strings(truncation: usize, coeffs: &[String]) -> Result<ExactSeries, String> {
    if coeffs.len() > truncation + 1 {
        return Err(format!(
            "{} coefficients exceed truncation {truncation}",
            coeffs.len()
        ));
    }
    let parsed = coeffs
        .iter()
        .map(|s| parse_rational(s).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExactSeries::new(truncation, parsed))
}

fn default_f0(truncation: usize) -> ExactSeries {
    ExactSeries::from_ratios(truncation, &[(2, 1, 2), (3, 1, 1)])
}

/// Precondition diagnostics for `config` run as `command`; empty iff the
/// run would get past its preconditions.
pub fn validate(config: &ExperimentConfig, command: Command) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(c) = config.command {
        if c != command {
            out.push(format!(
                "config is for command {:?} but {:?} was requested",
                c.name(),
                command.name()
            ));
        }
    }
    match config.params(command) {
        Err(e) => out.push(e.to_string()),
        Ok(p) => check_params(&p, &mut out),
    }
    out
}

fn check_params(p: &Params, out: &mut Vec<String>) {
    let mut need = |cond: bool, msg: String| {
        if !cond {
            out.push(msg);
        }
    };
    match p {
        Params::Bruno(p) => {
            need(p.horizon >= 2, format!("horizon must be at least 2, got {}", p.horizon));
            need(p.tol > 0.0, format!("tol must be positive, got {}", p.tol));
            if let Some(u0) = p.u0 {
                need(u0 >= 0.0 && u0.is_finite(), format!("u0 must be nonnegative, got {u0}"));
            }
            if let Err(e) = p.sequence().bruno(p.horizon.max(p.steps)) {
                need(false, format!("sequence: {e}"));
            }
        }
        Params::Tame(p) => {
            need(p.horizon >= 1, "horizon must be at least 1".into());
            for (name, s) in [("a", &p.a), ("b", &p.b)] {
                if let Err(e) = s.log_sequence(p.horizon) {
                    need(false, format!("{name}: {e}"));
                }
            }
        }
        Params::Schedule(p) => {
            need(p.t > 0.0 && p.t.is_finite(), format!("t must be positive, got {}", p.t));
            need(p.steps >= 1, "steps must be at least 1".into());
            match p.rho.bruno(p.steps) {
                Err(e) => need(false, format!("rho: {e}")),
                Ok(rho) => {
                    for n in 0..=p.steps {
                        let l = rho.log_term(n).unwrap_or(f64::NAN);
                        if l.is_nan() || l >= -std::f64::consts::LN_2 {
                            need(
                                false,
                                format!("rho_{n} = {} is not below 1/2; the schedule needs rho_n < 1/2", l.exp()),
                            );
                        }
                    }
                }
            }
            if let Some(f) = p.factor {
                if let Err(e) = LocalFactor::new(f.c, f.alpha, f.beta) {
                    need(false, format!("factor: {e}"));
                }
            }
        }
        Params::Morse(p) => {
            need(p.steps <= MAX_DOUBLING_STEPS, format!("steps must be at most {MAX_DOUBLING_STEPS}"));
            let min = (1usize << p.steps.min(MAX_DOUBLING_STEPS)) + 2;
            need(
                p.truncation >= min,
                format!("truncation {} is below 2^steps + 2 = {min}", p.truncation),
            );
            need(p.radius > 0.0 && p.radius.is_finite(), format!("radius must be positive, got {}", p.radius));
            let f0 = match &p.f0 {
                Some(c) => series_from_strings(p.truncation, c),
                None => Ok(default_f0(p.truncation.max(3))),
            };
            match f0 {
                Err(e) => need(false, format!("f0: {e}")),
                Ok(f) => need(
                    f.coeff(0) == BigRational::from_ratio(0, 1)
                        && f.coeff(1) == BigRational::from_ratio(0, 1)
                        && f.coeff(2) == BigRational::from_ratio(1, 2),
                    "f0 must be x^2/2 plus terms of degree at least 3".into(),
                ),
            }
        }
        Params::Circle(p) => {
            need((0.0..1.0).contains(&p.eps), format!("eps must lie in [0, 1), got {}", p.eps));
            need(p.steps <= MAX_DOUBLING_STEPS, format!("steps must be at most {MAX_DOUBLING_STEPS}"));
            let min = 1usize << (p.steps.min(MAX_DOUBLING_STEPS) + 1);
            if let Some(cap) = p.cap {
                need(cap >= min, format!("cap {cap} is below 2^(steps + 1) = {min}"));
            }
            need(p.width > 0.0 && p.width.is_finite(), format!("width must be positive, got {}", p.width));
            need(p.order >= 1, "order must be at least 1".into());
        }
        Params::Newton(p) => {
            match series_from_strings(p.truncation, &p.y) {
                Err(e) => need(false, format!("y: {e}")),
                Ok(y) => need(y.coeff(0) == BigRational::from_ratio(0, 1), "y must vanish at the origin".into()),
            }
            let x0 = p.x0.clone().unwrap_or_else(|| vec!["1".into()]);
            match series_from_strings(p.truncation, &x0) {
                Err(e) => need(false, format!("x0: {e}")),
                Ok(x) => need(x.coeff(0) != BigRational::from_ratio(0, 1), "x0 must have a nonzero constant term".into()),
            }
            need(p.defect <= p.truncation, format!("defect {} exceeds truncation {}", p.defect, p.truncation));
            need(p.radius > 0.0 && p.radius.is_finite(), format!("radius must be positive, got {}", p.radius));
        }
        Params::Drive(DriveParams::Contraction { a, alpha, beta, b, t, x0, steps }) => {
            match (a.bruno(steps + 1), b.bruno(steps + 1)) {
                (Ok(a), Ok(b)) => {
                    if let Err(e) = PerturbativeFactor::new(a, *alpha, *beta) {
                        need(false, format!("factor: {e}"));
                    }
                    need(b.sign() == scale_iter::bruno::PhaseSign::Negative, "b must have negative phase".into());
                }
                (a, b) => {
                    for (name, r) in [("a", a.err()), ("b", b.err())] {
                        if let Some(e) = r {
                            need(false, format!("{name}: {e}"));
                        }
                    }
                }
            }
            if let Some(t) = t {
                need(*t > 0.0 && t.is_finite(), format!("t must be positive, got {t}"));
            }
            need(*x0 >= 0.0 && x0.is_finite(), format!("x0 must be nonnegative, got {x0}"));
        }
        Params::Drive(DriveParams::Kam { a, b, k, q, l, m, eps, c_phase_exponent, t, x0, steps }) => {
            match (a.bruno(*steps), b.bruno(*steps)) {
                (Ok(a), Ok(b)) => {
                    if let Err(e) = KamFactor::new(a, b, *k, *q, *l, *m) {
                        need(false, format!("factor: {e}"));
                    }
                }
                (a, b) => {
                    for (name, r) in [("a", a.err()), ("b", b.err())] {
                        if let Some(e) = r {
                            need(false, format!("{name}: {e}"));
                        }
                    }
                }
            }
            need(*eps > 0.0, format!("eps must be positive, got {eps}"));
            need(
                c_phase_exponent - 1.0 > *eps,
                format!("c_phase_exponent {c_phase_exponent} must exceed 1 + eps"),
            );
            need(*t > 0.0 && t.is_finite(), format!("t must be positive, got {t}"));
            need(*x0 >= 0.0 && x0.is_finite(), format!("x0 must be nonnegative, got {x0}"));
        }
    }
}

/// Validates, then runs `command` on `config`.
pub fn run(config: &ExperimentConfig, command: Command) -> Result<Outcome, CliError> {
    let diagnostics = validate(config, command);
    if !diagnostics.is_empty() {
        return Err(CliError::Invalid(diagnostics));
    }
    let (ok, summary, result, csv) = match config.params(command)? {
        Params::Bruno(p) => bruno(&p, config.seed)?,
        Params::Tame(p) => tame(&p)?,
        Params::Schedule(p) => schedule(&p)?,
        Params::Morse(p) => morse(&p)?,
        Params::Circle(p) => circle(&p)?,
        Params::Newton(p) => newton(&p)?,
        Params::Drive(p) => drive(&p)?,
    };
    Ok(Outcome {
        report: CliReport {
            schema: CLI_REPORT_SCHEMA.to_string(),
            command,
            seed: config.seed,
            ok,
            summary,
            result,
        },
        csv,
    })
}

type Parts = (bool, String, Value, String);

fn bruno(p: &BrunoParams, seed: u64) -> Result<Parts, CliError> {
    let horizon = p.horizon.max(p.steps);
    let a = p.sequence().bruno(horizon)?;
    let limit = a_pi(&a, p.tol)?;
    let bruno_ok = is_bruno(&a, p.horizon, p.tol)?;
    let threshold = limit.converged.then(|| (-limit.log_limit).exp());
    let orbit = p.u0.map(|u0| quadratic_orbit(&a, u0, p.steps)).transpose()?;

    let mut agree = 0;
    let mut checked = 0;
    if let Some(th) = threshold.filter(|_| p.samples > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..p.samples {
            let u0: f64 = rng.random_range(0.0..2.0 * th);
            if ((u0 - th) / th).abs() < 1e-3 {
                continue;
            }
            checked += 1;
            let v = quadratic_orbit(&a, u0, p.steps)?.verdict;
            let converged = v == OrbitVerdict::ConvergedToZero;
            let diverged = matches!(v, OrbitVerdict::Diverged { .. });
            if (u0 < th && !diverged) || (u0 > th && !converged) {
                agree += 1;
            }
        }
    }
    let ok = bruno_ok && limit.converged && agree == checked;
    let summary = format!(
        "a_pi = {} ({}), bruno {bruno_ok}",
        limit.limit,
        if limit.converged { "converged" } else { "not converged" }
    );
    let log_terms: Vec<f64> = (0..=p.horizon).map(|n| a.log_term(n)).collect::<Result<_, _>>()?;
    let result = json!({
        "a_pi": limit.limit,
        "log_a_pi": limit.log_limit,
        "converged": limit.converged,
        "is_bruno": bruno_ok,
        "threshold": threshold,
        "phases": &a.phases()[..=p.horizon],
        "log_terms": log_terms,
        "orbit": orbit,
        "samples": { "checked": checked, "agree": agree },
    });
    let mut csv = String::from("n,log_term,phase,log_bruno_transform\n");
    for (n, (l, u)) in log_terms.iter().zip(a.phases()).enumerate() {
        let b = scale_iter::bruno::log_bruno_transform(&a, n)?;
        writeln!(csv, "{n},{l},{u},{b}").expect("write to string");
    }
    Ok((ok, summary, result, csv))
}

fn tame(p: &TameParams) -> Result<Parts, CliError> {
    let a = p.a.log_sequence(p.horizon)?;
    let b = p.b.log_sequence(p.horizon)?;
    let report = is_tame(&a, &b, p.horizon)?;
    let search = if p.orbit && report.tame {
        Some(delta_search(&a, &b, p.horizon)?)
    } else {
        None
    };
    let summary = match report.taming_index {
        Some(n) if report.tame => format!("tame from N = {n}"),
        _ => "not tame over the horizon".to_string(),
    };
    let mut csv = String::from("n,log_a,log_b,holds\n");
    for (n, holds) in report.holds.iter().enumerate() {
        let (la, lb) = (a.log_term(n)?, b.log_term(n)?);
        writeln!(csv, "{n},{la},{lb},{holds}").expect("write to string");
    }
    let result = json!({ "tame": report, "delta_search": search });
    Ok((report.tame, summary, result, csv))
}

fn schedule(p: &ScheduleParams) -> Result<Parts, CliError> {
    let rho = p.rho.bruno(p.steps)?;
    let sched = schedule_build_with(p.t, &rho, p.steps, p.exponent)?;
    let (flags, ok) = match p.factor {
        Some(f) => {
            let flags = geometric_bound_check(&LocalFactor::new(f.c, f.alpha, f.beta)?, &sched)?;
            let ok = flags.iter().all(|f| f.holds);
            (Some(flags), ok)
        }
        None => (None, true),
    };
    let (values, holds): (Vec<f64>, Vec<bool>) = flags
        .iter()
        .flatten()
        .map(|f| (f.log_value, f.holds))
        .unzip();
    let csv = csv_string(|buf| sched.write_csv(&values, &holds, buf))?;
    let summary = format!("s_inf = {} after {} steps", sched.s_inf(), p.steps);
    let result = json!({
        "t": p.t,
        "exponent": p.exponent,
        "radii": sched.radii(),
        "log_radii": sched.log_radii(),
        "s_inf": sched.s_inf(),
        "log_s_inf": sched.log_s_inf(),
        "bound_flags": flags,
    });
    Ok((ok, summary, result, csv))
}

fn report_csv(report: &IterationReport) -> Result<String, CliError> {
    csv_string(|buf| report.write_csv(buf))
}

fn morse(p: &MorseParams) -> Result<Parts, CliError> {
    let f0 = match &p.f0 {
        Some(c) => series_from_strings(p.truncation, c).map_err(CliError::Config)?,
        None => default_f0(p.truncation),
    };
    let run = morse_run(&f0, p.steps, p.radius)?;
    let steps: Vec<Value> = run
        .steps
        .iter()
        .enumerate()
        .map(|(n, s)| json!({ "n": n, "v": s.v.to_document(), "f": s.f.to_document() }))
        .collect();
    let ok = run.report.all_bounds_ok();
    let summary = format!(
        "{} steps, final remainder valuation {}",
        p.steps,
        run.report.records.last().and_then(|r| r.extra("valuation")).unwrap_or(3.0)
    );
    let csv = report_csv(&run.report)?;
    let result = json!({ "report": run.report, "f0": f0.to_document(), "steps": steps });
    Ok((ok, summary, result, csv))
}

fn circle(p: &CircleParams) -> Result<Parts, CliError> {
    let cap = p.cap.unwrap_or(1 << (p.steps + 1));
    let run = circle_run(
        p.eps,
        p.steps,
        cap,
        CircleOptions {
            width: p.width,
            order: p.order,
        },
    )?;
    let forms: Vec<Value> = run
        .forms
        .iter()
        .map(|w| to_value(&w.0.to_document(FourierKind::OneForm)))
        .collect();
    let ok = run.report.all_bounds_ok();
    let summary = format!(
        "perturbation norm {} after {} steps",
        run.report.records.last().and_then(|r| r.residual).unwrap_or(f64::NAN),
        p.steps
    );
    let csv = report_csv(&run.report)?;
    Ok((ok, summary, json!({ "report": run.report, "forms": forms }), csv))
}

fn newton(p: &NewtonParams) -> Result<Parts, CliError> {
    let y = series_from_strings(p.truncation, &p.y).map_err(CliError::Config)?;
    let x0 = series_from_strings(p.truncation, p.x0.as_deref().unwrap_or(&["1".to_string()]))
        .map_err(CliError::Config)?;
    let opts = NewtonOptions {
        radius: p.radius,
        defect: p.defect,
        ..Default::default()
    };
    let (report, solution) = match p.mode {
        Arithmetic::Exact => {
            let run = if p.defect == 0 {
                newton_invert(&y, &x0, p.steps, &opts)?
            } else {
                quasi_newton_run(&y, &x0, p.steps, &opts)?
            };
            (run.report, to_value(&run.solution.to_document()))
        }
        Arithmetic::Float => {
            let (y, x0): (FloatSeries, FloatSeries) = (y.to_c64(), x0.to_c64());
            let run = if p.defect == 0 {
                newton_invert(&y, &x0, p.steps, &opts)?
            } else {
                quasi_newton_run(&y, &x0, p.steps, &opts)?
            };
            (run.report, to_value(&run.solution.to_document()))
        }
    };
    let ok = report.converged();
    let summary = format!(
        "{} steps, final residual {}",
        report.records.len(),
        report.records.last().and_then(|r| r.residual).unwrap_or(f64::NAN)
    );
    let csv = report_csv(&report)?;
    Ok((ok, summary, json!({ "report": report, "solution": solution }), csv))
}

fn drive(p: &DriveParams) -> Result<Parts, CliError> {
    match p {
        DriveParams::Contraction { a, alpha, beta, b, t, x0, steps } => {
            let f = PerturbativeFactor::new(a.bruno(steps + 1)?, *alpha, *beta)?;
            let b = b.bruno(steps + 1)?;
            let t = match t {
                Some(t) => *t,
                None => perturbative_radius_search(&f, &b, 1.0, *steps, 30)?.t,
            };
            let run = contraction_run(contraction_surrogate(&f), &f, &b, t, *x0, *steps)?;
            let ok = run.report.converged();
            let summary = format!("contraction at t = {t}: {:?}", run.report.verdict);
            let csv = report_csv(&run.report)?;
            let result = json!({
                "engine": "contraction",
                "t": t,
                "report": run.report,
                "iterates": run.iterates,
                "eventual_ok": run.eventual_ok,
            });
            Ok((ok, summary, result, csv))
        }
        DriveParams::Kam { a, b, k, q, l, m, eps, c_phase_exponent, t, x0, steps } => {
            let kf = KamFactor::new(a.bruno(*steps)?, b.bruno(*steps)?, *k, *q, *l, *m)?;
            match kam_run(kam_surrogate(&kf), &kf, *eps, *c_phase_exponent, *t, *x0, *steps) {
                Err(Error::NotTame { horizon }) => {
                    let summary = format!("KAM pair is not tame over horizon {horizon} at t = {t}");
                    let csv = report_csv(&IterationReport::new("kam", Vec::new(), 0.0)?)?;
                    Ok((false, summary, json!({ "engine": "kam", "t": t, "tame": false }), csv))
                }
                Err(e) => Err(e.into()),
                Ok(run) => {
                    let ok = run.report.converged();
                    let summary = format!("kam at t = {t}: {:?}", run.report.verdict);
                    let csv = report_csv(&run.report)?;
                    let result = json!({
                        "engine": "kam",
                        "t": t,
                        "tame": true,
                        "report": run.report,
                        "iterates": run.iterates,
                        "eventual_ok": run.eventual_ok,
                    });
                    Ok((ok, summary, result, csv))
                }
            }
        }
    }
}
