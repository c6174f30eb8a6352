//! Truncated Fourier data on the circle: one-forms `a(θ) dθ`, vector fields
//! `f(θ) ∂_θ`, their Lie calculus and the strip norms.

mod strip;

pub use strip::{
    log_sinh, log_strip_weight, sinh_ratio_decreasing, strip_l2_norm, tail_decay_check,
    NormRow, TailCheck,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FOURIER_SCHEMA: &str = "scale-iter/fourier/v1";

/// Relative tolerance for the conjugate-symmetry check of real data.
const REALITY_RTOL: f64 = 1e-12;

/// Coefficients `c_k`, `|k| <= cap`, of `sum c_k e^{ikθ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    cap: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl FourierSeries {
    /// `coeffs` are indexed `-cap ..= cap`. With `real` set they must be
    /// conjugate symmetric, and are symmetrized exactly.
    pub fn new(cap: usize, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != 2 * cap + 1 {
            return Err(Error::Precondition(format!(
                "expected {} coefficients for cap {cap}, got {}",
                2 * cap + 1,
                coeffs.len()
            )));
        }
        let mut s = Self { cap, coeffs, real };
        if real {
            let scale = s.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
            for k in 0..=cap as i64 {
                let (a, b) = (s.coeff(k), s.coeff(-k));
                if (a - b.conj()).norm() > REALITY_RTOL * scale {
                    return Err(Error::Precondition(format!(
                        "harmonics {k} and -{k} are not conjugate"
                    )));
                }
                let avg = 0.5 * (a + b.conj());
                *s.slot(k) = avg;
                *s.slot(-k) = avg.conj();
            }
        }
        Ok(s)
    }

    pub fn zero(cap: usize) -> Self {
        Self {
            cap,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * cap + 1],
            real: true,
        }
    }

    pub fn constant(cap: usize, c: f64) -> Self {
        let mut s = Self::zero(cap);
        *s.slot(0) = Complex64::new(c, 0.0);
        s
    }

    /// `c e^{ikθ}`, complex data.
    pub fn exponential(cap: usize, k: i64, c: Complex64) -> Self {
        let mut s = Self::zero(cap);
        s.real = false;
        if k.unsigned_abs() as usize <= cap {
            *s.slot(k) = c;
        }
        s
    }

    /// Real data `mean + sum a_k cos kθ + sum b_k sin kθ`.
    pub fn from_cos_sin(cap: usize, mean: f64, cos: &[(usize, f64)], sin: &[(usize, f64)]) -> Self {
        let mut s = Self::constant(cap, mean);
        for &(k, a) in cos {
            if k >= 1 && k <= cap {
                let k = k as i64;
                *s.slot(k) += Complex64::new(0.5 * a, 0.0);
                *s.slot(-k) += Complex64::new(0.5 * a, 0.0);
            }
        }
        for &(k, b) in sin {
            if k >= 1 && k <= cap {
                let k = k as i64;
                *s.slot(k) += Complex64::new(0.0, -0.5 * b);
                *s.slot(-k) += Complex64::new(0.0, 0.5 * b);
            }
        }
        s
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficients indexed `-cap ..= cap`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.cap {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.cap as i64) as usize]
        }
    }

    fn slot(&mut self, k: i64) -> &mut Complex64 {
        &mut self.coeffs[(k + self.cap as i64) as usize]
    }

    /// Coefficient of `cos kθ` (`k >= 1`), or the mean for `k = 0`.
    pub fn cos_coefficient(&self, k: usize) -> f64 {
        let k = k as i64;
        if k == 0 {
            self.coeff(0).re
        } else {
            (self.coeff(k) + self.coeff(-k)).re
        }
    }

    /// Coefficient of `sin kθ`.
    pub fn sin_coefficient(&self, k: usize) -> f64 {
        let k = k as i64;
        (Complex64::i() * (self.coeff(k) - self.coeff(-k))).re
    }

    /// Harmonics `(k, c_k)` with `c_k != 0`.
    pub fn support(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let cap = self.cap as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - cap, c))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
    }

    /// `sum |c_k|`, a bound for the sup norm on the real circle.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    fn check_cap(&self, other: &Self) -> Result<()> {
        if self.cap == other.cap {
            Ok(())
        } else {
            Err(Error::CapMismatch {
                left: self.cap,
                right: other.cap,
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_cap(other)?;
        Ok(Self {
            cap: self.cap,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            real: self.real && other.real,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_cap(other)?;
        Ok(Self {
            cap: self.cap,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            real: self.real && other.real,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            cap: self.cap,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            real: self.real,
        }
    }

    /// Product truncated to the cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_cap(other)?;
        let cap = self.cap as i64;
        let mut out = Self::zero(self.cap);
        out.real = self.real && other.real;
        for (i, a) in self.support() {
            for (j, b) in other.support() {
                let k = i + j;
                if k.abs() <= cap {
                    *out.slot(k) += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `d/dθ`.
    pub fn derivative(&self) -> Self {
        let cap = self.cap as i64;
        Self {
            cap: self.cap,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, (i as i64 - cap) as f64))
                .collect(),
            real: self.real,
        }
    }

    /// Keeps `lo <= |k| <= hi`.
    pub fn band(&self, lo: usize, hi: usize) -> Self {
        let mut out = self.clone();
        let cap = self.cap as i64;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = (i as i64 - cap).unsigned_abs() as usize;
            if k < lo || k > hi {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Same data at another cap, dropping or padding harmonics.
    pub fn with_cap(&self, cap: usize) -> Self {
        let mut out = Self::zero(cap);
        out.real = self.real;
        for (k, c) in self.support() {
            if k.unsigned_abs() as usize <= cap {
                *out.slot(k) = c;
            }
        }
        out
    }

    /// Value at a real angle.
    pub fn eval(&self, theta: f64) -> Complex64 {
        self.support()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }
}

/// The one-form `a(θ) dθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm(pub FourierSeries);

/// The vector field `f(θ) ∂_θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField(pub FourierSeries);

impl OneForm {
    /// `dθ`.
    pub fn dtheta(cap: usize) -> Self {
        OneForm(FourierSeries::constant(cap, 1.0))
    }

    pub fn density(&self) -> &FourierSeries {
        &self.0
    }
}

impl VectorField {
    pub fn component(&self) -> &FourierSeries {
        &self.0
    }
}

/// `L_v (a dθ) = (a f' + a' f) dθ = (a f)' dθ`.
pub fn lie_derivative_oneform(v: &VectorField, w: &OneForm) -> Result<OneForm> {
    Ok(OneForm(w.0.mul(&v.0)?.derivative()))
}

/// Solves `L_v dθ + P beta = 0`, with `P` the projection on
/// `1 <= |k| <= cutoff`: `f_k = -beta_k / (ik)`.
///
/// A nonzero mean is an obstruction unless `exclude_mean` is set.
pub fn solve_homological(beta: &OneForm, cutoff: usize, exclude_mean: bool) -> Result<VectorField> {
    let mean = beta.0.coeff(0);
    if !exclude_mean && mean.norm() > 0.0 {
        return Err(Error::Obstruction { mean: mean.re });
    }
    let cap = beta.0.cap();
    let mut f = FourierSeries::zero(cap);
    f.real = beta.0.real;
    for k in 1..=cutoff.min(cap) as i64 {
        for k in [k, -k] {
            *f.slot(k) = Complex64::new(0.0, 1.0) * beta.0.coeff(k) / k as f64;
        }
    }
    Ok(VectorField(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieExpansion {
    pub form: OneForm,
    /// `l1` magnitude of `L_v^order w / order!`.
    pub last_term: f64,
    /// Geometric continuation of the last two term magnitudes; `inf` when
    /// they do not decrease.
    pub tail_estimate: f64,
}

/// `sum_{j <= order} L_v^j w / j!`, truncated at the cap after each step.
pub fn oneform_lie_exp(v: &VectorField, w: &OneForm, order: usize) -> Result<LieExpansion> {
    if order == 0 {
        return Err(Error::Precondition("order must be at least 1".into()));
    }
    let mut sum = w.0.clone();
    let mut term = w.clone();
    let mut prev_mag = w.0.l1_norm();
    let mut last_mag = prev_mag;
    for j in 1..=order {
        term = OneForm(lie_derivative_oneform(v, &term)?.0.scale(1.0 / j as f64));
        sum = sum.add(&term.0)?;
        prev_mag = last_mag;
        last_mag = term.0.l1_norm();
    }
    let ratio = if prev_mag > 0.0 { last_mag / prev_mag } else { 0.0 };
    let tail_estimate = if ratio < 1.0 {
        last_mag * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    Ok(LieExpansion {
        form: OneForm(sum),
        last_term: last_mag,
        tail_estimate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierKind {
    OneForm,
    VectorField,
}

/// Serialized Fourier data; `coefficients[i]` is `[re, im]` of harmonic
/// `i - cap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDocument {
    pub schema: String,
    pub kind: FourierKind,
    pub cap: usize,
    pub real: bool,
    pub coefficients: Vec<[f64; 2]>,
}

impl FourierSeries {
    pub fn to_document(&self, kind: FourierKind) -> FourierDocument {
        FourierDocument {
            schema: FOURIER_SCHEMA.to_string(),
            kind,
            cap: self.cap,
            real: self.real,
            coefficients: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_document(doc: &FourierDocument) -> Result<Self> {
        if doc.schema != FOURIER_SCHEMA {
            return Err(Error::Parse(format!("unknown fourier schema {:?}", doc.schema)));
        }
        let coeffs = doc
            .coefficients
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::new(doc.cap, coeffs, doc.real)
    }
}
