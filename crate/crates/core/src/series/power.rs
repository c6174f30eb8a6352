use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Which disk norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// `sum |c_k| t^k`, a majorant of the sup norm on `|z| <= t`.
    SupBound,
    /// `sqrt(sum |c_k|^2 pi t^{2k+2} / (k+1))`, the L2 norm on the disk.
    L2Disk,
}

/// A power series `c_0 + c_1 z + ... + c_D z^D` truncated at degree `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> PowerSeries<S> {
    /// Pads with zeros up to `truncation`; coefficients beyond it are dropped.
    pub fn new(truncation: usize, mut coeffs: Vec<S>) -> Self {
        coeffs.resize(truncation + 1, S::zero());
        Self { coeffs }
    }

    pub fn zero(truncation: usize) -> Self {
        Self::new(truncation, Vec::new())
    }

    pub fn constant(truncation: usize, c: S) -> Self {
        Self::new(truncation, vec![c])
    }

    pub fn one(truncation: usize) -> Self {
        Self::constant(truncation, S::one())
    }

    /// `c z^k`, zero when `k > truncation`.
    pub fn monomial(truncation: usize, k: usize, c: S) -> Self {
        let mut s = Self::zero(truncation);
        if k <= truncation {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn z(truncation: usize) -> Self {
        Self::monomial(truncation, 1, S::one())
    }

    /// Builds from `(degree, num, den)` triples.
    pub fn from_ratios(truncation: usize, terms: &[(usize, i64, i64)]) -> Self {
        let mut s = Self::zero(truncation);
        for &(k, p, q) in terms {
            if k <= truncation {
                s.coeffs[k] = s.coeffs[k].clone() + S::from_ratio(p, q);
            }
        }
        s
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    /// Least `k` with `c_k != 0`; `D + 1` for the zero series.
    pub fn valuation(&self) -> usize {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Same coefficients at another truncation, dropping or padding.
    pub fn with_truncation(&self, truncation: usize) -> Self {
        Self::new(truncation, self.coeffs.clone())
    }

    fn same_truncation(&self, other: &Self) -> Result<()> {
        if self.truncation() == other.truncation() {
            Ok(())
        } else {
            Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: other.truncation(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_truncation(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_truncation(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    /// Cauchy product truncated at `D`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_truncation(other)?;
        let d = self.truncation();
        let mut out = vec![S::zero(); d + 1];
        let (va, vb) = (self.valuation(), other.valuation());
        for i in va..=d {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in vb..=d - i {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].clone() + self.coeffs[i].clone() * other.coeffs[j].clone();
            }
        }
        Ok(Self { coeffs: out })
    }

    /// `f'`. The degree-`D` coefficient of the result would need `c_{D+1}`
    /// and is set to zero.
    pub fn derive(&self) -> Self {
        let d = self.truncation();
        let mut out = vec![S::zero(); d + 1];
        for k in 1..=d {
            out[k - 1] = self.coeffs[k].clone() * S::from_ratio(k as i64, 1);
        }
        Self { coeffs: out }
    }

    /// `∂^{-1} f` with zero constant term, and whether a nonzero degree-`D`
    /// coefficient was discarded.
    pub fn antiderive_flagged(&self) -> (Self, bool) {
        let d = self.truncation();
        let mut out = vec![S::zero(); d + 1];
        for k in 0..d {
            out[k + 1] = self.coeffs[k].clone() * S::from_ratio(1, k as i64 + 1);
        }
        (Self { coeffs: out }, !self.coeffs[d].is_zero())
    }

    pub fn antiderive(&self) -> Self {
        self.antiderive_flagged().0
    }

    /// `f / z^k`, for `valuation(f) >= k`.
    pub fn divide_monomial(&self, k: usize) -> Result<Self> {
        let v = self.valuation();
        if v < k {
            return Err(Error::Division {
                power: k,
                valuation: v,
            });
        }
        let mut coeffs = self.coeffs[k.min(self.coeffs.len())..].to_vec();
        coeffs.resize(self.coeffs.len(), S::zero());
        Ok(Self { coeffs })
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c.to_c64())
    }

    pub fn to_c64(&self) -> PowerSeries<Complex64> {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|c| c.to_c64()).collect(),
        }
    }

    pub fn sup_bound(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut tk = 1.0;
        for c in &self.coeffs {
            acc += c.modulus() * tk;
            tk *= t;
        }
        acc
    }

    pub fn l2_disk(&self, t: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let mut acc = 0.0;
        let mut t2k2 = t * t;
        for (k, c) in self.coeffs.iter().enumerate() {
            let m = c.modulus();
            acc += m * m * pi * t2k2 / (k as f64 + 1.0);
            t2k2 *= t * t;
        }
        acc.sqrt()
    }

    pub fn norm(&self, t: f64, kind: NormKind) -> f64 {
        match kind {
            NormKind::SupBound => self.sup_bound(t),
            NormKind::L2Disk => self.l2_disk(t),
        }
    }
}

/// The derivation `v = g ∂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation<S> {
    generator: PowerSeries<S>,
}

impl<S: Scalar> Derivation<S> {
    pub fn new(generator: PowerSeries<S>) -> Self {
        Self { generator }
    }

    pub fn generator(&self) -> &PowerSeries<S> {
        &self.generator
    }

    /// `v(f) = g f'`.
    pub fn apply(&self, f: &PowerSeries<S>) -> Result<PowerSeries<S>> {
        self.generator.mul(&f.derive())
    }
}

/// `e^v f = sum_j v^j(f) / j!`, exact at truncation.
///
/// Needs `valuation(g) >= 2`, so that each application of `v` raises the
/// valuation of a nonconstant series and the sum stops after at most `D`
/// terms.
pub fn lie_exp<S: Scalar>(v: &Derivation<S>, f: &PowerSeries<S>) -> Result<PowerSeries<S>> {
    let val = v.generator.valuation();
    if val < 2 {
        return Err(Error::NonTerminatingGenerator { valuation: val });
    }
    let mut sum = f.clone();
    let mut term = f.clone();
    for j in 1..=f.truncation() + 1 {
        term = v.apply(&term)?.scale(&S::from_ratio(1, j as i64));
        if term.is_zero() {
            break;
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

/// `Df(eps)(xi) = eps ∂^{-1} xi + xi ∂^{-1} eps` for `f(eps) = eps ∂^{-1} eps`.
pub fn linearization_action<S: Scalar>(
    eps: &PowerSeries<S>,
    xi: &PowerSeries<S>,
) -> Result<PowerSeries<S>> {
    eps.mul(&xi.antiderive())?.add(&xi.mul(&eps.antiderive())?)
}
