use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Exact complex coefficient `(re, im)` with rational parts.
pub type RationalPair = Complex<BigRational>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    ExactReal,
    ExactComplex,
    Float,
}

impl ScalarMode {
    pub fn is_exact(self) -> bool {
        !matches!(self, ScalarMode::Float)
    }
}

/// Coefficient field of a truncated series.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    /// `num / den`, with `den != 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Multiplicative inverse; `None` for zero.
    fn recip(&self) -> Option<Self>;

    fn modulus(&self) -> f64;

    fn to_c64(&self) -> Complex64;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Formats as `"p/q"`, always with an explicit denominator.
pub fn rational_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or an integer `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational p/q: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

fn rational_json(v: &Value) -> Result<BigRational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(BigRational::from_integer(n.as_i64().unwrap().into())),
        _ => Err(Error::Parse(format!("expected a \"p/q\" string, got {v}"))),
    }
}

fn rational_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Scalar for BigRational {
    const MODE: ScalarMode = ScalarMode::ExactReal;

    fn from_ratio(num: i64, den: i64) -> Self {
        ratio(num, den)
    }

    fn recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| num_traits::Inv::inv(self.clone()))
    }

    fn modulus(&self) -> f64 {
        rational_f64(self).abs()
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_f64(self), 0.0)
    }

    fn to_json(&self) -> Value {
        Value::String(rational_to_string(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        rational_json(v)
    }
}

impl Scalar for RationalPair {
    const MODE: ScalarMode = ScalarMode::ExactComplex;

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(ratio(num, den), BigRational::zero())
    }

    fn recip(&self) -> Option<Self> {
        let n = self.norm_sqr();
        (!n.is_zero()).then(|| Complex::new(&self.re / &n, -&self.im / &n))
    }

    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_f64(&self.re), rational_f64(&self.im))
    }

    fn to_json(&self) -> Value {
        Value::Array(vec![
            Value::String(rational_to_string(&self.re)),
            Value::String(rational_to_string(&self.im)),
        ])
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(a) if a.len() == 2 => Ok(Complex::new(rational_json(&a[0])?, rational_json(&a[1])?)),
            other => Ok(Complex::new(rational_json(other)?, BigRational::zero())),
        }
    }
}

impl Scalar for Complex64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.inv())
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let num = |x: &Value| {
            x.as_f64()
                .ok_or_else(|| Error::Parse(format!("expected a number, got {x}")))
        };
        match v {
            Value::Array(a) if a.len() == 2 => Ok(Complex64::new(num(&a[0])?, num(&a[1])?)),
            other => Ok(Complex64::new(num(other)?, 0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings() {
        let r = BigRational::from_ratio(-223, 24);
        assert_eq!(rational_to_string(&r), "-223/24");
        assert_eq!(parse_rational("-223/24").unwrap(), r);
        assert_eq!(parse_rational("5").unwrap(), BigRational::from_ratio(5, 1));
        assert_eq!(rational_to_string(&BigRational::from_ratio(10, 2)), "5/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn pair_recip() {
        let z = RationalPair::new(BigRational::from_ratio(1, 1), BigRational::from_ratio(1, 1));
        let w = z.recip().unwrap();
        assert_eq!(z * w, RationalPair::one());
        assert!(RationalPair::zero().recip().is_none());
    }

    #[test]
    fn json_round_trip() {
        let z = RationalPair::new(BigRational::from_ratio(3, 7), BigRational::from_ratio(-1, 2));
        assert_eq!(RationalPair::from_json(&z.to_json()).unwrap(), z);
        let c = Complex64::new(0.1, -2.5);
        assert_eq!(Complex64::from_json(&c.to_json()).unwrap(), c);
    }
}
