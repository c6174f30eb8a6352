//! Truncated one-variable power series over exact rationals, exact rational
//! pairs or complex floats, with the disk norms of the analytic estimates.

mod io;
mod power;
mod scalar;

pub use io::{SeriesDocument, SERIES_SCHEMA};
pub use power::{lie_exp, linearization_action, Derivation, NormKind, PowerSeries};
pub use scalar::{parse_rational, rational_to_string, RationalPair, Scalar, ScalarMode};

pub use num_complex::Complex64;
pub use num_rational::BigRational;

/// Exact real series.
pub type ExactSeries = PowerSeries<BigRational>;
/// Exact complex series with rational real and imaginary parts.
pub type ExactComplexSeries = PowerSeries<RationalPair>;
/// Double-precision complex series.
pub type FloatSeries = PowerSeries<Complex64>;
