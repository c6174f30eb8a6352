//! Fixtures shared by the benchmarks.

use scale_iter::series::{ExactSeries, FloatSeries};

/// `x^2/2 + x^3` truncated at `truncation`.
pub fn morse_start(truncation: usize) -> ExactSeries {
    ExactSeries::from_ratios(truncation, &[(2, 1, 2), (3, 1, 1)])
}

/// Newton target `x + x^2/10`.
pub fn newton_target(truncation: usize) -> ExactSeries {
    ExactSeries::from_ratios(truncation, &[(1, 1, 1), (2, 1, 10)])
}

pub fn newton_target_float(truncation: usize) -> FloatSeries {
    newton_target(truncation).to_c64()
}
