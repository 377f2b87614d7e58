//! Outlier counts against `2 beta`, and two normality checks that need
//! weaker assumptions than the dominance tests.

mod nc;
mod outlier;
mod shapiro;

pub use nc::{nc_test, nc_test_with_reference, NcReport, NC_PROSE_NOTE};
pub use outlier::{
    outlier_fraction, outlier_pvalue, outlier_pvalue_binomial, sigma_exceedance, OutlierMode,
    OutlierReport, SigmaExceedance, MIN_SIMULATION_TRIALS,
};
pub use shapiro::{shapiro_wilk, shapiro_wilk_coefficients, ShapiroWilk, SW_METHOD};
