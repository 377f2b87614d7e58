use serde::{Deserialize, Serialize};

use crate::domain::NormalizedSeries;
use crate::error::{Error, Result};
use crate::special::{binomial_upper_tail, erf_inv, tenth_sigma_mass};

/// The interior-count p-value sums from `s2 + 1`, so it is `P(B > s2)`.
pub const NC_PROSE_NOTE: &str =
    "interior p-value computed as P(B >= s2 + 1); the verbal description says 's2 or more'";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcReport {
    pub delta0: f64,
    /// Smallest beta under which the largest `|T̄|` is not implausibly far out.
    pub beta0: f64,
    /// Points with `|T̄| < 0.1 beta0`.
    pub s2: usize,
    pub p01: f64,
    pub p2: f64,
    /// The reference beta (if any) lies below `beta0`.
    pub significant_case1: bool,
    pub significant_case2: bool,
    pub reference_beta: Option<f64>,
}

/// Normal-comparison test at level `p`: is there a point too far out, or are
/// there too many points near zero, for any single normal scale?
pub fn nc_test(series: &NormalizedSeries, p: f64) -> Result<NcReport> {
    nc_test_with_reference(series, p, None)
}

pub fn nc_test_with_reference(
    series: &NormalizedSeries,
    p: f64,
    reference_beta: Option<f64>,
) -> Result<NcReport> {
    let k = series.len();
    if k == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    let delta0 = std::f64::consts::SQRT_2 * erf_inv(1.0 - p / k as f64);
    let beta0 = series.max_abs() / delta0;
    let s2 = series
        .values
        .iter()
        .filter(|v| v.abs() < 0.1 * beta0)
        .count();
    let p01 = tenth_sigma_mass();
    let p2 = binomial_upper_tail(k as u64, p01, s2 as u64 + 1);
    Ok(NcReport {
        delta0,
        beta0,
        s2,
        p01,
        p2,
        significant_case1: reference_beta.is_some_and(|b| b < beta0),
        significant_case2: p2 < p / 2.0,
        reference_beta,
    })
}
