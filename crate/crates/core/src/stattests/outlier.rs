use serde::{Deserialize, Serialize};

use crate::domain::{MarketSample, NormalizedSeries};
use crate::error::{Error, Result};
use crate::mcsim::SimPlan;
use crate::rng;
use crate::special::{binomial_upper_tail, two_sigma_tail};

/// Fewest simulation trials accepted; fewer cannot resolve p-values near 1e-2.
pub const MIN_SIMULATION_TRIALS: usize = 1_000;

/// Number and share of `|T̄_i| > 2 beta`.
pub fn outlier_fraction(series: &NormalizedSeries, beta: f64) -> (usize, f64) {
    if series.is_empty() {
        return (0, 0.0);
    }
    let count = series
        .values
        .iter()
        .filter(|v| v.abs() > 2.0 * beta)
        .count();
    (count, count as f64 / series.len() as f64)
}

/// `P(Binomial(k, 1 - erf(sqrt 2)) >= count)`.
pub fn outlier_pvalue_binomial(k: usize, count: usize) -> f64 {
    binomial_upper_tail(k as u64, two_sigma_tail(), count as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierMode {
    Binomial,
    /// Share of shock-only simulated markets with at least as many outliers.
    Simulation {
        trials: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub beta: f64,
    pub fraction: f64,
    pub count: usize,
    pub p_value: f64,
    /// Zero for the binomial mode.
    pub trials: usize,
    pub mode: OutlierMode,
    /// No simulated market reached the count; the true p-value is below `1/trials`.
    pub upper_bound: bool,
}

impl OutlierReport {
    /// `"< 1e-5"` style for bounds, plain otherwise.
    pub fn p_value_display(&self) -> String {
        if self.upper_bound {
            format!("<{}", self.p_value)
        } else {
            format!("{}", self.p_value)
        }
    }
}

/// Outlier count at `beta` with a p-value under the chosen null.
pub fn outlier_pvalue(
    sample: &MarketSample,
    beta: f64,
    mode: OutlierMode,
) -> Result<OutlierReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    let series = sample.normalized_series()?;
    let (count, fraction) = outlier_fraction(&series, beta);
    match mode {
        OutlierMode::Binomial => Ok(OutlierReport {
            beta,
            fraction,
            count,
            p_value: outlier_pvalue_binomial(series.len(), count),
            trials: 0,
            mode,
            upper_bound: false,
        }),
        OutlierMode::Simulation { trials, seed } => {
            if trials < MIN_SIMULATION_TRIALS {
                return Err(Error::InvalidParameter(format!(
                    "simulation mode needs at least {MIN_SIMULATION_TRIALS} trials, got {trials}"
                )));
            }
            let plan = SimPlan::new(sample)?;
            let mut buf = vec![0.0; plan.k()];
            let mut hits = 0usize;
            for t in 0..trials {
                let mut rng = rng::stream(seed, t as u64);
                plan.draw_normalized(beta, &mut rng, &mut buf);
                let c = buf.iter().filter(|v| v.abs() > 2.0 * beta).count();
                if c >= count {
                    hits += 1;
                }
            }
            let upper_bound = hits == 0;
            let p_value = if upper_bound {
                1.0 / trials as f64
            } else {
                hits as f64 / trials as f64
            };
            Ok(OutlierReport {
                beta,
                fraction,
                count,
                p_value,
                trials,
                mode,
                upper_bound,
            })
        }
    }
}

/// Largest `|T̄_i| / beta` and how many points lie beyond four deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaExceedance {
    pub ratio: f64,
    pub beyond_four: usize,
    /// `P(|Z| > 4)` under the normal null, below 1e-4.
    pub four_sigma_tail: f64,
}

pub fn sigma_exceedance(series: &NormalizedSeries, beta: f64) -> Result<SigmaExceedance> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    Ok(SigmaExceedance {
        ratio: series.max_abs() / beta,
        beyond_four: series
            .values
            .iter()
            .filter(|v| v.abs() > 4.0 * beta)
            .count(),
        four_sigma_tail: 2.0 * crate::special::normal_sf(4.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_strictly_above() {
        let s = NormalizedSeries::from_values(vec![2.0, -2.0, 2.5, -3.0, 0.1]);
        assert_eq!(outlier_fraction(&s, 1.0), (2, 0.4));
        assert_eq!(outlier_fraction(&s, 1.5).0, 0);
    }

    #[test]
    fn median_count_near_half() {
        let k = 100_000;
        let expected = (k as f64 * two_sigma_tail()).round() as usize;
        let p = outlier_pvalue_binomial(k, expected);
        assert!((p - 0.5).abs() < 0.03, "{p}");
    }

    #[test]
    fn exceedance_ratio() {
        let s = NormalizedSeries::from_values(vec![0.0; 4]);
        assert_eq!(sigma_exceedance(&s, 1.0).unwrap().ratio, 0.0);
        let s = NormalizedSeries::from_values(vec![6.0]);
        assert_eq!(sigma_exceedance(&s, 3.0).unwrap().ratio, 2.0);
        assert!(sigma_exceedance(&s, 1.0).unwrap().four_sigma_tail < 1e-4);
    }
}
