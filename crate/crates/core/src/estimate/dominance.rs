//! One-sided comparison of an empirical CDF against a reference CDF.
//!
//! The point of maximum difference is where `F_emp - F_ref` peaks. Scaled by
//! `sqrt(k)` it is compared with the one-sided Kolmogorov critical value;
//! exceeding it marks a significant point of dominance (the sample sits to
//! the left of the reference there).

use rand::Rng as _;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::ecdf::{Cdf, Ecdf};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDifference {
    pub v: f64,
    pub m: f64,
}

/// Supremum of `F_emp(v) - F_ref(v)`.
///
/// `F_emp` only rises at its support points and `F_ref` never falls, so the
/// supremum is attained at a support point, either at the step or just left
/// of it. Both sides of every distinct support point are checked. Ties go to
/// the smaller `v`.
pub fn max_difference<C: Cdf + ?Sized>(emp: &Ecdf, reference: &C) -> MaxDifference {
    let mut best = MaxDifference {
        v: f64::NAN,
        m: f64::NEG_INFINITY,
    };
    for (x, before, at) in emp.steps() {
        let left = before - reference.cdf_left(x);
        if left > best.m {
            best = MaxDifference { v: x, m: left };
        }
        let right = at - reference.cdf(x);
        if right > best.m {
            best = MaxDifference { v: x, m: right };
        }
    }
    best
}

/// Asymptotic one-sided Kolmogorov critical value `sqrt(ln(1/alpha) / 2)`.
pub fn kolmogorov_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(((1.0 / alpha).ln() / 2.0).sqrt())
}

/// Monte Carlo `1 - alpha` quantile of `sqrt(n) sup(F_n - F)` for samples of
/// size `n` from a continuous law.
///
/// Uniform order statistics are generated directly from normalized
/// exponential spacings, so no sort is needed.
pub fn kolmogorov_critical_mc(alpha: f64, n: usize, trials: usize, seed: u64) -> Result<f64> {
    kolmogorov_critical(alpha)?;
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter(
            "n and trials must be positive".into(),
        ));
    }
    let mut spacings = vec![0.0; n + 1];
    let mut stats: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            let mut total = 0.0;
            for s in spacings.iter_mut() {
                *s = rng.sample::<f64, _>(Exp1);
                total += *s;
            }
            let mut cum = 0.0;
            let mut d_plus = f64::NEG_INFINITY;
            for (i, s) in spacings[..n].iter().enumerate() {
                cum += s;
                d_plus = d_plus.max((i + 1) as f64 / n as f64 - cum / total);
            }
            d_plus * (n as f64).sqrt()
        })
        .collect();
    let idx = ((1.0 - alpha) * trials as f64).ceil() as usize;
    let idx = idx.clamp(1, trials) - 1;
    let (_, q, _) = stats.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*q)
}

/// How the critical value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CriticalValue {
    Asymptotic,
    /// Finite-sample quantile at the sample size under test.
    MonteCarlo {
        trials: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceSettings {
    pub alpha: f64,
    pub critical: CriticalValue,
}

impl Default for DominanceSettings {
    fn default() -> Self {
        DominanceSettings {
            alpha: 0.05,
            critical: CriticalValue::Asymptotic,
        }
    }
}

impl DominanceSettings {
    pub fn critical_value(&self, k: usize) -> Result<f64> {
        match self.critical {
            CriticalValue::Asymptotic => kolmogorov_critical(self.alpha),
            CriticalValue::MonteCarlo { trials, seed } => {
                kolmogorov_critical_mc(self.alpha, k, trials, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub v_max: f64,
    pub m_max: f64,
    /// `m_max * sqrt(k)`.
    pub statistic: f64,
    pub critical: f64,
    pub dominated: bool,
}

/// Tests `emp` (of `k` observations) for a point of dominance over `reference`.
pub fn dominance_test<C: Cdf + ?Sized>(
    emp: &Ecdf,
    reference: &C,
    k: usize,
    critical: f64,
) -> DominanceReport {
    let MaxDifference { v, m } = max_difference(emp, reference);
    let statistic = m * (k as f64).sqrt();
    DominanceReport {
        v_max: v,
        m_max: m,
        statistic,
        critical,
        dominated: statistic > critical,
    }
}
