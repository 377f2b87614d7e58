//! Realized versus shock-explained transfer volume.
//!
//! Under the null model `T'_i ~ N(0, beta^2 a_i)`, so
//! `E sum |T'_i| = beta sqrt(2/pi) sum sqrt(a_i)`. The ratio `f` of realized
//! to expected volume gives `1 - 1/f`, the share of transfer dollars that
//! random shocks do not explain.

use serde::{Deserialize, Serialize};

use crate::domain::{BetaEstimate, MarketSample};
use crate::error::{Error, Result};
use crate::mcsim::{compute_ai, SimPlan};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    ClosedForm,
    /// Mean simulated volume over independent replicates.
    MonteCarlo {
        replicates: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub realized: f64,
    pub expected: f64,
    pub f: f64,
    pub non_random_fraction: f64,
    pub method: VolumeMethod,
    pub beta: f64,
}

fn require_normalized(sample: &MarketSample) -> Result<()> {
    if sample.normalization_applied() {
        Ok(())
    } else {
        Err(Error::NotNormalized)
    }
}

/// Closed-form `E sum |T'_i|`, summed over state-years.
pub fn expected_abs_transfers(sample: &MarketSample, beta: f64) -> Result<f64> {
    require_normalized(sample)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let mut root_sum = 0.0;
    for key in sample.partitions().keys() {
        let sizes = sample.partition_sizes(key).expect("partition exists");
        root_sum += (0..sizes.len())
            .map(|i| compute_ai(&sizes, i).sqrt())
            .sum::<f64>();
    }
    Ok(beta * (2.0 / std::f64::consts::PI).sqrt() * root_sum)
}

/// `sum |T_i|` over the sample.
pub fn realized_abs_transfers(sample: &MarketSample) -> Result<f64> {
    require_normalized(sample)?;
    sample
        .records()
        .iter()
        .map(|r| {
            r.transfer
                .map(f64::abs)
                .ok_or_else(|| Error::Domain("transfer missing".into()))
        })
        .sum()
}

/// Mean of `sum |T'_i|` over `replicates` simulated markets.
pub fn expected_abs_transfers_mc(
    sample: &MarketSample,
    beta: f64,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    require_normalized(sample)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter(
            "replicates must be positive".into(),
        ));
    }
    let plan = SimPlan::new(sample)?;
    let mut buf = vec![0.0; plan.k()];
    let mut total = 0.0;
    for r in 0..replicates {
        let mut rng = rng::stream(seed, r as u64);
        plan.draw_normalized(beta, &mut rng, &mut buf);
        total += plan.abs_volume(&buf);
    }
    Ok(total / replicates as f64)
}

pub fn volume_report_with(
    sample: &MarketSample,
    beta: f64,
    method: VolumeMethod,
) -> Result<VolumeReport> {
    let realized = realized_abs_transfers(sample)?;
    let expected = match method {
        VolumeMethod::ClosedForm => expected_abs_transfers(sample, beta)?,
        VolumeMethod::MonteCarlo { replicates, seed } => {
            expected_abs_transfers_mc(sample, beta, replicates, seed)?
        }
    };
    if !(expected > 0.0) {
        return Err(Error::Domain(
            "expected transfer volume is zero; f is undefined".into(),
        ));
    }
    let f = realized / expected;
    Ok(VolumeReport {
        realized,
        expected,
        f,
        non_random_fraction: 1.0 - 1.0 / f,
        method,
        beta,
    })
}

/// Closed-form volume report at an estimated beta.
pub fn volume_report(sample: &MarketSample, estimate: &BetaEstimate) -> Result<VolumeReport> {
    volume_report_with(sample, estimate.beta, VolumeMethod::ClosedForm)
}
