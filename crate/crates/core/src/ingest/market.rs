//! Market concentration, sample selection and recentering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{InsurerRecord, MarketSample, PartitionKey};
use crate::error::{Error, Result};

/// Herfindahl-Hirschman index of one state-year, on the fraction scale,
/// with market shares taken from member months.
pub fn compute_hhi(sample: &MarketSample, state: &str, year: i32) -> Result<f64> {
    let key = PartitionKey {
        state: state.to_string(),
        year,
    };
    let sizes = sample
        .partition_sizes(&key)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Domain(format!("no insurers in {key}")))?;
    hhi_from_sizes(&sizes)
}

pub fn hhi_from_sizes(sizes: &[f64]) -> Result<f64> {
    let total: f64 = sizes.iter().sum();
    if sizes.is_empty() || !(total > 0.0) {
        return Err(Error::Domain("HHI needs positive total enrollment".into()));
    }
    Ok(sizes.iter().map(|n| (n / total).powi(2)).sum())
}

/// HHI for every state present in `year`.
pub fn hhi_by_state(sample: &MarketSample, year: i32) -> Result<BTreeMap<String, f64>> {
    sample
        .partitions()
        .keys()
        .filter(|k| k.year == year)
        .map(|k| Ok((k.state.clone(), compute_hhi(sample, &k.state, year)?)))
        .collect()
}

/// Year whose concentration defines competitiveness.
pub const COMPETITIVE_REFERENCE_YEAR: i32 = 2015;

/// States whose small-group HHI in 2015 is strictly below the unweighted
/// mean HHI across the states present that year.
pub fn classify_competitive(sample: &MarketSample) -> Result<BTreeSet<String>> {
    classify_competitive_in(sample, COMPETITIVE_REFERENCE_YEAR)
}

pub fn classify_competitive_in(sample: &MarketSample, year: i32) -> Result<BTreeSet<String>> {
    let hhi = hhi_by_state(sample, year)?;
    if hhi.is_empty() {
        return Err(Error::Domain(format!("no {year} data to classify states")));
    }
    let mean = hhi.values().sum::<f64>() / hhi.len() as f64;
    Ok(hhi
        .into_iter()
        .filter(|(_, h)| *h < mean)
        .map(|(s, _)| s)
        .collect())
}

/// Sample selection rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Records need strictly more member months than this.
    pub min_member_months: u64,
    /// Restrict to these states when set.
    pub states: Option<BTreeSet<String>>,
    /// Restrict to these benefit years when set.
    pub years: Option<BTreeSet<i32>>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            min_member_months: 2_000,
            states: None,
            years: None,
        }
    }
}

impl SelectionConfig {
    pub fn keeps(&self, r: &InsurerRecord) -> bool {
        r.is_complete()
            && r.member_months.is_some_and(|n| n > self.min_member_months)
            && self.states.as_ref().is_none_or(|s| s.contains(&r.state))
            && self.years.as_ref().is_none_or(|y| y.contains(&r.year))
    }
}

/// Drops small or incomplete records and optionally restricts states.
/// An empty result is valid; callers decide whether to warn.
pub fn select_sample(records: &[InsurerRecord], config: &SelectionConfig) -> MarketSample {
    MarketSample::new(
        records
            .iter()
            .filter(|r| config.keeps(r))
            .cloned()
            .collect(),
    )
}

/// Projects transfers onto the zero-sum plane within each state-year by
/// subtracting each insurer's enrollment share of the partition total.
pub fn recenter_transfers(sample: MarketSample) -> MarketSample {
    let mut adjust = vec![0.0; sample.k()];
    for idx in sample.partitions().values() {
        let recs = sample.records();
        let total_t: f64 = idx.iter().filter_map(|&i| recs[i].transfer).sum();
        let total_n: f64 = idx
            .iter()
            .map(|&i| recs[i].member_months.unwrap_or(0) as f64)
            .sum();
        if total_n > 0.0 {
            for &i in idx {
                adjust[i] = total_t * recs[i].member_months.unwrap_or(0) as f64 / total_n;
            }
        }
    }
    let mut i = 0;
    sample.map_records(|r| {
        if let Some(t) = r.transfer.as_mut() {
            *t -= adjust[i];
        }
        i += 1;
    })
}
