//! State-year price factors mapping nominal dollars into a common unit
//! (average-state 2017 dollars).

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Deserialize;

use crate::domain::{InsurerRecord, MarketSample, PartitionKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CostIndex {
    id: String,
    factors: Option<BTreeMap<PartitionKey, f64>>,
}

#[derive(Deserialize)]
struct Row {
    state: String,
    year: i32,
    factor: f64,
}

impl CostIndex {
    /// Maps every state-year to 1.0.
    pub fn identity() -> Self {
        CostIndex {
            id: "identity".into(),
            factors: None,
        }
    }

    pub fn from_factors(
        id: impl Into<String>,
        factors: BTreeMap<PartitionKey, f64>,
    ) -> Result<Self> {
        if let Some((k, f)) = factors.iter().find(|(_, f)| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "cost index factor for {k} must be positive, got {f}"
            )));
        }
        Ok(CostIndex {
            id: id.into(),
            factors: Some(factors),
        })
    }

    /// Reads a `state,year,factor` CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(File::open(path)?);
        let mut factors = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            factors.insert(
                PartitionKey {
                    state: row.state.trim().to_ascii_uppercase(),
                    year: row.year,
                },
                row.factor,
            );
        }
        Self::from_factors(path.display().to_string(), factors)
    }

    /// Derives factors from premium per member month: the unweighted mean
    /// across states of the `target_year` premium rate, divided by each
    /// state-year's own rate.
    pub fn derive_from_premiums(records: &[InsurerRecord], target_year: i32) -> Result<Self> {
        let mut totals: BTreeMap<PartitionKey, (f64, f64)> = BTreeMap::new();
        for r in records {
            if let (Some(p), Some(n)) = (r.premiums, r.member_months) {
                if n > 0 {
                    let e = totals.entry(r.partition_key()).or_default();
                    e.0 += p;
                    e.1 += n as f64;
                }
            }
        }
        let rates: BTreeMap<PartitionKey, f64> = totals
            .into_iter()
            .filter(|(_, (p, n))| *p > 0.0 && *n > 0.0)
            .map(|(k, (p, n))| (k, p / n))
            .collect();
        let target: Vec<f64> = rates
            .iter()
            .filter(|(k, _)| k.year == target_year)
            .map(|(_, r)| *r)
            .collect();
        if target.is_empty() {
            return Err(Error::Domain(format!(
                "no premium data for {target_year} to anchor the cost index"
            )));
        }
        let anchor = target.iter().sum::<f64>() / target.len() as f64;
        let factors = rates.into_iter().map(|(k, r)| (k, anchor / r)).collect();
        Self::from_factors(format!("premium-pmpm-{target_year}"), factors)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn factor(&self, key: &PartitionKey) -> Option<f64> {
        match &self.factors {
            None => Some(1.0),
            Some(f) => f.get(key).copied(),
        }
    }
}

/// Rescales transfers, costs and premiums into the index's unit.
///
/// Fails if the sample was already normalized or the index lacks a state-year.
pub fn normalize_dollars(sample: MarketSample, index: &CostIndex) -> Result<MarketSample> {
    if sample.normalization_applied() {
        return Err(Error::AlreadyNormalized(
            sample.cost_index_id().unwrap_or_default().to_string(),
        ));
    }
    let mut factors = Vec::with_capacity(sample.k());
    for r in sample.records() {
        let key = r.partition_key();
        let f = index.factor(&key).ok_or(Error::MissingCostIndex {
            state: key.state,
            year: key.year,
        })?;
        factors.push(f);
    }
    let mut it = factors.into_iter();
    let scaled = sample.map_records(|r| {
        let f = it.next().expect("one factor per record");
        for v in [&mut r.transfer, &mut r.costs, &mut r.premiums] {
            if let Some(x) = v.as_mut() {
                *x *= f;
            }
        }
    });
    Ok(scaled.with_normalization(index.id().to_string()))
}
