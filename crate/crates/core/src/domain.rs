//! Records shared by every stage of the pipeline.
//!
//! Money is carried as `f64` dollars. Enrollment size is measured in member
//! months, which is also the unit behind every `sqrt(n)` normalization.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Five-digit issuer identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct HiosId(String);

impl HiosId {
    pub fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        if raw.len() == 5 && raw.bytes().all(|b| b.is_ascii_digit()) {
            Ok(HiosId(raw.to_string()))
        } else {
            Err(Error::Parse(format!("malformed HIOS id `{raw}`")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for HiosId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        HiosId::parse(&value)
    }
}

impl From<HiosId> for String {
    fn from(value: HiosId) -> Self {
        value.0
    }
}

impl fmt::Display for HiosId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which ACA market a transfer belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Market {
    Individual,
    #[default]
    SmallGroup,
}

impl Market {
    pub fn as_str(&self) -> &'static str {
        match self {
            Market::Individual => "individual",
            Market::SmallGroup => "small-group",
        }
    }
}

impl std::str::FromStr for Market {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(Market::Individual),
            "small-group" | "small_group" | "smallgroup" => Ok(Market::SmallGroup),
            other => Err(Error::InvalidParameter(format!("unknown market `{other}`"))),
        }
    }
}

/// One insurer operating in one state in one benefit year.
///
/// Financial fields are optional because either source report may lack them;
/// [`crate::ingest::select_sample`] drops incomplete records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsurerRecord {
    pub hios_id: Option<HiosId>,
    pub company_name: String,
    pub state: String,
    pub year: i32,
    pub member_months: Option<u64>,
    /// Risk-adjustment transfer for the selected market; positive means received.
    pub transfer: Option<f64>,
    pub costs: Option<f64>,
    pub premiums: Option<f64>,
    pub reinsurance: Option<f64>,
    pub nonprofit: Option<bool>,
}

impl InsurerRecord {
    pub fn new(state: impl Into<String>, year: i32) -> Self {
        InsurerRecord {
            hios_id: None,
            company_name: String::new(),
            state: state.into(),
            year,
            member_months: None,
            transfer: None,
            costs: None,
            premiums: None,
            reinsurance: None,
            nonprofit: None,
        }
    }

    /// Checks the sign constraints on the populated fields.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("costs", self.costs), ("premiums", self.premiums)] {
            if let Some(v) = value {
                if !(v >= 0.0) {
                    return Err(Error::Domain(format!(
                        "{name} must be nonnegative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every field the analysis needs is present.
    pub fn is_complete(&self) -> bool {
        self.member_months.is_some()
            && self.transfer.is_some()
            && self.costs.is_some()
            && self.premiums.is_some()
    }

    pub fn partition_key(&self) -> PartitionKey {
        PartitionKey {
            state: self.state.clone(),
            year: self.year,
        }
    }
}

/// A state-year market. Transfers sum to zero within each one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartitionKey {
    pub state: String,
    pub year: i32,
}

impl fmt::Display for PartitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.state, self.year)
    }
}

/// Normalized transfer `T / sqrt(n)`.
pub fn normalize_transfer(record: &InsurerRecord) -> Result<f64> {
    let n = record
        .member_months
        .ok_or_else(|| Error::Domain("member months missing".into()))?;
    if n == 0 {
        return Err(Error::Domain(format!(
            "zero member months for {} in {}",
            record.company_name,
            record.partition_key()
        )));
    }
    let t = record
        .transfer
        .ok_or_else(|| Error::Domain("transfer missing".into()))?;
    Ok(t / (n as f64).sqrt())
}

/// A filtered, pooled collection of insurers grouped by state-year.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSample {
    records: Vec<InsurerRecord>,
    partitions: BTreeMap<PartitionKey, Vec<usize>>,
    normalization_applied: bool,
    cost_index_id: Option<String>,
}

impl MarketSample {
    /// Builds a sample and its partition map. Records keep their input order.
    pub fn new(records: Vec<InsurerRecord>) -> Self {
        let partitions = build_partitions(&records);
        MarketSample {
            records,
            partitions,
            normalization_applied: false,
            cost_index_id: None,
        }
    }

    pub(crate) fn with_normalization(mut self, index_id: String) -> Self {
        self.normalization_applied = true;
        self.cost_index_id = Some(index_id);
        self
    }

    /// Marks a sample whose dollars are already in the analysis unit (synthetic data).
    pub fn assume_normalized(self, index_id: impl Into<String>) -> Self {
        self.with_normalization(index_id.into())
    }

    pub fn records(&self) -> &[InsurerRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<InsurerRecord> {
        self.records
    }

    pub fn partitions(&self) -> &BTreeMap<PartitionKey, Vec<usize>> {
        &self.partitions
    }

    pub fn k(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn normalization_applied(&self) -> bool {
        self.normalization_applied
    }

    pub fn cost_index_id(&self) -> Option<&str> {
        self.cost_index_id.as_deref()
    }

    pub fn states(&self) -> Vec<String> {
        let mut states: Vec<String> = self.partitions.keys().map(|k| k.state.clone()).collect();
        states.dedup();
        states
    }

    /// Sizes `n_i` of one partition, in the partition's index order.
    pub fn partition_sizes(&self, key: &PartitionKey) -> Option<Vec<f64>> {
        self.partitions.get(key).map(|idx| {
            idx.iter()
                .map(|&i| self.records[i].member_months.unwrap_or(0) as f64)
                .collect()
        })
    }

    /// Keeps the records satisfying `keep`, preserving order and normalization state.
    pub fn filter<F: FnMut(&InsurerRecord) -> bool>(&self, mut keep: F) -> MarketSample {
        let records: Vec<_> = self.records.iter().filter(|r| keep(r)).cloned().collect();
        MarketSample {
            partitions: build_partitions(&records),
            records,
            normalization_applied: self.normalization_applied,
            cost_index_id: self.cost_index_id.clone(),
        }
    }

    pub(crate) fn map_records<F: FnMut(&mut InsurerRecord)>(mut self, f: F) -> Self {
        self.records.iter_mut().for_each(f);
        self
    }

    /// `T / sqrt(n)` for every record, in record order.
    pub fn normalized_series(&self) -> Result<NormalizedSeries> {
        let values = self
            .records
            .iter()
            .map(normalize_transfer)
            .collect::<Result<Vec<_>>>()?;
        Ok(NormalizedSeries {
            values,
            source: (0..self.records.len()).collect(),
        })
    }
}

fn build_partitions(records: &[InsurerRecord]) -> BTreeMap<PartitionKey, Vec<usize>> {
    let mut partitions: BTreeMap<PartitionKey, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        partitions.entry(r.partition_key()).or_default().push(i);
    }
    partitions
}

/// Normalized transfers with back-references into the originating sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub values: Vec<f64>,
    pub source: Vec<usize>,
}

impl NormalizedSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        let source = (0..values.len()).collect();
        NormalizedSeries { values, source }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// How beta was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    HalfNormal,
    Simulation,
    Percentile,
}

impl EstimationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimationMethod::HalfNormal => "half-normal",
            EstimationMethod::Simulation => "simulation",
            EstimationMethod::Percentile => "percentile",
        }
    }
}

/// Estimated shock standard deviation, in dollars per sqrt(member month).
///
/// Beta bounds the unobservable true shock deviation from below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    pub method: EstimationMethod,
    /// Point of maximum difference at the smallest dominated beta.
    pub dominance_point: Option<f64>,
    pub dominance_length: Option<f64>,
    pub critical_value: f64,
    /// Share of `|T̄|` above `2 beta`.
    pub outlier_fraction: f64,
    /// Binomial upper-tail probability of at least that many outliers.
    pub p_value: f64,
    pub seeds: Vec<u64>,
    /// Per-run estimates for the averaged simulation method.
    pub run_betas: Vec<f64>,
}
