//! Null-model simulation of zero-sum insurer transfers.
//!
//! Each insurer draws a cost shock `C'_i ~ N(0, beta^2 n_i)`; its transfer is
//! the shock minus its enrollment share of the market's total shock,
//! `T'_i = C'_i - (sum_j C'_j) n_i / N`, so transfers sum to zero in every
//! state-year and `T'_i ~ N(0, beta^2 a_i)` with `a_i` from [`compute_ai`].

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::domain::{MarketSample, PartitionKey};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Default number of replicates per simulation run.
pub const DEFAULT_REPLICATES: usize = 15;

/// Variance coefficient of insurer `i`'s simulated transfer:
/// `a_i = n_i (R/N)^2 + (n_i/N)^2 R` with `N = sum n`, `R = N - n_i`.
///
/// A monopolist's transfer is identically zero, so `a_i = 0`.
pub fn compute_ai(sizes: &[f64], i: usize) -> f64 {
    let total: f64 = sizes.iter().sum();
    let n = sizes[i];
    let rest = total - n;
    if rest <= 0.0 {
        return 0.0;
    }
    let w = n / total;
    n * (rest / total).powi(2) + w * w * rest
}

pub fn variance_coefficients(sizes: &[f64]) -> Vec<f64> {
    (0..sizes.len()).map(|i| compute_ai(sizes, i)).collect()
}

/// Simulated transfers `T'_i` for one state-year.
pub fn simulate_state(sizes: &[f64], beta: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    simulate_state_with(sizes, beta, &mut rng)
}

pub fn simulate_state_with(sizes: &[f64], beta: f64, rng: &mut Rng) -> Vec<f64> {
    let total: f64 = sizes.iter().sum();
    let shocks: Vec<f64> = sizes
        .iter()
        .map(|n| n.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let shock_total: f64 = shocks.iter().sum();
    shocks
        .iter()
        .zip(sizes)
        .map(|(c, n)| beta * (c - shock_total * (n / total)))
        .collect()
}

/// Precomputed per-partition layout for repeated simulation of one sample.
#[derive(Debug, Clone)]
pub struct SimPlan {
    k: usize,
    groups: Vec<PlanGroup>,
}

#[derive(Debug, Clone)]
struct PlanGroup {
    index: Vec<usize>,
    sqrt_n: Vec<f64>,
    share: Vec<f64>,
}

impl SimPlan {
    pub fn new(sample: &MarketSample) -> Result<Self> {
        let mut groups = Vec::with_capacity(sample.partitions().len());
        for (key, idx) in sample.partitions() {
            let sizes = sample.partition_sizes(key).expect("partition exists");
            if sizes.iter().any(|n| *n <= 0.0) {
                return Err(Error::Domain(format!("nonpositive member months in {key}")));
            }
            let total: f64 = sizes.iter().sum();
            groups.push(PlanGroup {
                index: idx.clone(),
                sqrt_n: sizes.iter().map(|n| n.sqrt()).collect(),
                share: sizes.iter().map(|n| n / total).collect(),
            });
        }
        Ok(SimPlan {
            k: sample.k(),
            groups,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// One replicate of normalized transfers `T'_i / sqrt(n_i)` at `beta`,
    /// written in sample record order. Partitions are drawn in key order.
    pub fn draw_normalized(&self, beta: f64, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.k);
        let mut shocks = Vec::new();
        for g in &self.groups {
            shocks.clear();
            shocks.extend(
                g.sqrt_n
                    .iter()
                    .map(|s| s * rng.sample::<f64, _>(StandardNormal)),
            );
            let total: f64 = shocks.iter().sum();
            for (j, &i) in g.index.iter().enumerate() {
                out[i] = beta * (shocks[j] - total * g.share[j]) / g.sqrt_n[j];
            }
        }
    }

    /// `sum_i |T'_i|` for a normalized replicate produced by this plan.
    pub fn abs_volume(&self, normalized: &[f64]) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| g.index.iter().zip(&g.sqrt_n))
            .map(|(&i, s)| (normalized[i] * s).abs())
            .sum()
    }
}

/// One replicate of simulated normalized transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSeries {
    /// `T'_i / sqrt(n_i)` in sample record order.
    pub values: Vec<f64>,
    pub beta: f64,
    pub iteration: usize,
    pub seed: u64,
    pub partitions: BTreeMap<PartitionKey, Vec<usize>>,
}

/// Runs `replicates` rounds of the null simulation over every state-year of
/// `sample`. Replicate `j` uses stream `j` of `seed`.
///
/// The sample must already be in normalized dollars; the simulated values are
/// then in the same unit and need no further rescaling.
pub fn run_algorithm1(
    sample: &MarketSample,
    beta: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<SimulationSeries>> {
    if !sample.normalization_applied() {
        return Err(Error::NotNormalized);
    }
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let plan = SimPlan::new(sample)?;
    Ok((0..replicates)
        .map(|j| {
            let mut rng = rng::stream(seed, j as u64);
            let mut values = vec![0.0; plan.k()];
            plan.draw_normalized(beta, &mut rng, &mut values);
            SimulationSeries {
                values,
                beta,
                iteration: j,
                seed,
                partitions: sample.partitions().clone(),
            }
        })
        .collect())
}

/// Writes replicate series as `replicate,state,year,hios_id,t_bar_sim`.
pub fn write_series<W: Write>(
    sample: &MarketSample,
    series: &[SimulationSeries],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replicate", "state", "year", "hios_id", "t_bar_sim"])?;
    for s in series {
        for (r, v) in sample.records().iter().zip(&s.values) {
            w.write_record([
                s.iteration.to_string(),
                r.state.clone(),
                r.year.to_string(),
                r.hios_id
                    .as_ref()
                    .map(|h| h.to_string())
                    .unwrap_or_default(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
