//! Synthetic markets with known shock deviation and per-insurer drift.
//!
//! Insurer `i` gets `n_i` member months and a raw transfer
//! `b sqrt(n_i) Z_i + C_i n_i`. Raw transfers are then projected onto the
//! zero-sum hyperplane of their state by subtracting the enrollment share of
//! the state total.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{HiosId, InsurerRecord, Market, MarketSample};
use crate::error::{Error, Result};
use crate::ingest::{ColumnMap, MergedDataset, MergedRow, Payment, SummaryRow};
use crate::rng::{self, Rng, GENERATOR_ID};

/// Two-letter codes handed out to synthetic partitions, in order.
pub const STATE_CODES: [&str; 51] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN",
    "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ",
    "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA",
    "WI", "WV", "WY",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum SizeLaw {
    Fixed {
        n: u64,
    },
    /// Uniform over the integers `lo..=hi`.
    UniformInt {
        lo: u64,
        hi: u64,
    },
    /// `exp(U(ln lo, ln hi))`, rounded.
    LogUniform {
        lo: u64,
        hi: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DriftLaw {
    Zero,
    Normal {
        sigma: f64,
    },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
}

/// Distribution of the per-member-month shock.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum PatientLaw {
    /// Aggregate shock drawn directly as `N(0, b^2 n)`.
    #[default]
    Normal,
    /// Sum of `n` centered log-normal draws rescaled to variance `b^2`.
    LogNormal { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Total insurers, spread round-robin over the states.
    pub k: usize,
    pub states: usize,
    pub size_law: SizeLaw,
    pub beta_true: f64,
    pub drift_law: DriftLaw,
    #[serde(default)]
    pub patient_law: PatientLaw,
    pub year: i32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            k: 1000,
            states: 4,
            size_law: SizeLaw::UniformInt {
                lo: 2001,
                hi: 50_000,
            },
            beta_true: 10_000.0,
            drift_law: DriftLaw::Zero,
            patient_law: PatientLaw::Normal,
            year: 2017,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.states == 0 || self.states > STATE_CODES.len() {
            return bad(format!("states must lie in 1..={}", STATE_CODES.len()));
        }
        if self.k < 2 * self.states {
            return bad(format!(
                "k = {} leaves some of the {} states with fewer than 2 insurers",
                self.k, self.states
            ));
        }
        if self.k > 90_000 {
            return bad("k above 90000 exhausts five-digit issuer ids".into());
        }
        if !(self.beta_true >= 0.0 && self.beta_true.is_finite()) {
            return bad(format!(
                "beta_true must be finite and >= 0, got {}",
                self.beta_true
            ));
        }
        match self.size_law {
            SizeLaw::Fixed { n: 0 } => return bad("fixed size must be positive".into()),
            SizeLaw::UniformInt { lo, hi } | SizeLaw::LogUniform { lo, hi }
                if lo == 0 || hi < lo =>
            {
                return bad(format!(
                    "size range [{lo}, {hi}] must be positive and ordered"
                ))
            }
            _ => {}
        }
        match self.drift_law {
            DriftLaw::Normal { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                return bad(format!("drift sigma must be >= 0, got {sigma}"))
            }
            DriftLaw::TwoPoint { low, high, p_high }
                if !(low.is_finite() && high.is_finite() && (0.0..=1.0).contains(&p_high)) =>
            {
                return bad("two-point drift needs finite values and p_high in [0, 1]".into())
            }
            _ => {}
        }
        if let PatientLaw::LogNormal { sigma } = self.patient_law {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return bad(format!("log-normal sigma must be > 0, got {sigma}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsurerTruth {
    pub hios_id: HiosId,
    pub state: String,
    pub member_months: u64,
    /// Per-member-month drift `C_i`.
    pub drift: f64,
    /// Shock term before projection.
    pub shock: f64,
    /// Final zero-sum transfer.
    pub transfer: f64,
}

/// Sidecar describing how a synthetic dataset was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_true: f64,
    pub config: SynthConfig,
    pub generator: String,
    pub insurers: Vec<InsurerTruth>,
}

impl GroundTruth {
    pub fn write_path(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub sample: MarketSample,
    pub dataset: MergedDataset,
    pub truth: GroundTruth,
}

/// Cost index id attached to synthetic samples, whose dollars need no scaling.
pub const SYNTHETIC_INDEX: &str = "synthetic";

const COST_PER_MM: f64 = 400.0;
const PREMIUM_PER_MM: f64 = 450.0;

fn draw_size(law: SizeLaw, rng: &mut Rng) -> u64 {
    match law {
        SizeLaw::Fixed { n } => n,
        SizeLaw::UniformInt { lo, hi } => rng.random_range(lo..=hi),
        SizeLaw::LogUniform { lo, hi } => {
            let u: f64 = rng.random();
            let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
            ((a + u * (b - a)).exp().round() as u64).clamp(lo, hi)
        }
    }
}

fn draw_drift(law: DriftLaw, rng: &mut Rng) -> f64 {
    match law {
        DriftLaw::Zero => 0.0,
        DriftLaw::Normal { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
        DriftLaw::TwoPoint { low, high, p_high } => {
            if rng.random::<f64>() < p_high {
                high
            } else {
                low
            }
        }
    }
}

fn draw_shock(law: PatientLaw, beta: f64, n: u64, rng: &mut Rng) -> Result<f64> {
    match law {
        PatientLaw::Normal => Ok(beta * (n as f64).sqrt() * rng.sample::<f64, _>(StandardNormal)),
        PatientLaw::LogNormal { sigma } => {
            let d = LogNormal::new(0.0, sigma)
                .map_err(|e| Error::InvalidParameter(format!("log-normal: {e}")))?;
            let mean = (sigma * sigma / 2.0).exp();
            let sd = (((sigma * sigma).exp() - 1.0) * (sigma * sigma).exp()).sqrt();
            let total: f64 = (0..n).map(|_| d.sample(rng) - mean).sum();
            Ok(beta * total / sd)
        }
    }
}

/// Drift deviation whose expected absolute volume `sum |C_i n_i|` matches the
/// expected shock volume `sum |b sqrt(n_i) Z_i|` for these sizes.
pub fn calibrate_drift_sigma(sizes: &[f64], beta: f64) -> f64 {
    let total: f64 = sizes.iter().sum();
    beta * sizes.iter().map(|n| n.sqrt()).sum::<f64>() / total
}

/// Draws a synthetic market. Sizes use stream 0, drifts stream 1 and shocks
/// stream 2 of the config seed, so changing one law leaves the others' draws
/// unchanged.
pub fn generate_market(config: &SynthConfig) -> Result<SyntheticMarket> {
    config.validate()?;
    let mut size_rng = rng::stream(config.seed, 0);
    let mut drift_rng = rng::stream(config.seed, 1);
    let mut shock_rng = rng::stream(config.seed, 2);

    let mut insurers = Vec::with_capacity(config.k);
    for i in 0..config.k {
        let n = draw_size(config.size_law, &mut size_rng);
        let drift = draw_drift(config.drift_law, &mut drift_rng);
        let shock = draw_shock(config.patient_law, config.beta_true, n, &mut shock_rng)?;
        insurers.push(InsurerTruth {
            hios_id: HiosId::parse(&format!("{:05}", 10_000 + i))?,
            state: STATE_CODES[i % config.states].to_string(),
            member_months: n,
            drift,
            shock,
            transfer: 0.0,
        });
    }

    for s in 0..config.states {
        let members: Vec<usize> = (s..config.k).step_by(config.states).collect();
        let raw: Vec<f64> = members
            .iter()
            .map(|&i| insurers[i].shock + insurers[i].drift * insurers[i].member_months as f64)
            .collect();
        let raw_total: f64 = raw.iter().sum();
        let n_total: f64 = members
            .iter()
            .map(|&i| insurers[i].member_months as f64)
            .sum();
        for (j, &i) in members.iter().enumerate() {
            let share = insurers[i].member_months as f64 / n_total;
            insurers[i].transfer = raw[j] - raw_total * share;
        }
    }

    let map = ColumnMap::for_market(Market::SmallGroup);
    let insurer_headers = vec![
        map.hios_id[0].clone(),
        map.company_name[0].clone(),
        map.state[0].clone(),
        map.year[0].clone(),
        map.nonprofit[0].clone(),
        map.member_months[0].clone(),
        map.premiums[0].clone(),
        map.costs[0].clone(),
    ];
    let mut rows = Vec::with_capacity(config.k);
    let mut records = Vec::with_capacity(config.k);
    for (i, t) in insurers.iter().enumerate() {
        let name = format!("Synthetic Health Plan {}", i + 1);
        let n = t.member_months as f64;
        rows.push(MergedRow {
            summary: Some(SummaryRow {
                hios_id: t.hios_id.clone(),
                company_name: name.clone(),
                state: t.state.clone(),
                reinsurance_payment: None,
                ra_transfer_individual: None,
                ra_transfer_small_group: Some(Payment::Amount(t.transfer)),
                lines: (0, 0),
            }),
            insurer: Some(vec![
                t.hios_id.to_string(),
                name.clone(),
                t.state.clone(),
                config.year.to_string(),
                "false".into(),
                t.member_months.to_string(),
                (PREMIUM_PER_MM * n).to_string(),
                (COST_PER_MM * n).to_string(),
            ]),
        });
        let mut rec = InsurerRecord::new(t.state.clone(), config.year);
        rec.hios_id = Some(t.hios_id.clone());
        rec.company_name = name;
        rec.member_months = Some(t.member_months);
        rec.transfer = Some(t.transfer);
        rec.costs = Some(COST_PER_MM * n);
        rec.premiums = Some(PREMIUM_PER_MM * n);
        rec.nonprofit = Some(false);
        records.push(rec);
    }

    Ok(SyntheticMarket {
        sample: MarketSample::new(records).assume_normalized(SYNTHETIC_INDEX),
        dataset: MergedDataset {
            year: config.year,
            insurer_headers,
            rows,
        },
        truth: GroundTruth {
            beta_true: config.beta_true,
            config: config.clone(),
            generator: GENERATOR_ID.into(),
            insurers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(beta: f64) -> SynthConfig {
        SynthConfig {
            k: 2,
            states: 1,
            size_law: SizeLaw::Fixed { n: 1 },
            beta_true: beta,
            drift_law: DriftLaw::Zero,
            seed: 9,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn two_insurers_are_antisymmetric() {
        let m = generate_market(&tiny(1.0)).unwrap();
        let t: Vec<f64> = m.truth.insurers.iter().map(|x| x.transfer).collect();
        assert!(t[0] != 0.0);
        assert!((t[0] + t[1]).abs() < 1e-15);
        let z = (m.truth.insurers[0].shock - m.truth.insurers[1].shock) / 2.0;
        assert!((t[0] - z).abs() < 1e-15);
    }

    #[test]
    fn zero_beta_zero_drift_is_silent() {
        let m = generate_market(&tiny(0.0)).unwrap();
        assert!(m.sample.records().iter().all(|r| r.transfer == Some(0.0)));
    }

    #[test]
    fn partitions_sum_to_zero() {
        let cfg = SynthConfig {
            k: 203,
            states: 5,
            drift_law: DriftLaw::Normal { sigma: 50.0 },
            seed: 4,
            ..SynthConfig::default()
        };
        let m = generate_market(&cfg).unwrap();
        for idx in m.sample.partitions().values() {
            let t: Vec<f64> = idx
                .iter()
                .map(|&i| m.sample.records()[i].transfer.unwrap())
                .collect();
            let abs: f64 = t.iter().map(|x| x.abs()).sum();
            assert!(t.iter().sum::<f64>().abs() <= 1e-9 * abs);
        }
    }

    #[test]
    fn dataset_round_trips_to_records() {
        let cfg = SynthConfig {
            k: 12,
            states: 3,
            seed: 1,
            ..SynthConfig::default()
        };
        let m = generate_market(&cfg).unwrap();
        let mut buf = Vec::new();
        m.dataset.write(&mut buf).unwrap();
        let back = MergedDataset::read(buf.as_slice(), cfg.year).unwrap();
        let recs = back
            .records(&ColumnMap::for_market(Market::SmallGroup))
            .unwrap();
        assert_eq!(recs, m.sample.records());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = tiny(1.0);
        c.k = 3;
        c.states = 2;
        assert!(c.validate().is_err());
        let mut c = tiny(-1.0);
        assert!(c.validate().is_err());
        c.beta_true = 1.0;
        c.drift_law = DriftLaw::TwoPoint {
            low: 0.0,
            high: 1.0,
            p_high: 2.0,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn log_normal_patients_have_target_scale() {
        let cfg = SynthConfig {
            k: 400,
            states: 1,
            size_law: SizeLaw::Fixed { n: 400 },
            beta_true: 2.0,
            patient_law: PatientLaw::LogNormal { sigma: 0.5 },
            seed: 3,
            ..SynthConfig::default()
        };
        let m = generate_market(&cfg).unwrap();
        let var = m
            .truth
            .insurers
            .iter()
            .map(|t| (t.shock / 20.0).powi(2))
            .sum::<f64>()
            / 400.0;
        assert!((var.sqrt() - 2.0).abs() < 0.2, "{}", var.sqrt());
    }
}
