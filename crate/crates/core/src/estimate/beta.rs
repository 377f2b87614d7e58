//! Three estimators of the shock standard deviation `beta`.
//!
//! The two dominance estimators return the largest `beta` whose reference
//! distribution (half-normal, or simulated transfers) shows no significant
//! point of dominance against `|T̄|`. Dominance only grows with `beta`, so the
//! boundary is found by bisection. The percentile estimator instead returns
//! the smallest `beta` at which the empirical percentile falls in the lowest
//! `tail` share of simulated percentiles.

use serde::{Deserialize, Serialize};

use crate::domain::{BetaEstimate, EstimationMethod, MarketSample, NormalizedSeries};
use crate::error::{Error, Result};
use crate::estimate::dominance::{dominance_test, DominanceReport, DominanceSettings};
use crate::estimate::ecdf::{Cdf, Ecdf, HalfNormal, UpperEnvelope};
use crate::mcsim::{run_algorithm1, SimPlan, DEFAULT_REPLICATES};
use crate::rng;
use crate::special::{nearest_rank, nearest_rank_index};
use crate::stattests::{outlier_fraction, outlier_pvalue_binomial};

/// Relative precision of every beta search.
pub const BETA_TOLERANCE: f64 = 1e-3;
const MAX_DOUBLINGS: usize = 60;

/// A pair `lo < hi` with `pred(lo) = false` and `pred(hi) = true`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Bisects the boundary of a predicate that is false for small `beta` and
/// true for large `beta`, expanding the start bracket by halving/doubling.
/// Stops once `hi <= lo * (1 + tol)`.
pub fn bisect_boundary<P>(mut pred: P, lo: f64, hi: f64, tol: f64) -> Result<Bracket>
where
    P: FnMut(f64) -> Result<bool>,
{
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Bracket(format!(
            "invalid start bracket [{lo}, {hi}]"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut steps = 0;
    while pred(lo)? {
        hi = lo;
        lo /= 2.0;
        steps += 1;
        if steps > MAX_DOUBLINGS {
            return Err(Error::Bracket(format!("predicate true down to {lo}")));
        }
    }
    steps = 0;
    while !pred(hi)? {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > MAX_DOUBLINGS {
            return Err(Error::Bracket(format!("predicate false up to {hi}")));
        }
    }
    while hi > lo * (1.0 + tol) {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bracket { lo, hi })
}

fn start_bracket(abs: &[f64]) -> Result<(f64, f64)> {
    let max = abs.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Domain(
            "all normalized transfers are zero; beta is not identifiable".into(),
        ));
    }
    let mut tmp = abs.to_vec();
    let median = nearest_rank(&mut tmp, 50.0);
    let lo = if median > 0.0 {
        median / 10.0
    } else {
        max / 1e3
    };
    Ok((lo, 10.0 * max))
}

fn with_outliers(
    series: &NormalizedSeries,
    beta: f64,
    method: EstimationMethod,
    critical_value: f64,
) -> BetaEstimate {
    let (count, fraction) = outlier_fraction(series, beta);
    BetaEstimate {
        beta,
        method,
        dominance_point: None,
        dominance_length: None,
        critical_value,
        outlier_fraction: fraction,
        p_value: outlier_pvalue_binomial(series.len(), count),
        seeds: vec![],
        run_betas: vec![],
    }
}

/// Dominance of `|T̄|` over `|N(0, beta^2)|`.
pub fn halfnormal_dominance(emp: &Ecdf, beta: f64, critical: f64) -> DominanceReport {
    dominance_test(emp, &HalfNormal { sigma: beta }, emp.len(), critical)
}

/// Largest beta with no point of dominance between `|T̄|` and `|N(0, beta^2)|`.
pub fn estimate_beta_halfnormal(
    series: &NormalizedSeries,
    settings: &DominanceSettings,
) -> Result<BetaEstimate> {
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let abs = series.abs_values();
    let emp = Ecdf::new(abs.clone())?;
    let critical = settings.critical_value(series.len())?;
    let (lo, hi) = start_bracket(&abs)?;
    let pred = |b: f64| Ok(halfnormal_dominance(&emp, b, critical).dominated);
    let bracket = bisect_boundary(pred, lo, hi, BETA_TOLERANCE)?;
    if halfnormal_dominance(&emp, bracket.lo * (1.0 - BETA_TOLERANCE), critical).dominated {
        return Err(Error::NonMonotone { beta: bracket.lo });
    }
    let at_hi = halfnormal_dominance(&emp, bracket.hi, critical);
    let mut est = with_outliers(series, bracket.lo, EstimationMethod::HalfNormal, critical);
    est.dominance_point = Some(at_hi.v_max);
    est.dominance_length = Some(at_hi.m_max);
    Ok(est)
}

/// How simulated replicates form the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// One ECDF over all `J * k` simulated values.
    #[default]
    Pooled,
    /// Pointwise maximum of the per-replicate ECDFs.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub replicates: usize,
    pub runs: usize,
    pub dominance: DominanceSettings,
    pub reference: ReferenceMode,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            replicates: DEFAULT_REPLICATES,
            runs: 5,
            dominance: DominanceSettings::default(),
            reference: ReferenceMode::Pooled,
        }
    }
}

/// Dominance of `emp` over `|T̄'|` simulated at `beta` with `seed`.
pub fn simulation_dominance(
    sample: &MarketSample,
    emp: &Ecdf,
    beta: f64,
    settings: &SimulationSettings,
    critical: f64,
    seed: u64,
) -> Result<DominanceReport> {
    let series = run_algorithm1(sample, beta, settings.replicates, seed)?;
    let abs = |v: &Vec<f64>| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
    let reference: Box<dyn Cdf> = match settings.reference {
        ReferenceMode::Pooled => Box::new(Ecdf::new(
            series.iter().flat_map(|s| abs(&s.values)).collect(),
        )?),
        ReferenceMode::Envelope => Box::new(UpperEnvelope {
            members: series
                .iter()
                .map(|s| Ecdf::new(abs(&s.values)))
                .collect::<Result<_>>()?,
        }),
    };
    Ok(dominance_test(emp, reference.as_ref(), emp.len(), critical))
}

/// Largest beta with no point of dominance between `|T̄|` and simulated
/// `|T̄'|`, averaged over independent runs.
///
/// Within a run every candidate beta reuses the run's seed, so candidates
/// see the same standard-normal draws and dominance is monotone in beta.
pub fn estimate_beta_simulation(
    sample: &MarketSample,
    settings: &SimulationSettings,
    seed: u64,
) -> Result<BetaEstimate> {
    if settings.runs == 0 || settings.replicates == 0 {
        return Err(Error::InvalidParameter(
            "runs and replicates must be positive".into(),
        ));
    }
    let series = sample.normalized_series()?;
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let abs = series.abs_values();
    let emp = Ecdf::new(abs.clone())?;
    let critical = settings.dominance.critical_value(series.len())?;
    let (lo, hi) = start_bracket(&abs)?;

    let mut seeds = Vec::with_capacity(settings.runs);
    let mut betas = Vec::with_capacity(settings.runs);
    let mut first_report = None;
    for run in 0..settings.runs {
        let run_seed = rng::derive_seed(seed, run as u64);
        let pred = |b: f64| {
            Ok(simulation_dominance(sample, &emp, b, settings, critical, run_seed)?.dominated)
        };
        let bracket = bisect_boundary(pred, lo, hi, BETA_TOLERANCE)?;
        let below = bracket.lo * (1.0 - BETA_TOLERANCE);
        if simulation_dominance(sample, &emp, below, settings, critical, run_seed)?.dominated {
            return Err(Error::NonMonotone { beta: bracket.lo });
        }
        if first_report.is_none() {
            first_report = Some(simulation_dominance(
                sample, &emp, bracket.hi, settings, critical, run_seed,
            )?);
        }
        seeds.push(run_seed);
        betas.push(bracket.lo);
    }
    let beta = betas.iter().sum::<f64>() / betas.len() as f64;
    let mut est = with_outliers(&series, beta, EstimationMethod::Simulation, critical);
    let report = first_report.expect("at least one run");
    est.dominance_point = Some(report.v_max);
    est.dominance_length = Some(report.m_max);
    est.seeds = seeds;
    est.run_betas = betas;
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSettings {
    /// Percentile in percent, `0 < p < 100`.
    pub percentile: f64,
    pub trials: usize,
    /// Largest admissible share of simulated percentiles below the empirical one.
    pub tail: f64,
}

impl Default for PercentileSettings {
    fn default() -> Self {
        PercentileSettings {
            percentile: 10.0,
            trials: 100_000,
            tail: 0.01,
        }
    }
}

/// The `p`-th percentile of `|T̄'|` for `trials` unit-beta replicates,
/// sorted ascending. Trial `t` uses stream `t` of `seed`.
///
/// Replicates scale exactly with beta, so the percentiles at any beta are
/// these values times beta.
pub fn unit_percentiles(
    sample: &MarketSample,
    percentile: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let plan = SimPlan::new(sample)?;
    let mut buf = vec![0.0; plan.k()];
    let rank = nearest_rank_index(plan.k(), percentile);
    let mut out: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            plan.draw_normalized(1.0, &mut rng, &mut buf);
            buf.iter_mut().for_each(|v| *v = v.abs());
            let (_, v, _) = buf.select_nth_unstable_by(rank, f64::total_cmp);
            *v
        })
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Share of simulated percentiles `beta * u` below `v_emp`.
pub fn fraction_below(v_emp: f64, sorted_unit: &[f64], beta: f64) -> f64 {
    sorted_unit.partition_point(|u| beta * u < v_emp) as f64 / sorted_unit.len() as f64
}

/// Smallest beta (to relative `tol`) with `fraction_below <= tail`.
pub fn minimal_beta_for_tail(
    v_emp: f64,
    sorted_unit: &[f64],
    tail: f64,
    tol: f64,
) -> Result<Bracket> {
    if sorted_unit.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let top = *sorted_unit.last().unwrap();
    if !(v_emp > 0.0) || !(top > 0.0) {
        return Err(Error::Domain(
            "percentile comparison needs positive values".into(),
        ));
    }
    let start = v_emp / top;
    bisect_boundary(
        |b| Ok(fraction_below(v_emp, sorted_unit, b) <= tail),
        start / 2.0,
        start * 4.0,
        tol,
    )
}

/// Smallest beta at which at most `tail` of simulated `p`-th percentiles of
/// `|T̄'|` fall below the empirical `p`-th percentile of `|T̄|`.
pub fn estimate_beta_percentile(
    sample: &MarketSample,
    settings: &PercentileSettings,
    seed: u64,
) -> Result<BetaEstimate> {
    if !(settings.percentile > 0.0 && settings.percentile < 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile must lie in (0, 100), got {}",
            settings.percentile
        )));
    }
    if !(settings.tail > 0.0 && settings.tail < 1.0) || settings.trials == 0 {
        return Err(Error::InvalidParameter(
            "tail must lie in (0, 1) and trials be positive".into(),
        ));
    }
    if !sample.normalization_applied() {
        return Err(Error::NotNormalized);
    }
    let series = sample.normalized_series()?;
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut abs = series.abs_values();
    let v_emp = nearest_rank(&mut abs, settings.percentile);

    let mut trials = settings.trials;
    for attempt in 0..2 {
        let unit = unit_percentiles(sample, settings.percentile, trials, seed)?;
        let bracket = minimal_beta_for_tail(v_emp, &unit, settings.tail, BETA_TOLERANCE)?;
        let consistent = fraction_below(v_emp, &unit, bracket.lo) > settings.tail
            && fraction_below(v_emp, &unit, bracket.hi * (1.0 + BETA_TOLERANCE)) <= settings.tail;
        if consistent {
            let mut est = with_outliers(
                &series,
                bracket.hi,
                EstimationMethod::Percentile,
                settings.tail,
            );
            est.dominance_point = Some(v_emp);
            est.dominance_length = Some(fraction_below(v_emp, &unit, bracket.hi));
            est.seeds = vec![seed];
            return Ok(est);
        }
        if attempt == 0 {
            trials *= 2;
        }
    }
    Err(Error::NonMonotone { beta: v_emp })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_threshold() {
        let b = bisect_boundary(|x| Ok(x > 3.7), 1.0, 2.0, 1e-6).unwrap();
        assert!(b.lo <= 3.7 && b.hi > 3.7 && b.hi <= b.lo * (1.0 + 1e-6));
        let b = bisect_boundary(|x| Ok(x > 0.01), 1.0, 2.0, 1e-6).unwrap();
        assert!(b.lo <= 0.01 && b.hi > 0.01);
    }

    #[test]
    fn bisection_reports_unbracketable() {
        assert!(matches!(
            bisect_boundary(|_| Ok(true), 1.0, 2.0, 1e-3),
            Err(Error::Bracket(_))
        ));
        assert!(matches!(
            bisect_boundary(|_| Ok(false), 1.0, 2.0, 1e-3),
            Err(Error::Bracket(_))
        ));
    }

    #[test]
    fn minimal_beta_matches_order_statistic() {
        // closed form: v / u_(m) where m = floor(tail * trials)
        let unit: Vec<f64> = (1..=1000).map(|i| 0.5 + i as f64 / 1000.0).collect();
        let v = 3.0;
        let b = minimal_beta_for_tail(v, &unit, 0.01, 1e-9).unwrap();
        let exact = v / unit[10];
        assert!((b.hi - exact).abs() <= 1e-8 * exact, "{} vs {exact}", b.hi);
        assert!(fraction_below(v, &unit, b.hi) <= 0.01);
        assert!(fraction_below(v, &unit, b.lo) > 0.01);
    }

    #[test]
    fn all_zero_series_not_identifiable() {
        let s = NormalizedSeries::from_values(vec![0.0; 5]);
        assert!(estimate_beta_halfnormal(&s, &DominanceSettings::default()).is_err());
    }
}
