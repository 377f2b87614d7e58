//! Empirical CDFs, one-sided dominance testing and beta estimation.

mod beta;
mod dominance;
mod ecdf;

pub use beta::{
    bisect_boundary, estimate_beta_halfnormal, estimate_beta_percentile, estimate_beta_simulation,
    fraction_below, halfnormal_dominance, minimal_beta_for_tail, simulation_dominance,
    unit_percentiles, Bracket, PercentileSettings, ReferenceMode, SimulationSettings,
    BETA_TOLERANCE,
};
pub use dominance::{
    dominance_test, kolmogorov_critical, kolmogorov_critical_mc, max_difference, CriticalValue,
    DominanceReport, DominanceSettings, MaxDifference,
};
pub use ecdf::{Cdf, Ecdf, FnCdf, HalfNormal, UpperEnvelope};
