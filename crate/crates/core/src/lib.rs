//! Estimating the random-shock component of zero-sum risk-adjustment
//! transfers between health insurers.
//!
//! The pipeline ingests summary and insurer reports ([`ingest`]), or draws
//! synthetic markets ([`synth`]); estimates the shock deviation `beta`
//! ([`estimate`]) against simulated zero-sum transfers ([`mcsim`]); tests the
//! residual structure ([`stattests`]); and splits transfer volume into a
//! shock-explained and a non-random part ([`volume`]).

// `!(x > 0.0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod estimate;
pub mod ingest;
pub mod mcsim;
pub mod rng;
pub mod special;
pub mod stattests;
pub mod synth;
pub mod volume;

pub use domain::{
    normalize_transfer, BetaEstimate, EstimationMethod, HiosId, InsurerRecord, Market,
    MarketSample, NormalizedSeries, PartitionKey,
};
pub use error::{Error, Result};
