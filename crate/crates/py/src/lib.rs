//! Python bindings: build or load a market, estimate beta, split volume and
//! run the residual tests.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use risk_transfer::estimate::{
    self, kolmogorov_critical as kolmogorov, CriticalValue, DominanceSettings, PercentileSettings,
    ReferenceMode, SimulationSettings,
};
use risk_transfer::ingest::{
    normalize_dollars, parse_summary_text_with, select_sample, ColumnMap, CostIndex, MergedDataset,
    Payment, SelectionConfig, SummaryLayout,
};
use risk_transfer::stattests::{self, OutlierMode};
use risk_transfer::synth::{
    calibrate_drift_sigma, generate_market, DriftLaw, SizeLaw, SynthConfig,
};
use risk_transfer::volume::{self, VolumeMethod};
use risk_transfer::{mcsim, Error, InsurerRecord, MarketSample, NormalizedSeries};
use std::path::Path;

fn err(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A selected, dollar-normalized market sample.
#[pyclass(name = "Market", module = "ratransfer", frozen)]
#[derive(Clone)]
pub struct PyMarket {
    inner: MarketSample,
}

#[pymethods]
impl PyMarket {
    /// Builds a sample from parallel columns. Transfers are taken as already
    /// expressed in comparable dollars.
    #[new]
    #[pyo3(signature = (states, member_months, transfers, year = 2017))]
    fn new(
        states: Vec<String>,
        member_months: Vec<u64>,
        transfers: Vec<f64>,
        year: i32,
    ) -> PyResult<Self> {
        if states.len() != member_months.len() || states.len() != transfers.len() {
            return Err(PyValueError::new_err("columns must have equal length"));
        }
        let records = states
            .into_iter()
            .zip(member_months)
            .zip(transfers)
            .map(|((s, n), t)| InsurerRecord {
                member_months: Some(n),
                transfer: Some(t),
                ..InsurerRecord::new(s, year)
            })
            .collect();
        Ok(PyMarket {
            inner: MarketSample::new(records).assume_normalized("python"),
        })
    }

    /// Loads a merged dataset CSV as written by `ratransfer build-dataset`
    /// or `ratransfer synth`, keeping records above the size cutoff.
    #[staticmethod]
    #[pyo3(signature = (path, year, market = "small-group", min_member_months = 2000))]
    fn from_dataset(path: &str, year: i32, market: &str, min_member_months: u64) -> PyResult<Self> {
        let map = ColumnMap::for_market(market.parse().map_err(err)?);
        let records = MergedDataset::read_path(Path::new(path), year)
            .and_then(|d| d.records(&map))
            .map_err(err)?;
        let selection = SelectionConfig {
            min_member_months,
            ..SelectionConfig::default()
        };
        let inner = normalize_dollars(select_sample(&records, &selection), &CostIndex::identity())
            .map_err(err)?;
        Ok(PyMarket { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states()
    }

    #[getter]
    fn member_months(&self) -> Vec<u64> {
        self.inner
            .records()
            .iter()
            .map(|r| r.member_months.unwrap_or(0))
            .collect()
    }

    #[getter]
    fn transfers(&self) -> Vec<f64> {
        self.inner
            .records()
            .iter()
            .map(|r| r.transfer.unwrap_or(f64::NAN))
            .collect()
    }

    /// `T / sqrt(n)` per insurer.
    fn normalized(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.normalized_series().map_err(err)?.values)
    }

    fn __len__(&self) -> usize {
        self.inner.k()
    }

    fn __repr__(&self) -> String {
        format!(
            "Market(k={}, states={})",
            self.inner.k(),
            self.inner.states().len()
        )
    }
}

#[pyclass(name = "BetaEstimate", module = "ratransfer", frozen, get_all)]
pub struct PyBetaEstimate {
    beta: f64,
    method: String,
    critical_value: f64,
    dominance_point: Option<f64>,
    outlier_fraction: f64,
    p_value: f64,
    run_betas: Vec<f64>,
    seeds: Vec<u64>,
}

#[pymethods]
impl PyBetaEstimate {
    fn __repr__(&self) -> String {
        format!(
            "BetaEstimate(method={:?}, beta={:.3})",
            self.method, self.beta
        )
    }
}

impl From<risk_transfer::BetaEstimate> for PyBetaEstimate {
    fn from(e: risk_transfer::BetaEstimate) -> Self {
        PyBetaEstimate {
            beta: e.beta,
            method: e.method.as_str().to_string(),
            critical_value: e.critical_value,
            dominance_point: e.dominance_point,
            outlier_fraction: e.outlier_fraction,
            p_value: e.p_value,
            run_betas: e.run_betas,
            seeds: e.seeds,
        }
    }
}

fn dominance(alpha: f64, critical_trials: Option<usize>, seed: u64) -> DominanceSettings {
    DominanceSettings {
        alpha,
        critical: match critical_trials {
            Some(trials) => CriticalValue::MonteCarlo { trials, seed },
            None => CriticalValue::Asymptotic,
        },
    }
}

/// Draws a synthetic zero-sum market. `calibrated_drift=True` picks the
/// drift that makes the expected volume about 1.4 times the shock-only one.
#[pyfunction]
#[pyo3(signature = (k = 1000, states = 4, beta = 10000.0, sizes = (2001, 50000), drift_sigma = None, calibrated_drift = false, year = 2017, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn synth<'py>(
    py: Python<'py>,
    k: usize,
    states: usize,
    beta: f64,
    sizes: (u64, u64),
    drift_sigma: Option<f64>,
    calibrated_drift: bool,
    year: i32,
    seed: u64,
) -> PyResult<(PyMarket, Vec<Bound<'py, PyDict>>)> {
    let size_law = if sizes.0 == sizes.1 {
        SizeLaw::Fixed { n: sizes.0 }
    } else {
        SizeLaw::UniformInt {
            lo: sizes.0,
            hi: sizes.1,
        }
    };
    let mut config = SynthConfig {
        k,
        states,
        size_law,
        beta_true: beta,
        drift_law: drift_sigma.map_or(DriftLaw::Zero, |sigma| DriftLaw::Normal { sigma }),
        year,
        seed,
        ..SynthConfig::default()
    };
    if calibrated_drift {
        // Uses the same size draws the generator will make.
        let probe = generate_market(&SynthConfig {
            drift_law: DriftLaw::Zero,
            ..config.clone()
        })
        .map_err(err)?;
        let n: Vec<f64> = probe
            .truth
            .insurers
            .iter()
            .map(|i| i.member_months as f64)
            .collect();
        config.drift_law = DriftLaw::Normal {
            sigma: calibrate_drift_sigma(&n, beta),
        };
    }
    let market = generate_market(&config).map_err(err)?;
    let mut truth = Vec::with_capacity(market.truth.insurers.len());
    for i in &market.truth.insurers {
        let d = PyDict::new(py);
        d.set_item("hios_id", i.hios_id.as_str())?;
        d.set_item("state", &i.state)?;
        d.set_item("member_months", i.member_months)?;
        d.set_item("drift", i.drift)?;
        d.set_item("shock", i.shock)?;
        d.set_item("transfer", i.transfer)?;
        truth.push(d);
    }
    Ok((
        PyMarket {
            inner: market.sample,
        },
        truth,
    ))
}

#[pyfunction]
#[pyo3(signature = (market, alpha = 0.05, critical_trials = None, seed = 0))]
fn estimate_beta_halfnormal(
    market: &PyMarket,
    alpha: f64,
    critical_trials: Option<usize>,
    seed: u64,
) -> PyResult<PyBetaEstimate> {
    let series = market.inner.normalized_series().map_err(err)?;
    estimate::estimate_beta_halfnormal(&series, &dominance(alpha, critical_trials, seed))
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (market, alpha = 0.05, replicates = 15, runs = 5, seed = 0, envelope = false))]
fn estimate_beta_simulation(
    market: &PyMarket,
    alpha: f64,
    replicates: usize,
    runs: usize,
    seed: u64,
    envelope: bool,
) -> PyResult<PyBetaEstimate> {
    let settings = SimulationSettings {
        replicates,
        runs,
        dominance: dominance(alpha, None, seed),
        reference: if envelope {
            ReferenceMode::Envelope
        } else {
            ReferenceMode::Pooled
        },
    };
    estimate::estimate_beta_simulation(&market.inner, &settings, seed)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (market, percentile = 10.0, trials = 100_000, tail = 0.01, seed = 0))]
fn estimate_beta_percentile(
    market: &PyMarket,
    percentile: f64,
    trials: usize,
    tail: f64,
    seed: u64,
) -> PyResult<PyBetaEstimate> {
    let settings = PercentileSettings {
        percentile,
        trials,
        tail,
    };
    estimate::estimate_beta_percentile(&market.inner, &settings, seed)
        .map(Into::into)
        .map_err(err)
}

/// Realized against expected absolute transfer volume at `beta`.
#[pyfunction]
#[pyo3(signature = (market, beta, mc_replicates = None, seed = 0))]
fn volume_report<'py>(
    py: Python<'py>,
    market: &PyMarket,
    beta: f64,
    mc_replicates: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let method = match mc_replicates {
        Some(replicates) => VolumeMethod::MonteCarlo { replicates, seed },
        None => VolumeMethod::ClosedForm,
    };
    let r = volume::volume_report_with(&market.inner, beta, method).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beta", r.beta)?;
    d.set_item("realized", r.realized)?;
    d.set_item("expected", r.expected)?;
    d.set_item("f", r.f)?;
    d.set_item("non_random_fraction", r.non_random_fraction)?;
    Ok(d)
}

/// Share of `|T/sqrt(n)|` above `2 beta` and its p-value. Binomial unless
/// `trials` is given, in which case zero-sum markets are simulated.
#[pyfunction]
#[pyo3(signature = (market, beta, trials = None, seed = 0))]
fn outlier_test<'py>(
    py: Python<'py>,
    market: &PyMarket,
    beta: f64,
    trials: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match trials {
        Some(trials) => OutlierMode::Simulation { trials, seed },
        None => OutlierMode::Binomial,
    };
    let r = stattests::outlier_pvalue(&market.inner, beta, mode).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("count", r.count)?;
    d.set_item("fraction", r.fraction)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("upper_bound", r.upper_bound)?;
    Ok(d)
}

/// Shapiro-Wilk `(W, p)` for 3 to 5000 values.
#[pyfunction]
fn shapiro_wilk(values: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stattests::shapiro_wilk(&NormalizedSeries::from_values(values)).map_err(err)?;
    Ok((r.w, r.p_value))
}

/// Normal-comparison test at level `p` for normalized transfers.
#[pyfunction]
#[pyo3(signature = (values, p = 0.05, reference_beta = None))]
fn nc_test<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    p: f64,
    reference_beta: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let series = NormalizedSeries::from_values(values);
    let r = stattests::nc_test_with_reference(&series, p, reference_beta).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta0", r.delta0)?;
    d.set_item("beta0", r.beta0)?;
    d.set_item("s2", r.s2)?;
    d.set_item("p01", r.p01)?;
    d.set_item("p2", r.p2)?;
    d.set_item("significant_case1", r.significant_case1)?;
    d.set_item("significant_case2", r.significant_case2)?;
    Ok(d)
}

/// Asymptotic one-sided Kolmogorov critical value.
#[pyfunction]
fn kolmogorov_critical(alpha: f64) -> PyResult<f64> {
    kolmogorov(alpha).map_err(err)
}

/// One zero-sum draw of transfers for a state with these sizes.
#[pyfunction]
fn simulate_state(sizes: Vec<f64>, beta: f64, seed: u64) -> Vec<f64> {
    mcsim::simulate_state(&sizes, beta, seed)
}

#[pyfunction]
fn variance_coefficients(sizes: Vec<f64>) -> Vec<f64> {
    mcsim::variance_coefficients(&sizes)
}

type Dicts<'py> = Vec<Bound<'py, PyDict>>;

fn payment(p: Option<Payment>) -> Option<f64> {
    p.and_then(|p| p.amount())
}

/// Parses a summary-report text dump into `(rows, rejects)`. With `year`
/// the payment columns follow that year's report layout.
#[pyfunction]
#[pyo3(signature = (text, year = None))]
fn parse_summary<'py>(
    py: Python<'py>,
    text: &str,
    year: Option<i32>,
) -> PyResult<(Dicts<'py>, Dicts<'py>)> {
    let layout = year.map_or_else(SummaryLayout::default, SummaryLayout::for_year);
    let parsed = parse_summary_text_with(text, &layout);
    let mut rows = Vec::with_capacity(parsed.rows.len());
    for r in &parsed.rows {
        let d = PyDict::new(py);
        d.set_item("hios_id", r.hios_id.as_str())?;
        d.set_item("company_name", &r.company_name)?;
        d.set_item("state", &r.state)?;
        d.set_item("reinsurance", payment(r.reinsurance_payment))?;
        d.set_item("individual", payment(r.ra_transfer_individual))?;
        d.set_item("small_group", payment(r.ra_transfer_small_group))?;
        d.set_item("lines", r.lines)?;
        rows.push(d);
    }
    let mut rejects = Vec::with_capacity(parsed.rejects.len());
    for r in &parsed.rejects {
        let d = PyDict::new(py);
        d.set_item("lines", r.lines)?;
        d.set_item("reason", &r.reason)?;
        d.set_item("text", &r.text)?;
        rejects.push(d);
    }
    Ok((rows, rejects))
}

#[pymodule]
pub fn ratransfer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarket>()?;
    m.add_class::<PyBetaEstimate>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_beta_halfnormal, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_beta_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_beta_percentile, m)?)?;
    m.add_function(wrap_pyfunction!(volume_report, m)?)?;
    m.add_function(wrap_pyfunction!(outlier_test, m)?)?;
    m.add_function(wrap_pyfunction!(shapiro_wilk, m)?)?;
    m.add_function(wrap_pyfunction!(nc_test, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_critical, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_state, m)?)?;
    m.add_function(wrap_pyfunction!(variance_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(parse_summary, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
