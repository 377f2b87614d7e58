use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use risk_transfer::estimate::{
    estimate_beta_halfnormal, estimate_beta_percentile, estimate_beta_simulation,
    halfnormal_dominance, Cdf, CriticalValue, DominanceSettings, Ecdf, HalfNormal,
    PercentileSettings, ReferenceMode, SimulationSettings,
};
use risk_transfer::ingest::{
    normalize_dollars, recenter_transfers, select_sample, ColumnMap, CostIndex, MergedDataset,
    SelectionConfig,
};
use risk_transfer::mcsim::run_algorithm1;
use risk_transfer::stattests::{
    nc_test_with_reference, outlier_pvalue, shapiro_wilk, OutlierMode, OutlierReport,
    NC_PROSE_NOTE, SW_METHOD,
};
use risk_transfer::synth::GroundTruth;
use risk_transfer::volume::{
    realized_abs_transfers, volume_report, volume_report_with, VolumeMethod, VolumeReport,
};
use risk_transfer::{
    rng, BetaEstimate, Error, InsurerRecord, MarketSample, NormalizedSeries, Result,
};
use serde::Serialize;

use crate::{ensure_dir, groups, MarketArg, OnOff};

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Directory of `dataset_<year>.csv` files.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "small-group")]
    #[serde(skip)]
    market: MarketArg,
    /// State group: NY, CA, WI, NY+CA+WI, competitive, random-A, random-B or all. Repeatable.
    #[arg(long = "group", default_value = "all")]
    groups: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Simulated replicates per run.
    #[arg(long = "J", default_value_t = 15)]
    j: usize,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Simulated markets for the percentile method.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 10.0)]
    percentile: f64,
    #[arg(long, default_value_t = 0.01)]
    tail: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// `derive` (premium per member month), `identity`, or a state,year,factor CSV.
    #[arg(long, default_value = "derive")]
    cost_index: String,
    /// Year whose dollars are the analysis unit when deriving the cost index.
    #[arg(long, default_value_t = 2017)]
    cost_year: i32,
    #[arg(long, value_enum, default_value = "off")]
    #[serde(skip)]
    recenter: OnOff,
    #[arg(long, default_value_t = 2000)]
    min_member_months: u64,
    /// Also compute simulation p-values for outliers with this many trials.
    #[arg(long)]
    outlier_trials: Option<usize>,
    /// Use a Monte Carlo finite-sample critical value with this many trials.
    #[arg(long)]
    critical_trials: Option<usize>,
    /// Reference for the simulation method: pooled replicates or their envelope.
    #[arg(long, default_value = "pooled")]
    reference: String,
    /// Ground-truth sidecar of a synthetic dataset; adds checks at the true beta.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn load(input: &Path, map: &ColumnMap) -> Result<(Vec<InsurerRecord>, Vec<String>)> {
    let mut files: Vec<(i32, PathBuf)> = Vec::new();
    for e in std::fs::read_dir(input)? {
        let p = e?.path();
        let name = p
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if let Some(y) = name
            .strip_prefix("dataset_")
            .and_then(|s| s.strip_suffix(".csv"))
        {
            if let Ok(y) = y.parse() {
                files.push((y, p));
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no dataset_<year>.csv files in {}",
            input.display()
        )));
    }
    let mut records = Vec::new();
    let mut names = Vec::new();
    for (year, p) in files {
        records.extend(MergedDataset::read_path(&p, year)?.records(map)?);
        names.push(
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
        );
    }
    Ok((records, names))
}

fn cost_index(spec: &str, records: &[InsurerRecord], year: i32) -> Result<CostIndex> {
    match spec {
        "identity" => Ok(CostIndex::identity()),
        "derive" => CostIndex::derive_from_premiums(records, year),
        path => CostIndex::from_csv(Path::new(path)),
    }
}

struct GroupResult {
    name: String,
    k: usize,
    states: Vec<String>,
    estimates: Vec<BetaEstimate>,
    outliers: Vec<(String, OutlierReport)>,
    volumes: Vec<(String, VolumeReport)>,
    realized: f64,
    normality: Vec<Vec<String>>,
    ecdf: Vec<[f64; 4]>,
    seeds: (u64, u64),
    truth: Option<Vec<String>>,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn normality_rows(name: &str, sample: &MarketSample, alpha: f64) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (key, idx) in sample.partitions() {
        let part = sample.filter(|r| r.partition_key() == *key);
        let series = part.normalized_series()?;
        let sw = if series.len() >= 3 {
            shapiro_wilk(&series).ok()
        } else {
            None
        };
        let reference = estimate_beta_halfnormal(&series, &DominanceSettings::default())
            .ok()
            .map(|e| e.beta);
        let nc = nc_test_with_reference(&series, alpha, reference)?;
        rows.push(vec![
            name.to_string(),
            key.state.clone(),
            key.year.to_string(),
            idx.len().to_string(),
            sw.as_ref().map_or("NA".into(), |s| fmt(s.w)),
            sw.as_ref().map_or("NA".into(), |s| fmt(s.p_value)),
            fmt(nc.p2),
            fmt(nc.beta0),
            nc.significant_case1.to_string(),
            nc.significant_case2.to_string(),
        ]);
    }
    Ok(rows)
}

/// Dominance, outliers and volume with the true beta plugged in.
fn truth_row(
    name: &str,
    sample: &MarketSample,
    series: &NormalizedSeries,
    beta: f64,
    dominance: &DominanceSettings,
) -> Result<Vec<String>> {
    let emp = Ecdf::new(series.abs_values())?;
    let critical = dominance.critical_value(series.len())?;
    let dom = halfnormal_dominance(&emp, beta, critical);
    // reverse direction: the reference CDF above the empirical one (sample too wide)
    let half = HalfNormal { sigma: beta };
    let reverse = emp
        .steps()
        .map(|(x, before, _)| half.cdf(x) - before)
        .fold(0.0f64, f64::max)
        * (series.len() as f64).sqrt();
    let out = outlier_pvalue(sample, beta, OutlierMode::Binomial)?;
    let vol = volume_report_with(sample, beta, VolumeMethod::ClosedForm)?;
    Ok(vec![
        name.to_string(),
        fmt(beta),
        dom.dominated.to_string(),
        fmt(dom.statistic),
        fmt(dom.critical),
        (reverse > dom.critical).to_string(),
        fmt(reverse),
        out.count.to_string(),
        fmt(out.p_value),
        fmt(vol.f),
        fmt(vol.non_random_fraction),
    ])
}

fn analyze_group(
    name: &str,
    sample: MarketSample,
    args: &Args,
    dominance: &DominanceSettings,
    group_seed: u64,
    beta_true: Option<f64>,
) -> Result<GroupResult> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let series: NormalizedSeries = sample.normalized_series()?;
    let sim_seed = rng::derive_seed(group_seed, 1);
    let pct_seed = rng::derive_seed(group_seed, 2);
    let reference = match args.reference.as_str() {
        "pooled" => ReferenceMode::Pooled,
        "envelope" => ReferenceMode::Envelope,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown reference mode `{other}`"
            )))
        }
    };

    let hn = estimate_beta_halfnormal(&series, dominance)?;
    let sim_settings = SimulationSettings {
        replicates: args.j,
        runs: args.runs,
        dominance: *dominance,
        reference,
    };
    let sim = estimate_beta_simulation(&sample, &sim_settings, sim_seed)?;
    let pct = estimate_beta_percentile(
        &sample,
        &PercentileSettings {
            percentile: args.percentile,
            trials: args.trials,
            tail: args.tail,
        },
        pct_seed,
    )?;

    let mut outliers = Vec::new();
    let mut volumes = Vec::new();
    for est in [&hn, &sim, &pct] {
        let label = est.method.as_str().to_string();
        outliers.push((
            label.clone(),
            outlier_pvalue(&sample, est.beta, OutlierMode::Binomial)?,
        ));
        if let Some(trials) = args.outlier_trials {
            let mode = OutlierMode::Simulation {
                trials,
                seed: rng::derive_seed(group_seed, 3),
            };
            outliers.push((label.clone(), outlier_pvalue(&sample, est.beta, mode)?));
        }
        volumes.push((label, volume_report(&sample, est)?));
    }

    // plot data: empirical |T̄| against both references at their estimates
    let emp = Ecdf::new(series.abs_values())?;
    let replicates = run_algorithm1(&sample, sim.beta, args.j, sim.seeds[0])?;
    let pooled = Ecdf::new(
        replicates
            .iter()
            .flat_map(|r| r.values.iter().map(|v| v.abs()))
            .collect(),
    )?;
    let half = HalfNormal { sigma: hn.beta };
    let ecdf = emp
        .support()
        .iter()
        .map(|&v| [v, emp.cdf(v), half.cdf(v), pooled.cdf(v)])
        .collect();

    let truth = match beta_true {
        Some(b) => Some(truth_row(name, &sample, &series, b, dominance)?),
        None => None,
    };

    Ok(GroupResult {
        truth,
        name: name.to_string(),
        k: sample.k(),
        states: sample.states(),
        normality: normality_rows(name, &sample, args.alpha)?,
        realized: realized_abs_transfers(&sample)?,
        estimates: vec![hn, sim, pct],
        outliers,
        volumes,
        ecdf,
        seeds: (sim_seed, pct_seed),
    })
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    generator: &'static str,
    seed: u64,
    config: &'a Args,
    market: &'static str,
    recenter: bool,
    inputs: Vec<String>,
    cost_index: String,
    critical_value: f64,
    shapiro_wilk_method: &'static str,
    nc_note: &'static str,
    random_split: (BTreeSet<String>, BTreeSet<String>),
    selected_records: usize,
    input_records: usize,
    groups: Vec<GroupMeta>,
}

#[derive(Serialize)]
struct GroupMeta {
    name: String,
    k: usize,
    states: Vec<String>,
    simulation_seed: u64,
    simulation_run_seeds: Vec<u64>,
    simulation_run_betas: Vec<f64>,
    percentile_seed: u64,
}

pub fn run(args: Args) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let market: risk_transfer::Market = args.market.into();
    let map = ColumnMap::for_market(market);
    let (records, inputs) = load(&args.input, &map)?;
    let selection = SelectionConfig {
        min_member_months: args.min_member_months,
        ..SelectionConfig::default()
    };
    let selected = select_sample(&records, &selection);
    if selected.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let index = cost_index(&args.cost_index, &records, args.cost_year)?;
    let dominance = DominanceSettings {
        alpha: args.alpha,
        critical: match args.critical_trials {
            Some(trials) => CriticalValue::MonteCarlo {
                trials,
                seed: rng::derive_seed(args.seed, 9),
            },
            None => CriticalValue::Asymptotic,
        },
    };

    let beta_true = match &args.truth {
        Some(p) => Some(GroundTruth::read_path(p)?.beta_true),
        None => None,
    };
    let mut results = Vec::new();
    for (gi, name) in args.groups.iter().enumerate() {
        let states = groups::resolve(name, &selected, args.seed)?;
        let subset = match &states {
            Some(s) => selected.filter(|r| s.contains(&r.state)),
            None => selected.clone(),
        };
        let mut sample = normalize_dollars(subset, &index)?;
        if args.recenter == OnOff::On {
            sample = recenter_transfers(sample);
        }
        let group_seed = rng::derive_seed(args.seed, gi as u64);
        results.push(analyze_group(
            name, sample, &args, &dominance, group_seed, beta_true,
        )?);
    }

    ensure_dir(&args.out)?;
    let out = &args.out;
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    let mut t4 = Vec::new();
    let mut t5 = Vec::new();
    let mut to = Vec::new();
    for g in &results {
        for e in &g.estimates {
            let row = vec![
                g.name.clone(),
                g.k.to_string(),
                e.method.as_str().to_string(),
                fmt(e.beta),
                fmt(e.outlier_fraction),
                fmt(e.p_value),
                e.dominance_point.map_or("NA".into(), fmt),
                fmt(e.critical_value),
            ];
            if e.method == risk_transfer::EstimationMethod::Percentile {
                t2.push(vec![
                    g.name.clone(),
                    g.k.to_string(),
                    fmt(args.percentile),
                    fmt(e.beta),
                    fmt(e.outlier_fraction),
                    fmt(e.p_value),
                    e.dominance_point.map_or("NA".into(), fmt),
                ]);
            } else {
                t1.push(row);
            }
        }
        for (src, v) in &g.volumes {
            t3.push(vec![
                g.name.clone(),
                src.clone(),
                fmt(v.beta),
                fmt(v.f),
                fmt(v.non_random_fraction),
            ]);
        }
        t4.extend(g.normality.iter().cloned());
        t5.push(vec![
            g.name.clone(),
            g.k.to_string(),
            fmt(g.realized),
            fmt(g.volumes[0].1.expected),
        ]);
        for (src, o) in &g.outliers {
            let mode = match o.mode {
                OutlierMode::Binomial => "binomial",
                OutlierMode::Simulation { .. } => "simulation",
            };
            to.push(vec![
                g.name.clone(),
                src.clone(),
                mode.to_string(),
                fmt(o.beta),
                o.count.to_string(),
                fmt(o.fraction),
                o.p_value_display(),
                o.trials.to_string(),
            ]);
        }
        let plot: Vec<Vec<String>> = g
            .ecdf
            .iter()
            .map(|r| r.iter().map(|v| fmt(*v)).collect())
            .collect();
        write_csv(
            &out.join(format!("ecdf_{}.csv", g.name.replace('+', "_"))),
            &["v", "empirical", "half_normal", "simulation"],
            &plot,
        )?;
    }
    write_csv(
        &out.join("table1_beta.csv"),
        &[
            "group",
            "k",
            "method",
            "beta",
            "outlier_fraction",
            "p_value",
            "dominance_point",
            "critical_value",
        ],
        &t1,
    )?;
    write_csv(
        &out.join("table2_percentile.csv"),
        &[
            "group",
            "k",
            "percentile",
            "beta",
            "outlier_fraction",
            "p_value",
            "empirical_percentile",
        ],
        &t2,
    )?;
    write_csv(
        &out.join("table3_volume.csv"),
        &["group", "beta_source", "beta", "f", "non_random_fraction"],
        &t3,
    )?;
    write_csv(
        &out.join("table4_normality.csv"),
        &[
            "group", "state", "year", "k", "sw_w", "sw_p", "nc_p", "nc_beta0", "nc_case1",
            "nc_case2",
        ],
        &t4,
    )?;
    write_csv(
        &out.join("table5_sums.csv"),
        &[
            "group",
            "k",
            "realized_abs_transfers",
            "expected_abs_transfers_half_normal",
        ],
        &t5,
    )?;
    if beta_true.is_some() {
        let rows: Vec<Vec<String>> = results.iter().filter_map(|g| g.truth.clone()).collect();
        write_csv(
            &out.join("truth_check.csv"),
            &[
                "group",
                "beta_true",
                "dominated",
                "statistic",
                "critical_value",
                "reverse_dominated",
                "reverse_statistic",
                "outlier_count",
                "outlier_p_value",
                "f",
                "non_random_fraction",
            ],
            &rows,
        )?;
    }
    write_csv(
        &out.join("outliers.csv"),
        &[
            "group",
            "beta_source",
            "mode",
            "beta",
            "count",
            "fraction",
            "p_value",
            "trials",
        ],
        &to,
    )?;

    let meta = Metadata {
        tool: "ratransfer",
        version: env!("CARGO_PKG_VERSION"),
        generator: rng::GENERATOR_ID,
        seed: args.seed,
        config: &args,
        market: market.as_str(),
        recenter: args.recenter == OnOff::On,
        inputs,
        cost_index: index.id().to_string(),
        critical_value: dominance.critical_value(selected.k())?,
        shapiro_wilk_method: SW_METHOD,
        nc_note: NC_PROSE_NOTE,
        random_split: groups::random_split(&selected.states(), args.seed),
        selected_records: selected.k(),
        input_records: records.len(),
        groups: results
            .iter()
            .map(|g| GroupMeta {
                name: g.name.clone(),
                k: g.k,
                states: g.states.clone(),
                simulation_seed: g.seeds.0,
                simulation_run_seeds: g.estimates[1].seeds.clone(),
                simulation_run_betas: g.estimates[1].run_betas.clone(),
                percentile_seed: g.seeds.1,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(out.join("metadata.json"), text)?;
    Ok(())
}
