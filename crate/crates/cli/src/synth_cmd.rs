use std::path::PathBuf;

use risk_transfer::synth::{
    calibrate_drift_sigma, generate_market, DriftLaw, PatientLaw, SizeLaw, SynthConfig,
};
use risk_transfer::{Error, Result};

use crate::ensure_dir;

#[derive(clap::Args)]
pub struct Args {
    /// JSON synthesis config; command-line values are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    states: usize,
    /// `fixed:N`, `uniform:LO:HI` or `log-uniform:LO:HI`.
    #[arg(long, default_value = "uniform:2001:50000")]
    sizes: String,
    #[arg(long, default_value_t = 10_000.0)]
    beta: f64,
    /// `zero`, `normal:SIGMA`, `normal-calibrated` or `two-point:LOW:HIGH:P`.
    #[arg(long, default_value = "zero")]
    drift: String,
    /// Per-member-month log-normal shocks with this log-scale sigma.
    #[arg(long)]
    lognormal_patients: Option<f64>,
    #[arg(long, default_value_t = 2017)]
    year: i32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn bad(what: &str, spec: &str) -> Error {
    Error::InvalidParameter(format!("cannot read {what} `{spec}`"))
}

fn parts<T: std::str::FromStr>(spec: &str, what: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<&str> = spec.split(':').skip(1).collect();
    if v.len() != n {
        return Err(bad(what, spec));
    }
    v.iter()
        .map(|s| s.parse().map_err(|_| bad(what, spec)))
        .collect()
}

fn size_law(spec: &str) -> Result<SizeLaw> {
    match spec.split(':').next().unwrap_or("") {
        "fixed" => Ok(SizeLaw::Fixed {
            n: parts(spec, "size law", 1)?[0],
        }),
        "uniform" => {
            let p: Vec<u64> = parts(spec, "size law", 2)?;
            Ok(SizeLaw::UniformInt { lo: p[0], hi: p[1] })
        }
        "log-uniform" => {
            let p: Vec<u64> = parts(spec, "size law", 2)?;
            Ok(SizeLaw::LogUniform { lo: p[0], hi: p[1] })
        }
        _ => Err(bad("size law", spec)),
    }
}

/// `None` stands for calibration against the drawn sizes.
fn drift_law(spec: &str) -> Result<Option<DriftLaw>> {
    match spec.split(':').next().unwrap_or("") {
        "zero" => Ok(Some(DriftLaw::Zero)),
        "normal-calibrated" => Ok(None),
        "normal" => Ok(Some(DriftLaw::Normal {
            sigma: parts(spec, "drift law", 1)?[0],
        })),
        "two-point" => {
            let p: Vec<f64> = parts(spec, "drift law", 3)?;
            Ok(Some(DriftLaw::TwoPoint {
                low: p[0],
                high: p[1],
                p_high: p[2],
            }))
        }
        _ => Err(bad("drift law", spec)),
    }
}

pub fn run(args: Args) -> Result<()> {
    let config = match &args.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| Error::InvalidParameter(format!("synth config: {e}")))?,
        None => {
            let mut cfg = SynthConfig {
                k: args.k,
                states: args.states,
                size_law: size_law(&args.sizes)?,
                beta_true: args.beta,
                drift_law: DriftLaw::Zero,
                patient_law: match args.lognormal_patients {
                    Some(sigma) => PatientLaw::LogNormal { sigma },
                    None => PatientLaw::Normal,
                },
                year: args.year,
                seed: args.seed,
            };
            cfg.drift_law = match drift_law(&args.drift)? {
                Some(d) => d,
                None => {
                    // sizes do not depend on the drift law, so a zero-drift draw fixes them
                    let sizes: Vec<f64> = generate_market(&cfg)?
                        .truth
                        .insurers
                        .iter()
                        .map(|t| t.member_months as f64)
                        .collect();
                    DriftLaw::Normal {
                        sigma: calibrate_drift_sigma(&sizes, cfg.beta_true),
                    }
                }
            };
            cfg
        }
    };
    let market = generate_market(&config)?;
    ensure_dir(&args.out)?;
    market
        .dataset
        .write_path(&args.out.join(format!("dataset_{}.csv", config.year)))?;
    market.truth.write_path(&args.out.join("truth.json"))?;
    Ok(())
}
