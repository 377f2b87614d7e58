use std::collections::BTreeSet;
use std::path::PathBuf;

use risk_transfer::ingest::{
    load_insurer_table, merge, parse_summary_text_with, ColumnMap, SummaryLayout,
};
use risk_transfer::{Error, Result};
use serde::Serialize;

use crate::{ensure_dir, MarketArg};

#[derive(clap::Args)]
pub struct Args {
    /// Directory holding `summary_<year>.txt` and `insurer_<year>.csv` files.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "small-group")]
    market: MarketArg,
    /// JSON column map overriding the default insurer-table headers.
    #[arg(long)]
    column_map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct YearDiagnostics {
    year: i32,
    summary_rows: usize,
    rejects: usize,
    insurer_rows: usize,
    incomplete_insurer_rows: usize,
    warnings: Vec<String>,
    merge: risk_transfer::ingest::MergeDiagnostics,
}

fn years(input: &PathBuf) -> Result<BTreeSet<i32>> {
    let mut out = BTreeSet::new();
    for e in std::fs::read_dir(input)? {
        let name = e?.file_name().to_string_lossy().into_owned();
        if let Some(y) = name
            .strip_prefix("summary_")
            .and_then(|s| s.strip_suffix(".txt"))
        {
            if let Ok(y) = y.parse() {
                out.insert(y);
            }
        }
    }
    Ok(out)
}

pub fn run(args: Args) -> Result<()> {
    let map = match &args.column_map {
        Some(p) => ColumnMap::from_json_file(p)?,
        None => ColumnMap::for_market(args.market.into()),
    };
    let years = years(&args.input)?;
    if years.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no summary_<year>.txt files in {}",
            args.input.display()
        )));
    }
    ensure_dir(&args.out)?;
    let mut diags = Vec::new();
    let mut rejects = csv::Writer::from_path(args.out.join("rejects.csv"))?;
    rejects.write_record(["year", "first_line", "last_line", "reason", "text"])?;
    for year in years {
        let text = std::fs::read_to_string(args.input.join(format!("summary_{year}.txt")))?;
        let parsed = parse_summary_text_with(&text, &SummaryLayout::for_year(year));
        let table =
            load_insurer_table(&args.input.join(format!("insurer_{year}.csv")), &map, year)?;
        let (dataset, merge_diag) = merge(&parsed.rows, &table, year);
        dataset.write_path(&args.out.join(format!("dataset_{year}.csv")))?;
        for r in &parsed.rejects {
            rejects.write_record([
                year.to_string(),
                r.lines.0.to_string(),
                r.lines.1.to_string(),
                r.reason.clone(),
                r.text.clone(),
            ])?;
        }
        diags.push(YearDiagnostics {
            year,
            summary_rows: parsed.rows.len(),
            rejects: parsed.rejects.len(),
            insurer_rows: table.records.len(),
            incomplete_insurer_rows: table.incomplete.len(),
            warnings: table.warnings.clone(),
            merge: merge_diag,
        });
    }
    rejects.flush()?;
    let mut text = serde_json::to_string_pretty(&diags)?;
    text.push('\n');
    std::fs::write(args.out.join("diagnostics.json"), text)?;
    Ok(())
}
