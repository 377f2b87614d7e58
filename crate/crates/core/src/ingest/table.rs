//! Delimited insurer-report exports and the merged dataset format.
//!
//! Insurer-report headers are the report's row label and column label
//! concatenated with spaces removed, e.g.
//! `1.1Directpremiumwritten2HealthInsuranceSMALLGROUPTotalasof3/31/17`.
//! A [`ColumnMap`] names, per record field, the header candidates to look for;
//! a candidate matches a header exactly or as a prefix, so the trailing
//! "as of" date can vary by year.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{HiosId, InsurerRecord, Market};
use crate::error::{Error, Result};
use crate::ingest::summary::{parse_money, Payment, SummaryRow, NOT_ELIGIBLE};

/// The six summary-report columns that open every merged dataset, verbatim.
pub const SUMMARY_COLUMNS: [&str; 6] = [
    "HIOS ID",
    "HIOS INPUTTED INSURANCE COMPANY NAME",
    "STATE",
    "REINSURANCE PAYMENT AMOUNT (OR NOT ELIGIBLE)",
    "HHS RISK ADJUSTMENT TRANSFER AMOUNT (INDIVIDUAL MARKET, INCLUDING CATASTROPHIC)",
    "HHS RISK ADJUSTMENT TRANSFERS AMOUNT (SMALL GROUP MARKET)",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub market: Market,
    pub hios_id: Vec<String>,
    pub company_name: Vec<String>,
    pub state: Vec<String>,
    pub year: Vec<String>,
    pub nonprofit: Vec<String>,
    pub member_months: Vec<String>,
    pub premiums: Vec<String>,
    pub costs: Vec<String>,
    /// Insurer-reported (non-final) transfer estimate; summary values win.
    #[serde(default)]
    pub transfer_estimate: Vec<String>,
    #[serde(default)]
    pub reinsurance: Vec<String>,
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl ColumnMap {
    pub fn for_market(market: Market) -> Self {
        let seg = match market {
            Market::Individual => "INDIVIDUAL",
            Market::SmallGroup => "SMALLGROUP",
        };
        ColumnMap {
            market,
            hios_id: strs(&["HIOSID", "HIOS ID"]),
            company_name: strs(&["CompanyName", "COMPANY NAME"]),
            state: strs(&["State", "STATE"]),
            year: strs(&["BenefitYear", "YEAR"]),
            nonprofit: strs(&["NonprofitStatus", "Nonprofit"]),
            member_months: vec![format!("7.4Membermonths2HealthInsurance{seg}Total")],
            premiums: vec![format!("1.1Directpremiumwritten2HealthInsurance{seg}Total")],
            costs: vec![format!("2.1Totalincurredclaims2HealthInsurance{seg}Total")],
            transfer_estimate: vec![],
            reinsurance: vec![],
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("column map {}: {e}", path.display())))
    }
}

/// Resolved header positions for one table.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    hios_id: usize,
    company_name: Option<usize>,
    state: usize,
    year: Option<usize>,
    nonprofit: Option<usize>,
    member_months: usize,
    premiums: usize,
    costs: usize,
    transfer_estimate: Option<usize>,
    reinsurance: Option<usize>,
}

fn find(headers: &[String], candidates: &[String]) -> Option<usize> {
    candidates
        .iter()
        .find_map(|c| headers.iter().position(|h| h == c))
        .or_else(|| {
            candidates
                .iter()
                .find_map(|c| headers.iter().position(|h| h.starts_with(c.as_str())))
        })
}

fn require(headers: &[String], field: &'static str, candidates: &[String]) -> Result<usize> {
    find(headers, candidates).ok_or_else(|| Error::MissingColumn {
        field,
        candidates: candidates.to_vec(),
    })
}

impl ColumnIndex {
    pub fn resolve(headers: &[String], map: &ColumnMap) -> Result<Self> {
        Ok(ColumnIndex {
            hios_id: require(headers, "hios_id", &map.hios_id)?,
            company_name: find(headers, &map.company_name),
            state: require(headers, "state", &map.state)?,
            year: find(headers, &map.year),
            nonprofit: find(headers, &map.nonprofit),
            member_months: require(headers, "member_months", &map.member_months)?,
            premiums: require(headers, "premiums", &map.premiums)?,
            costs: require(headers, "costs", &map.costs)?,
            transfer_estimate: find(headers, &map.transfer_estimate),
            reinsurance: find(headers, &map.reinsurance),
        })
    }

    /// Builds a record from one row of cells. Unparseable numbers become absent.
    pub fn project(&self, cells: &[String], default_year: i32) -> InsurerRecord {
        let cell = |i: usize| cells.get(i).map(|s| s.trim()).unwrap_or("");
        let opt = |i: Option<usize>| i.map(cell).filter(|s| !s.is_empty());
        let year = opt(self.year)
            .and_then(|s| s.parse::<i32>().ok())
            .unwrap_or(default_year);
        InsurerRecord {
            hios_id: HiosId::parse(cell(self.hios_id)).ok(),
            company_name: opt(self.company_name).unwrap_or("").to_string(),
            state: cell(self.state).to_ascii_uppercase(),
            year,
            member_months: parse_number(cell(self.member_months))
                .filter(|v| *v >= 0.0)
                .map(|v| v.round() as u64),
            transfer: opt(self.transfer_estimate).and_then(parse_number),
            costs: parse_number(cell(self.costs)),
            premiums: parse_number(cell(self.premiums)),
            reinsurance: opt(self.reinsurance).and_then(parse_number),
            nonprofit: opt(self.nonprofit).and_then(parse_flag),
        }
    }
}

/// Lenient number parsing for spreadsheet exports: plain or comma-grouped
/// digits, `$`, parenthesized negatives. Blank and NA-like cells are absent.
pub fn parse_number(cell: &str) -> Option<f64> {
    let s = cell.trim();
    if s.is_empty() || matches!(s.to_ascii_uppercase().as_str(), "NA" | "N/A" | "-" | "NAN") {
        return None;
    }
    if let Some(v) = parse_money(s) {
        return Some(v);
    }
    let (neg, body) = match s.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
        Some(inner) => (true, inner),
        None => (false, s),
    };
    let cleaned: String = body.chars().filter(|c| *c != ',' && *c != '$').collect();
    let v: f64 = cleaned.parse().ok()?;
    v.is_finite().then_some(if neg { -v } else { v })
}

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "y" | "yes" | "true" | "nonprofit" | "non-profit" => Some(true),
        "0" | "n" | "no" | "false" | "for-profit" | "forprofit" => Some(false),
        _ => None,
    }
}

/// Raw delimited table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(RawTable { headers, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

/// Insurer-report export with its records projected for one market.
#[derive(Debug, Clone, PartialEq)]
pub struct InsurerTable {
    pub raw: RawTable,
    pub records: Vec<InsurerRecord>,
    /// Indices of records missing a field the analysis needs.
    pub incomplete: Vec<usize>,
    pub warnings: Vec<String>,
}

impl InsurerTable {
    pub fn from_raw(raw: RawTable, map: &ColumnMap, default_year: i32) -> Result<Self> {
        let index = ColumnIndex::resolve(&raw.headers, map)?;
        let records: Vec<InsurerRecord> = raw
            .rows
            .iter()
            .map(|cells| index.project(cells, default_year))
            .collect();
        let incomplete = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.member_months.is_none() || r.costs.is_none() || r.premiums.is_none())
            .map(|(i, _)| i)
            .collect();
        let mut warnings = Vec::new();
        let mut seen: HashMap<(&HiosId, &str, i32), usize> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if let Some(id) = &r.hios_id {
                if let Some(first) = seen.insert((id, r.state.as_str(), r.year), i) {
                    warnings.push(format!(
                        "duplicate HIOS id {id} in {}-{} (rows {} and {}); both kept",
                        r.state,
                        r.year,
                        first + 1,
                        i + 1
                    ));
                }
            } else {
                warnings.push(format!("row {} has no valid HIOS id", i + 1));
            }
        }
        Ok(InsurerTable {
            raw,
            records,
            incomplete,
            warnings,
        })
    }
}

/// Loads an insurer-report export and projects it through `map`.
pub fn load_insurer_table(path: &Path, map: &ColumnMap, default_year: i32) -> Result<InsurerTable> {
    InsurerTable::from_raw(RawTable::read_path(path)?, map, default_year)
}

fn fmt_payment(p: &Option<Payment>) -> String {
    match p {
        None => String::new(),
        Some(Payment::NotEligible) => NOT_ELIGIBLE.to_string(),
        Some(Payment::Amount(v)) => format!("{v}"),
    }
}

fn parse_payment(cell: &str) -> Option<Payment> {
    let s = cell.trim();
    if s.eq_ignore_ascii_case(NOT_ELIGIBLE) {
        Some(Payment::NotEligible)
    } else {
        parse_number(s).map(Payment::Amount)
    }
}

/// One row of the merged dataset: either side may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedRow {
    pub summary: Option<SummaryRow>,
    pub insurer: Option<Vec<String>>,
}

/// Summary report joined with insurer reports for one benefit year.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedDataset {
    pub year: i32,
    pub insurer_headers: Vec<String>,
    pub rows: Vec<MergedRow>,
}

impl MergedDataset {
    /// Projects every row to a record for `map.market`. Final summary
    /// payments replace the insurer-reported estimates.
    pub fn records(&self, map: &ColumnMap) -> Result<Vec<InsurerRecord>> {
        let index = if self.rows.iter().any(|r| r.insurer.is_some()) {
            Some(ColumnIndex::resolve(&self.insurer_headers, map)?)
        } else {
            None
        };
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut rec = match (&row.insurer, &index) {
                    (Some(cells), Some(ix)) => ix.project(cells, self.year),
                    _ => InsurerRecord::new(String::new(), self.year),
                };
                if let Some(s) = &row.summary {
                    if rec.hios_id.is_none() {
                        rec.hios_id = Some(s.hios_id.clone());
                    }
                    if rec.company_name.is_empty() {
                        rec.company_name = s.company_name.clone();
                    }
                    if rec.state.is_empty() {
                        rec.state = s.state.clone();
                    }
                    let final_transfer = match map.market {
                        Market::SmallGroup => &s.ra_transfer_small_group,
                        Market::Individual => &s.ra_transfer_individual,
                    };
                    if let Some(v) = final_transfer.and_then(|p| p.amount()) {
                        rec.transfer = Some(v);
                    }
                    if let Some(v) = s.reinsurance_payment.and_then(|p| p.amount()) {
                        rec.reinsurance = Some(v);
                    }
                }
                rec
            })
            .collect())
    }

    pub fn headers(&self) -> Vec<String> {
        SUMMARY_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.insurer_headers.iter().cloned())
            .collect()
    }

    /// Writes the dataset as CSV: six summary columns, then insurer columns.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.headers())?;
        let width = self.insurer_headers.len();
        for row in &self.rows {
            let mut cells: Vec<String> = match &row.summary {
                Some(s) => vec![
                    s.hios_id.to_string(),
                    s.company_name.clone(),
                    s.state.clone(),
                    fmt_payment(&s.reinsurance_payment),
                    fmt_payment(&s.ra_transfer_individual),
                    fmt_payment(&s.ra_transfer_small_group),
                ],
                None => vec![String::new(); 6],
            };
            match &row.insurer {
                Some(c) => cells.extend((0..width).map(|i| c.get(i).cloned().unwrap_or_default())),
                None => cells.extend(std::iter::repeat_n(String::new(), width)),
            }
            w.write_record(&cells)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        self.write(std::io::BufWriter::new(File::create(path)?))
    }

    /// Reads a dataset written by [`MergedDataset::write`].
    pub fn read<R: Read>(reader: R, year: i32) -> Result<Self> {
        let raw = RawTable::read(reader)?;
        if raw.headers.len() < SUMMARY_COLUMNS.len()
            || raw.headers[..6]
                .iter()
                .zip(SUMMARY_COLUMNS)
                .any(|(h, s)| h != s)
        {
            return Err(Error::Parse(
                "dataset does not start with the six summary-report columns".into(),
            ));
        }
        let insurer_headers = raw.headers[6..].to_vec();
        let rows = raw
            .rows
            .into_iter()
            .enumerate()
            .map(|(i, cells)| {
                let cell = |j: usize| cells.get(j).map(|s| s.trim()).unwrap_or("");
                let summary = if cell(0).is_empty() {
                    None
                } else {
                    Some(SummaryRow {
                        hios_id: HiosId::parse(cell(0))
                            .map_err(|e| Error::Parse(format!("dataset row {}: {e}", i + 2)))?,
                        company_name: cell(1).to_string(),
                        state: cell(2).to_string(),
                        reinsurance_payment: parse_payment(cell(3)),
                        ra_transfer_individual: parse_payment(cell(4)),
                        ra_transfer_small_group: parse_payment(cell(5)),
                        lines: (0, 0),
                    })
                };
                let rest: Vec<String> = cells.iter().skip(6).cloned().collect();
                let insurer = if rest.iter().all(|c| c.trim().is_empty()) {
                    None
                } else {
                    Some(rest)
                };
                Ok(MergedRow { summary, insurer })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MergedDataset {
            year,
            insurer_headers,
            rows,
        })
    }

    pub fn read_path(path: &Path, year: i32) -> Result<Self> {
        Self::read(File::open(path)?, year)
    }
}
