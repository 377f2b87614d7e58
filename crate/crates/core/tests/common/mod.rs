#![allow(dead_code)]

use std::path::{Path, PathBuf};

use risk_transfer::ingest::{
    merge, parse_summary_text_with, ColumnMap, InsurerTable, RawTable, Reject, SummaryLayout,
    SummaryRow,
};
use risk_transfer::Market;
use serde::Deserialize;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Deserialize)]
struct Expected {
    layout: String,
    rows: Vec<SummaryRow>,
    rejects: Vec<Reject>,
}

fn sorted_entries(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

/// Parses every summary fixture twice and compares with its expected file.
pub fn run_summary_corpus() -> Vec<(String, Result<(), String>)> {
    let dir = fixtures().join("summary");
    sorted_entries(&dir)
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            let exp: Expected = serde_json::from_str(
                &std::fs::read_to_string(dir.join(format!("{name}.expected.json"))).unwrap(),
            )
            .unwrap();
            let layout = match exp.layout.as_str() {
                "2017" => SummaryLayout::for_year(2017),
                _ => SummaryLayout::default(),
            };
            let got = parse_summary_text_with(&text, &layout);
            let again = parse_summary_text_with(&text, &layout);
            let result = if got.rows != exp.rows {
                Err(format!("rows differ: {:?}", got.rows))
            } else if got.rejects != exp.rejects {
                Err(format!("rejects differ: {:?}", got.rejects))
            } else if got != again {
                Err("rerun differs".into())
            } else {
                Ok(())
            };
            (name, result)
        })
        .collect()
}

fn merge_case(dir: &Path) -> Vec<u8> {
    let text = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    let parsed = parse_summary_text_with(&text, &SummaryLayout::default());
    assert!(parsed.rejects.is_empty(), "{:?}", parsed.rejects);
    let raw = RawTable::read_path(&dir.join("insurer.csv")).unwrap();
    let table =
        InsurerTable::from_raw(raw, &ColumnMap::for_market(Market::SmallGroup), 2016).unwrap();
    let (dataset, _) = merge(&parsed.rows, &table, 2016);
    let mut out = Vec::new();
    dataset.write(&mut out).unwrap();
    out
}

/// Merges every merge fixture twice and compares with its expected CSV.
pub fn run_merge_corpus() -> Vec<(String, Result<(), String>)> {
    sorted_entries(&fixtures().join("merge"))
        .into_iter()
        .map(|dir| {
            let name = dir.file_name().unwrap().to_string_lossy().into_owned();
            let expected = std::fs::read(dir.join("expected.csv")).unwrap();
            let got = merge_case(&dir);
            let result = if got != expected {
                Err(format!(
                    "merged csv differs:\n{}",
                    String::from_utf8_lossy(&got)
                ))
            } else if merge_case(&dir) != got {
                Err("rerun differs".into())
            } else {
                Ok(())
            };
            (name, result)
        })
        .collect()
}
