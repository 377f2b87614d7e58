use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain::HiosId;
use crate::ingest::summary::SummaryRow;
use crate::ingest::table::{InsurerTable, MergedDataset, MergedRow};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergeDiagnostics {
    pub rows: usize,
    pub matched_ids: usize,
    pub summary_only: usize,
    pub insurer_only: usize,
    /// Insurer rows without a usable HIOS id; kept, never matched.
    pub insurer_without_id: usize,
}

/// Full outer join of summary rows and insurer-report rows on HIOS id.
///
/// Output is ordered by id; a key present several times on either side
/// yields every pairing. Insurer rows without an id come last.
pub fn merge(
    summary: &[SummaryRow],
    insurer: &InsurerTable,
    year: i32,
) -> (MergedDataset, MergeDiagnostics) {
    let mut keys: BTreeMap<&HiosId, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, s) in summary.iter().enumerate() {
        keys.entry(&s.hios_id).or_default().0.push(i);
    }
    let mut orphans = Vec::new();
    for (i, r) in insurer.records.iter().enumerate() {
        match &r.hios_id {
            Some(id) => keys.entry(id).or_default().1.push(i),
            None => orphans.push(i),
        }
    }

    let mut diag = MergeDiagnostics::default();
    let mut rows = Vec::new();
    let cells = |i: usize| insurer.raw.rows[i].clone();
    for (s_idx, i_idx) in keys.values() {
        match (s_idx.is_empty(), i_idx.is_empty()) {
            (false, false) => {
                diag.matched_ids += 1;
                for &s in s_idx {
                    for &i in i_idx {
                        rows.push(MergedRow {
                            summary: Some(summary[s].clone()),
                            insurer: Some(cells(i)),
                        });
                    }
                }
            }
            (false, true) => {
                diag.summary_only += s_idx.len();
                rows.extend(s_idx.iter().map(|&s| MergedRow {
                    summary: Some(summary[s].clone()),
                    insurer: None,
                }));
            }
            (true, false) => {
                diag.insurer_only += i_idx.len();
                rows.extend(i_idx.iter().map(|&i| MergedRow {
                    summary: None,
                    insurer: Some(cells(i)),
                }));
            }
            (true, true) => unreachable!("key without rows"),
        }
    }
    diag.insurer_without_id = orphans.len();
    rows.extend(orphans.into_iter().map(|i| MergedRow {
        summary: None,
        insurer: Some(cells(i)),
    }));
    diag.rows = rows.len();

    (
        MergedDataset {
            year,
            insurer_headers: insurer.raw.headers.clone(),
            rows,
        },
        diag,
    )
}
