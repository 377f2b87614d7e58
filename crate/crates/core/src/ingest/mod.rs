//! Report parsing, merging, sample selection and dollar normalization.

mod cost_index;
mod market;
mod merge;
pub mod summary;
pub mod table;

pub use cost_index::{normalize_dollars, CostIndex};
pub use market::{
    classify_competitive, classify_competitive_in, compute_hhi, hhi_by_state, hhi_from_sizes,
    recenter_transfers, select_sample, SelectionConfig, COMPETITIVE_REFERENCE_YEAR,
};
pub use merge::{merge, MergeDiagnostics};
pub use summary::{
    parse_money, parse_summary_text, parse_summary_text_with, Payment, PaymentColumn, Reject,
    SummaryLayout, SummaryParse, SummaryRow,
};
pub use table::{
    load_insurer_table, parse_number, ColumnMap, InsurerTable, MergedDataset, MergedRow, RawTable,
    SUMMARY_COLUMNS,
};
