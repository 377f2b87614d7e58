//! Whitespace-token parser for plain-text dumps of the annual payment summary.
//!
//! The dumps lose column alignment and wrap long company names across lines,
//! so rows are recovered from the token stream: a five-digit id opens a row,
//! words up to the first payment token form the name, the last of those words
//! is the state, and the following payment tokens fill the payment columns.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::HiosId;

/// One payment cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Payment {
    Amount(f64),
    /// The issuer was not eligible for the program.
    NotEligible,
}

impl Payment {
    pub fn amount(&self) -> Option<f64> {
        match self {
            Payment::Amount(v) => Some(*v),
            Payment::NotEligible => None,
        }
    }
}

pub const NOT_ELIGIBLE: &str = "NOT ELIGIBLE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub hios_id: HiosId,
    pub company_name: String,
    pub state: String,
    pub reinsurance_payment: Option<Payment>,
    pub ra_transfer_individual: Option<Payment>,
    pub ra_transfer_small_group: Option<Payment>,
    /// 1-based inclusive line span in the source text.
    pub lines: (usize, usize),
}

/// Payment columns in the order they appear in a summary dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PaymentColumn {
    Reinsurance,
    Individual,
    SmallGroup,
}

/// Column layout of a summary report. Reinsurance columns stop after 2016.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryLayout {
    pub columns: Vec<PaymentColumn>,
}

impl Default for SummaryLayout {
    fn default() -> Self {
        SummaryLayout {
            columns: vec![
                PaymentColumn::Reinsurance,
                PaymentColumn::Individual,
                PaymentColumn::SmallGroup,
            ],
        }
    }
}

impl SummaryLayout {
    pub fn without_reinsurance() -> Self {
        SummaryLayout {
            columns: vec![PaymentColumn::Individual, PaymentColumn::SmallGroup],
        }
    }

    /// Layout used by the summary reports of `year`.
    pub fn for_year(year: i32) -> Self {
        if year <= 2016 {
            Self::default()
        } else {
            Self::without_reinsurance()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based inclusive line span.
    pub lines: (usize, usize),
    pub reason: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryParse {
    pub rows: Vec<SummaryRow>,
    pub rejects: Vec<Reject>,
}

fn money_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(?P<neg>-)?\$?(?P<open>\()?-?\$?(?P<num>\d{1,3}(?:,\d{3})*(?:\.\d+)?)(?P<close>\))?$",
        )
        .expect("valid money regex")
    })
}

/// Parses one money token. Digits must be comma-grouped, so bare ids and
/// years never read as amounts.
pub fn parse_money(token: &str) -> Option<f64> {
    let caps = money_re().captures(token)?;
    let open = caps.name("open").is_some();
    let close = caps.name("close").is_some();
    if open != close {
        return None;
    }
    let inner_minus = {
        let num_start = caps.name("num").unwrap().start();
        token[..num_start].matches('-').count() > usize::from(caps.name("neg").is_some())
    };
    let value: f64 = caps["num"].replace(',', "").parse().ok()?;
    let negative = caps.name("neg").is_some() || open || inner_minus;
    Some(if negative { -value } else { value })
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn tokenize(raw: &str) -> Vec<Token<'_>> {
    raw.lines()
        .enumerate()
        .flat_map(|(i, line)| {
            line.split_whitespace()
                .map(move |text| Token { text, line: i + 1 })
        })
        .collect()
}

fn is_row_start(tok: &str) -> bool {
    tok.len() == 5 && tok.bytes().all(|b| b.is_ascii_digit())
}

/// Length in tokens of a payment token at `i` (the sentinel spans two).
fn payment_at(tokens: &[Token<'_>], i: usize) -> Option<(Payment, usize)> {
    let t = tokens.get(i)?.text;
    if t.eq_ignore_ascii_case("NOT")
        && tokens
            .get(i + 1)
            .is_some_and(|n| n.text.eq_ignore_ascii_case("ELIGIBLE"))
    {
        return Some((Payment::NotEligible, 2));
    }
    parse_money(t).map(|v| (Payment::Amount(v), 1))
}

fn join(tokens: &[Token<'_>]) -> String {
    tokens.iter().map(|t| t.text).collect::<Vec<_>>().join(" ")
}

/// Parses a summary dump with the three-column (pre-2017) layout.
pub fn parse_summary_text(raw: &str) -> SummaryParse {
    parse_summary_text_with(raw, &SummaryLayout::default())
}

/// Parses a summary dump. Every token ends up in exactly one row or reject.
pub fn parse_summary_text_with(raw: &str, layout: &SummaryLayout) -> SummaryParse {
    let tokens = tokenize(raw);
    let mut out = SummaryParse::default();
    let mut i = 0;
    while i < tokens.len() {
        if !is_row_start(tokens[i].text) {
            let start = i;
            while i < tokens.len() && !is_row_start(tokens[i].text) {
                i += 1;
            }
            let span = &tokens[start..i];
            out.rejects.push(Reject {
                lines: (span[0].line, span[span.len() - 1].line),
                reason: "text outside any row (missing or malformed HIOS id)".into(),
                text: join(span),
            });
            continue;
        }

        let start = i;
        i += 1;
        let name_start = i;
        while i < tokens.len() && !is_row_start(tokens[i].text) && payment_at(&tokens, i).is_none()
        {
            i += 1;
        }
        let name_tokens = &tokens[name_start..i];
        if payment_at(&tokens, i).is_none() {
            let span = &tokens[start..i];
            out.rejects.push(Reject {
                lines: (span[0].line, span[span.len() - 1].line),
                reason: "no payment token".into(),
                text: join(span),
            });
            continue;
        }

        let mut payments = Vec::with_capacity(layout.columns.len());
        while payments.len() < layout.columns.len() {
            match payment_at(&tokens, i) {
                Some((p, len)) => {
                    payments.push(p);
                    i += len;
                }
                None => break,
            }
        }
        let span = &tokens[start..i];
        let lines = (span[0].line, span[span.len() - 1].line);

        let Some((state_tok, company)) = name_tokens.split_last() else {
            out.rejects.push(Reject {
                lines,
                reason: "no state before first payment".into(),
                text: join(span),
            });
            continue;
        };
        let state = state_tok.text;
        if state.len() != 2 || !state.bytes().all(|b| b.is_ascii_alphabetic()) {
            out.rejects.push(Reject {
                lines,
                reason: format!("invalid state `{state}`"),
                text: join(span),
            });
            continue;
        }

        let mut row = SummaryRow {
            hios_id: HiosId::parse(tokens[start].text).expect("row start is five digits"),
            company_name: join(company),
            state: state.to_ascii_uppercase(),
            reinsurance_payment: None,
            ra_transfer_individual: None,
            ra_transfer_small_group: None,
            lines,
        };
        for (col, p) in layout.columns.iter().zip(payments) {
            match col {
                PaymentColumn::Reinsurance => row.reinsurance_payment = Some(p),
                PaymentColumn::Individual => row.ra_transfer_individual = Some(p),
                PaymentColumn::SmallGroup => row.ra_transfer_small_group = Some(p),
            }
        }
        out.rows.push(row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_grammar() {
        assert_eq!(parse_money("1,234,567.89"), Some(1_234_567.89));
        assert_eq!(parse_money("-234,567.01"), Some(-234_567.01));
        assert_eq!(parse_money("(1,000)"), Some(-1000.0));
        assert_eq!(parse_money("$(12.50)"), Some(-12.5));
        assert_eq!(parse_money("-$5"), Some(-5.0));
        assert_eq!(parse_money("0.00"), Some(0.0));
        assert_eq!(parse_money("0"), Some(0.0));
        for name in ["12345", "1234", "ACME", "(1,000", "1,00", "2,0000", "NY"] {
            assert_eq!(parse_money(name), None, "{name}");
        }
    }

    #[test]
    fn basic_row() {
        let p = parse_summary_text("12345 ACME HEALTH PLAN NY 1,234,567.89 -234,567.01 345,678.00");
        assert!(p.rejects.is_empty());
        let r = &p.rows[0];
        assert_eq!(r.hios_id.as_str(), "12345");
        assert_eq!(r.company_name, "ACME HEALTH PLAN");
        assert_eq!(r.state, "NY");
        assert_eq!(r.reinsurance_payment, Some(Payment::Amount(1_234_567.89)));
        assert_eq!(r.ra_transfer_individual, Some(Payment::Amount(-234_567.01)));
        assert_eq!(r.ra_transfer_small_group, Some(Payment::Amount(345_678.00)));
    }

    #[test]
    fn line_broken_name_and_sentinel() {
        let p = parse_summary_text("54321 TINY CO\nOF OHIO OH NOT ELIGIBLE 0.00 -10.50");
        assert!(p.rejects.is_empty());
        let r = &p.rows[0];
        assert_eq!(r.company_name, "TINY CO OF OHIO");
        assert_eq!(r.state, "OH");
        assert_eq!(r.reinsurance_payment, Some(Payment::NotEligible));
        assert_eq!(r.ra_transfer_individual, Some(Payment::Amount(0.0)));
        assert_eq!(r.ra_transfer_small_group, Some(Payment::Amount(-10.5)));
        assert_eq!(r.lines, (1, 2));
    }

    #[test]
    fn empty_input() {
        let p = parse_summary_text("");
        assert!(p.rows.is_empty() && p.rejects.is_empty());
    }

    #[test]
    fn row_without_payment_is_rejected() {
        let p = parse_summary_text("11111 NO MONEY CO NY\n22222 OK CO CA 1.00 2.00 3.00");
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.rejects.len(), 1);
        assert_eq!(p.rejects[0].reason, "no payment token");
        assert_eq!(p.rejects[0].lines, (1, 1));
    }

    #[test]
    fn malformed_id_is_rejected() {
        let p = parse_summary_text("1234 SHORT ID CO NY 1.00 2.00 3.00");
        assert!(p.rows.is_empty());
        assert_eq!(p.rejects.len(), 1);
    }
}
