//! Report files: one CSV row per evaluation record plus a JSON summary.
//!
//! CSV columns, in order:
//! `commit, strategy, oracle, query, outcome, oracle_rank, average_precision,
//! n_recommendations, n_rules, verdict`. Query files are joined with `;`,
//! `average_precision` is rounded to 6 decimals and `verdict` is `win`,
//! `loss` or `draw` from that row's strategy's point of view.

use std::io::Write;

use serde::Serialize;

use super::{EvaluationRecord, ExperimentReport, ExperimentSummary, PairedVerdict};
use crate::error::Result;
use crate::rational::fmt_decimal;

pub const RECORD_COLUMNS: [&str; 10] = [
    "commit",
    "strategy",
    "oracle",
    "query",
    "outcome",
    "oracle_rank",
    "average_precision",
    "n_recommendations",
    "n_rules",
    "verdict",
];

fn record_row(r: &EvaluationRecord, verdict: &str) -> [String; 10] {
    [
        r.test_case.commit.to_hex(),
        r.strategy.name().to_string(),
        r.test_case.oracle.as_str().to_string(),
        r.test_case
            .query
            .iter()
            .map(|f| f.as_str())
            .collect::<Vec<_>>()
            .join(";"),
        r.outcome.name().to_string(),
        r.oracle_rank.map(|k| k.to_string()).unwrap_or_default(),
        fmt_decimal(&r.average_precision, 6),
        r.n_recommendations.to_string(),
        r.n_rules.to_string(),
        verdict.to_string(),
    ]
}

pub fn write_records_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for pair in &report.records {
        let (va, vb) = match pair.verdict {
            PairedVerdict::WinA => ("win", "loss"),
            PairedVerdict::WinB => ("loss", "win"),
            PairedVerdict::Draw => ("draw", "draw"),
        };
        w.write_record(record_row(&pair.a, va))?;
        w.write_record(record_row(&pair.b, vb))?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summary: &ExperimentSummary, out: W) -> Result<()> {
    write_json(summary, out)
}
