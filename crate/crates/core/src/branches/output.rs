//! CSV renderings of the branch analyses.
//!
//! Winner-rate tables: `characteristic, cohort, bin_low, bin_high, wins_a,
//! wins_b, draws, n`, where `a` is the full-history strategy.
//! Precision records: `merge_id, mode, branch_length, merge_size,
//! mean_precision` (6 decimals).

use std::io::Write;

use super::{CochangeStudy, Cohort, WinnerRateTable};
use crate::error::Result;
use crate::rational::fmt_decimal;

fn cohort_name(c: Cohort) -> String {
    match c {
        Cohort::Single => "single".to_string(),
        Cohort::AtLeast(k) => format!("at_least_{k}"),
    }
}

pub fn write_winner_tables<W: Write>(tables: &[WinnerRateTable], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "characteristic", "cohort", "bin_low", "bin_high", "wins_a", "wins_b", "draws", "n",
    ])
    ?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.characteristic.name().to_string(),
                cohort_name(t.cohort),
                r.bin_low.to_string(),
                r.bin_high.to_string(),
                r.wins_a.to_string(),
                r.wins_b.to_string(),
                r.draws.to_string(),
                r.n.to_string(),
            ])
            ?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_precision_csv<W: Write>(study: &CochangeStudy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["merge_id", "mode", "branch_length", "merge_size", "mean_precision"])
        ?;
    for row in &study.rows {
        for rec in &row.records {
            w.write_record([
                rec.merge.to_hex(),
                rec.mode.name().to_string(),
                row.branch.branch_length.to_string(),
                row.branch.merge_size.to_string(),
                fmt_decimal(&rec.mean_precision, 6),
            ])
            ?;
        }
    }
    w.flush()?;
    Ok(())
}
