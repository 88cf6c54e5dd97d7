//! Plain-text tables from one or more evaluation summaries.

use std::collections::BTreeMap;
use std::fmt::Write;

use cochange::eval::{ExperimentSummary, RepoVerdict, StrategySummary, WinnerMetric};
use cochange::rational::fmt_decimal;
use cochange::{BranchHandlingStrategy, Rational};

pub const NO_EVENTS: &str = "no eligible events";

type GroupKey = (String, BranchHandlingStrategy, BranchHandlingStrategy);

fn dec(r: Option<Rational>) -> String {
    r.map_or_else(|| "-".to_string(), |r| fmt_decimal(&r, 3))
}

fn metric_name(m: WinnerMetric) -> &'static str {
    match m {
        WinnerMetric::SuccessRate => "success rate",
        WinnerMetric::MapAll => "MAP_all",
        WinnerMetric::Wins => "wins",
    }
}

/// Left-aligns the first `left` columns, right-aligns the rest.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>], left: usize) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < left { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
    out.push('\n');
}

/// Renders the three report tables. Summaries are grouped by repository
/// set and strategy pair; tallies within a group are pooled exactly.
pub fn render(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::new();
    if summaries.iter().all(|s| s.events == 0) {
        let _ = writeln!(out, "{NO_EVENTS}");
        return out;
    }
    let mut groups: BTreeMap<GroupKey, Vec<&ExperimentSummary>> = BTreeMap::new();
    for s in summaries {
        let set = s.repo_set.clone().unwrap_or_else(|| "-".to_string());
        groups.entry((set, s.a.strategy, s.b.strategy)).or_default().push(s);
    }

    let pooled: Vec<(&GroupKey, [StrategySummary; 2])> = groups
        .iter()
        .filter_map(|(k, v)| {
            let a = StrategySummary::pooled(&v.iter().map(|s| &s.a).collect::<Vec<_>>())?;
            let b = StrategySummary::pooled(&v.iter().map(|s| &s.b).collect::<Vec<_>>())?;
            Some((k, [a, b]))
        })
        .collect();

    let _ = writeln!(out, "Success, failure and no-prediction rates\n");
    let rows: Vec<Vec<String>> = pooled
        .iter()
        .flat_map(|((set, _, _), pair)| {
            pair.iter().map(move |s| {
                vec![
                    set.clone(),
                    s.strategy.name().to_string(),
                    s.events.to_string(),
                    dec(s.mean_recommendations),
                    dec(s.mean_rules),
                    dec(s.success_rate),
                    dec(s.failure_rate),
                    dec(s.no_prediction_rate),
                ]
            })
        })
        .collect();
    table(
        &mut out,
        &["Repo set", "Strategy", "Events", "Recs avg", "Rules avg", "Success", "Failure", "No prediction"],
        &rows,
        2,
    );

    let _ = writeln!(out, "Paired comparison\n");
    let rows: Vec<Vec<String>> = pooled
        .iter()
        .flat_map(|((set, _, _), pair)| {
            pair.iter().map(move |s| {
                vec![
                    set.clone(),
                    s.strategy.name().to_string(),
                    dec(s.success_rate),
                    dec(s.map_all),
                    dec(s.map_app),
                    s.wins.to_string(),
                    s.draws.to_string(),
                ]
            })
        })
        .collect();
    table(&mut out, &["Repo set", "Strategy", "Success", "MAP_all", "MAP_app", "Wins", "Draws"], &rows, 2);

    let _ = writeln!(out, "Repositories with higher performance\n");
    let mut rows = Vec::new();
    for ((set, a, b), members) in &groups {
        for metric in WinnerMetric::ALL {
            let count = |v: RepoVerdict| {
                members
                    .iter()
                    .filter(|s| s.events > 0 && s.winners.get(&metric) == Some(&v))
                    .count()
            };
            rows.push(vec![
                set.clone(),
                format!("{} vs {}", a.name(), b.name()),
                metric_name(metric).to_string(),
                count(RepoVerdict::A).to_string(),
                count(RepoVerdict::B).to_string(),
                count(RepoVerdict::Draw).to_string(),
                members.iter().filter(|s| s.events > 0).count().to_string(),
            ]);
        }
    }
    table(
        &mut out,
        &["Repo set", "Pair (A vs B)", "Metric", "A better", "B better", "Draws", "Repos"],
        &rows,
        3,
    );
    out
}
