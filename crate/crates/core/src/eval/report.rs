use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::ScenarioReport;
use crate::data::Group;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "model,scenario,metric,value,episodes";

/// One line of the report CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub episodes: usize,
}

impl From<&ScenarioReport> for ReportRow {
    fn from(r: &ScenarioReport) -> Self {
        ReportRow {
            model: r.model.clone(),
            scenario: r.scenario.clone(),
            metric: r.metric.to_string(),
            value: r.mean,
            episodes: r.episodes(),
        }
    }
}

fn scenario_key(s: &str) -> (usize, String) {
    let pos = Group::TESTS.iter().position(|g| g.as_str() == s).unwrap_or(Group::TESTS.len());
    (pos, s.to_string())
}

fn sorted_rows(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| {
        (&a.model, scenario_key(&a.scenario), &a.metric).cmp(&(&b.model, scenario_key(&b.scenario), &b.metric))
    });
    rows
}

fn table(header: &[String], body: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for r in body {
        out.push_str(&line(r));
    }
    out
}

/// Fixed-width table, one row per (model, scenario, metric), 4 decimals.
pub fn render_report(reports: &[ScenarioReport]) -> String {
    let rows = sorted_rows(&reports.iter().map(ReportRow::from).collect::<Vec<_>>());
    let header: Vec<String> = REPORT_HEADER.split(',').map(str::to_string).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.scenario.clone(),
                r.metric.clone(),
                format!("{:.4}", r.value),
                r.episodes.to_string(),
            ]
        })
        .collect();
    table(&header, &body)
}

/// CSV twin of [`render_report`], also used for merged reports.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in sorted_rows(rows) {
        let _ = writeln!(out, "{},{},{},{:.4},{}", r.model, r.scenario, r.metric, r.value, r.episodes);
    }
    out
}

pub fn parse_report_csv(source: &str, text: &str) -> Result<Vec<ReportRow>> {
    let err = |line: usize, message: String| Error::Parse { path: source.to_string(), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(err(1, format!("expected header {REPORT_HEADER}"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(n + 1, format!("expected 5 fields, found {}", f.len())));
        }
        out.push(ReportRow {
            model: f[0].to_string(),
            scenario: f[1].to_string(),
            metric: f[2].to_string(),
            value: f[3].parse().map_err(|_| err(n + 1, format!("invalid value {:?}", f[3])))?,
            episodes: f[4].parse().map_err(|_| err(n + 1, format!("invalid episode count {:?}", f[4])))?,
        });
    }
    Ok(out)
}

/// Model x scenario grid. In every column the two highest values carry a `*`.
pub fn render_comparison(rows: &[ReportRow]) -> String {
    let models: BTreeSet<&str> = rows.iter().map(|r| r.model.as_str()).collect();
    let mut columns: Vec<(String, String)> =
        rows.iter().map(|r| (r.scenario.clone(), r.metric.clone())).collect::<BTreeSet<_>>().into_iter().collect();
    columns.sort_by(|a, b| (scenario_key(&a.0), &a.1).cmp(&(scenario_key(&b.0), &b.1)));
    let mut cells: BTreeMap<(&str, &str, &str), f64> = BTreeMap::new();
    for r in rows {
        cells.insert((&r.model, &r.scenario, &r.metric), r.value);
    }
    let mut marked: BTreeSet<(String, usize)> = BTreeSet::new();
    for (c, (scenario, metric)) in columns.iter().enumerate() {
        let mut vals: Vec<(f64, &str)> = models
            .iter()
            .filter_map(|m| cells.get(&(*m, scenario.as_str(), metric.as_str())).map(|&v| (v, *m)))
            .filter(|(v, _)| v.is_finite())
            .collect();
        vals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        for (_, m) in vals.into_iter().take(2) {
            marked.insert((m.to_string(), c));
        }
    }
    let mut header = vec!["model".to_string()];
    header.extend(columns.iter().map(|(s, m)| format!("{s} ({m})")));
    let body: Vec<Vec<String>> = models
        .iter()
        .map(|m| {
            let mut row = vec![m.to_string()];
            for (c, (scenario, metric)) in columns.iter().enumerate() {
                row.push(match cells.get(&(*m, scenario.as_str(), metric.as_str())) {
                    Some(v) if marked.contains(&(m.to_string(), c)) => format!("{v:.4}*"),
                    Some(v) => format!("{v:.4} "),
                    None => "- ".to_string(),
                });
            }
            row
        })
        .collect();
    table(&header, &body)
}
