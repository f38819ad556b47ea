// SPDX-License-Identifier: MIT OR Apache-2.0

//! Report rendering.

use std::io::Write;

use hetcusum::montecarlo::REPORT_LEVELS;
use hetcusum::{MethodId, TestReport};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write output: {e}"))
}

#[derive(Serialize)]
struct ReportRow<'a> {
    label: &'a str,
    method: MethodId,
    n: usize,
    statistic: f64,
    p_value: f64,
    #[serde(rename = "cv_0.10")]
    cv10: Option<f64>,
    #[serde(rename = "cv_0.05")]
    cv05: Option<f64>,
    #[serde(rename = "cv_0.01")]
    cv01: Option<f64>,
    spectrum_source: &'a str,
    spectrum_terms: usize,
    warnings: String,
}

pub fn write_reports<W: Write>(
    mut w: W,
    reports: &[TestReport],
    format: Format,
) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, reports).map_err(io)?;
            writeln!(w).map_err(io)
        }
        Format::Csv => {
            let mut out = csv::Writer::from_writer(w);
            for r in reports {
                out.serialize(ReportRow {
                    label: r.label.as_deref().unwrap_or(""),
                    method: r.method,
                    n: r.n,
                    statistic: r.statistic,
                    p_value: r.p_value,
                    cv10: r.critical_value(REPORT_LEVELS[0]),
                    cv05: r.critical_value(REPORT_LEVELS[1]),
                    cv01: r.critical_value(REPORT_LEVELS[2]),
                    spectrum_source: r.spectrum_source.name(),
                    spectrum_terms: r.spectrum_terms,
                    warnings: r.warnings.join("; "),
                })
                .map_err(io)?;
            }
            out.flush().map_err(io)
        }
        Format::Table => {
            let labels = distinct_labels(reports);
            let text = if labels.len() > 1 {
                pvalue_matrix(reports, &labels)
            } else {
                detail_table(reports)
            };
            w.write_all(text.as_bytes()).map_err(io)
        }
    }
}

fn distinct_labels(reports: &[TestReport]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for r in reports {
        let l = r.label.clone().unwrap_or_default();
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    labels
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|c| c.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j == 0 {
                    format!("{c:<w$}", w = widths[j])
                } else {
                    format!("{c:>w$}", w = widths[j])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn cv(r: &TestReport, alpha: f64) -> String {
    r.critical_value(alpha)
        .map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn detail_table(reports: &[TestReport]) -> String {
    let mut rows = vec![vec![
        "method".to_string(),
        "statistic".into(),
        "p_value".into(),
        "cv_0.10".into(),
        "cv_0.05".into(),
        "cv_0.01".into(),
        "spectrum".into(),
        "m".into(),
    ]];
    for r in reports {
        rows.push(vec![
            r.method.to_string(),
            format!("{:.6}", r.statistic),
            format!("{:.4}", r.p_value),
            cv(r, 0.10),
            cv(r, 0.05),
            cv(r, 0.01),
            r.spectrum_source.name().into(),
            r.spectrum_terms.to_string(),
        ]);
    }
    align(&rows)
}

/// Series as rows, methods as columns.
fn pvalue_matrix(reports: &[TestReport], labels: &[String]) -> String {
    let mut methods: Vec<MethodId> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut rows = vec![std::iter::once("series".to_string())
        .chain(methods.iter().map(|m| m.to_string()))
        .collect::<Vec<_>>()];
    for l in labels {
        let mut row = vec![l.clone()];
        for m in &methods {
            let cell = reports
                .iter()
                .find(|r| r.label.as_deref().unwrap_or("") == l && r.method == *m)
                .map_or_else(|| "-".into(), |r| format!("{:.4}", r.p_value));
            row.push(cell);
        }
        rows.push(row);
    }
    align(&rows)
}

/// `alpha,value` pairs.
pub fn write_critical_values<W: Write>(
    mut w: W,
    values: &[(f64, f64)],
    format: Format,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Row {
        alpha: f64,
        value: f64,
    }
    let rows: Vec<Row> = values
        .iter()
        .map(|&(alpha, value)| Row { alpha, value })
        .collect();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows).map_err(io)?;
            writeln!(w).map_err(io)
        }
        Format::Csv => {
            let mut out = csv::Writer::from_writer(w);
            for r in &rows {
                out.serialize(r).map_err(io)?;
            }
            out.flush().map_err(io)
        }
        Format::Table => {
            let mut t = vec![vec!["alpha".to_string(), "value".into()]];
            t.extend(
                rows.iter()
                    .map(|r| vec![r.alpha.to_string(), format!("{:.6}", r.value)]),
            );
            w.write_all(align(&t).as_bytes()).map_err(io)
        }
    }
}
