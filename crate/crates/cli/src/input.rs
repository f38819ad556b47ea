// SPDX-License-Identifier: MIT OR Apache-2.0

//! Delimited-text ingestion of one or more numeric columns.

use std::fs;
use std::path::Path;

use hetcusum::series::MIN_LEN;
use hetcusum::Series64;

use crate::CliError;

/// A named numeric column.
#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub series: Series64,
}

/// Picks the most frequent of `,`, `;` and tab on the first non-blank line.
fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut best = (0, b',');
    for d in *b",;\t" {
        let count = first.bytes().filter(|&b| b == d).count();
        if count > best.0 {
            best = (count, d);
        }
    }
    best.1
}

fn is_number(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads the columns selected by `select` (names or 0-based indices); all
/// columns when `select` is empty.
pub fn read_columns(path: &Path, select: &[String]) -> Result<Vec<Column>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_columns(&text, select)
}

pub fn parse_columns(text: &str, select: &[String]) -> Result<Vec<Column>, CliError> {
    let trimmed = text.trim_end();
    if trimmed.is_empty() {
        return Err(CliError::Parse("input is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(trimmed))
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(trimmed.as_bytes());
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    let width = rows[0].1.len();
    let header = rows[0].1.iter().any(|c| !is_number(c));
    let names: Vec<String> = if header {
        rows[0].1.clone()
    } else {
        (0..width).map(|i| format!("column {i}")).collect()
    };
    let data = if header { &rows[1..] } else { &rows[..] };

    let chosen: Vec<usize> = if select.is_empty() {
        (0..width).collect()
    } else {
        select
            .iter()
            .map(|s| {
                if let Some(i) = names.iter().position(|n| n == s) {
                    return Ok(i);
                }
                match s.parse::<usize>() {
                    Ok(i) if i < width => Ok(i),
                    _ => Err(CliError::Usage(format!("no column named or indexed '{s}'"))),
                }
            })
            .collect::<Result<_, _>>()?
    };

    chosen
        .into_iter()
        .map(|j| {
            let mut values = Vec::with_capacity(data.len());
            for (line, cells) in data {
                let cell = cells.get(j).map(String::as_str).unwrap_or("");
                let v = cell.parse::<f64>().map_err(|_| {
                    CliError::Parse(format!(
                        "line {line}, column '{}': cannot parse '{cell}' as a number",
                        names[j]
                    ))
                })?;
                values.push(v);
            }
            if values.len() < MIN_LEN {
                return Err(CliError::Parse(format!(
                    "column '{}': need at least {MIN_LEN} observations, got {}",
                    names[j],
                    values.len()
                )));
            }
            let series = Series64::new(values).map_err(CliError::Core)?;
            Ok(Column {
                name: names[j].clone(),
                series,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sniffs_delimiters() {
        assert_eq!(sniff_delimiter("a;b;c\n1;2;3"), b';');
        assert_eq!(sniff_delimiter("a\tb\n"), b'\t');
        assert_eq!(sniff_delimiter("1.5\n2\n"), b',');
    }

    #[test]
    fn header_and_selection() {
        let text = "x;y\n1;5\n2;6\n3;7\n4;9\n\n\n";
        let cols = parse_columns(text, &["y".into()]).unwrap();
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].name, "y");
        assert_eq!(cols[0].series.values(), &[5.0, 6.0, 7.0, 9.0]);
        let by_index = parse_columns(text, &["0".into()]).unwrap();
        assert_eq!(by_index[0].name, "x");
    }

    #[test]
    fn headerless_single_column() {
        let cols = parse_columns("0\n0\n1\n1\n", &[]).unwrap();
        assert_eq!(cols[0].name, "column 0");
        assert_eq!(cols[0].series.len(), 4);
    }

    #[test]
    fn bad_cell_reports_line() {
        let err = parse_columns("v\n1\n2\nabc\n4\n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn too_short() {
        assert!(parse_columns("1\n2\n3\n", &[]).is_err());
    }
}
