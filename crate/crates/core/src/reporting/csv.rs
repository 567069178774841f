use std::path::Path;

use super::{fmt_f64, CurveSeries, ReportingError};

/// Parsed CSV: header names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Renders series sharing one x grid as a single table: the first column is
/// the x label of the first series, then one column per series name.
pub fn csv_string(series: &[CurveSeries]) -> Result<String, ReportingError> {
    let Some(first) = series.first() else {
        return Ok("x\n".to_string());
    };
    for s in &series[1..] {
        if s.points.len() != first.points.len()
            || s.points
                .iter()
                .zip(&first.points)
                .any(|(a, b)| a.0.to_bits() != b.0.to_bits())
        {
            return Err(ReportingError::GridMismatch);
        }
    }
    let mut out = String::new();
    out.push_str(&escape(&first.x_label));
    for s in series {
        out.push(',');
        out.push_str(&escape(&s.name));
    }
    out.push('\n');
    for (i, (x, _)) in first.points.iter().enumerate() {
        out.push_str(&fmt_f64(*x));
        for s in series {
            out.push(',');
            out.push_str(&fmt_f64(s.points[i].1));
        }
        out.push('\n');
    }
    Ok(out)
}

fn escape(name: &str) -> String {
    name.chars()
        .map(|c| if c == ',' || c == '\n' || c == '\r' { '_' } else { c })
        .collect()
}

pub fn write_csv(series: &[CurveSeries], path: &Path) -> Result<(), ReportingError> {
    let s = csv_string(series)?;
    std::fs::write(path, s).map_err(|e| ReportingError::io(path, e))
}

/// Parses the numeric CSV produced by [`csv_string`] (or the trajectory
/// recorder).
pub fn parse_csv(text: &str) -> Result<CsvTable, ReportingError> {
    let mut lines = text.lines();
    let header: Vec<String> = match lines.next() {
        Some(h) if !h.is_empty() => h.split(',').map(str::to_string).collect(),
        _ => {
            return Err(ReportingError::Parse {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| ReportingError::Parse {
                    line: lineno,
                    reason: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != header.len() {
            return Err(ReportingError::Parse {
                line: lineno,
                reason: format!("expected {} fields, found {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn read_csv(path: &Path) -> Result<CsvTable, ReportingError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReportingError::io(path, e))?;
    parse_csv(&text)
}
