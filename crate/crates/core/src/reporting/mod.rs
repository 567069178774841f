//! CSV, JSON and SVG output for curves and reports.
//!
//! All writers are deterministic: identical inputs produce identical bytes.

mod csv;
mod json;
mod svg;

pub use csv::{csv_string, parse_csv, read_csv, write_csv, CsvTable};
pub use json::{to_sorted_json, write_json};
pub use svg::{svg_string, write_svg_chart, SVG_HEIGHT, SVG_WIDTH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportingError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid series `{name}`: {reason}")]
    InvalidSeries { name: String, reason: String },
    #[error("series do not share one x grid; write them to separate files")]
    GridMismatch,
    #[error("malformed csv at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ReportingError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One named curve with axis metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

impl CurveSeries {
    /// Builds a series; points must be finite with strictly increasing x.
    pub fn new(
        name: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        points: Vec<(f64, f64)>,
    ) -> Result<Self, ReportingError> {
        let name = name.into();
        let invalid = |reason: &str| ReportingError::InvalidSeries {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(invalid("points must be finite"));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(invalid("x must be strictly increasing"));
        }
        Ok(Self {
            name,
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        })
    }

    /// Series indexed by `1..=values.len()`.
    pub fn indexed(
        name: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        values: &[f64],
    ) -> Result<Self, ReportingError> {
        let pts = values.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect();
        Self::new(name, x_label, y_label, pts)
    }

    pub fn with_scales(mut self, x: Scale, y: Scale) -> Self {
        self.x_scale = x;
        self.y_scale = y;
        self
    }
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of the output
        return "0".to_string();
    }
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn series_validation() {
        assert!(CurveSeries::new("a", "x", "y", vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(CurveSeries::new("a", "x", "y", vec![(0.0, f64::NAN)]).is_err());
        assert!(CurveSeries::new("a", "x", "y", vec![]).is_ok());
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(3.0), "3");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    proptest! {
        #[test]
        fn float_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let back: f64 = fmt_f64(v).parse().unwrap();
            prop_assert!(back == v);
        }
    }
}
