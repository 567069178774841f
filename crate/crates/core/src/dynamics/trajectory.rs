use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::runner::Recorder;
use super::step::StepOutcome;
use crate::reporting::fmt_f64;

/// Fixed trajectory columns; position columns `x0, x1, ...` sit between
/// `step` and `U`.
pub const TRAJECTORY_COLUMNS: [&str; 5] = ["step", "U", "accepted", "log_ratio", "exited_level_set"];

/// Header line (without newline) of a trajectory CSV of dimension `dim`.
pub fn trajectory_header(dim: usize) -> String {
    let mut cols = vec![TRAJECTORY_COLUMNS[0].to_string()];
    cols.extend((0..dim).map(|i| format!("x{i}")));
    cols.extend(TRAJECTORY_COLUMNS[1..].iter().map(|s| s.to_string()));
    cols.join(",")
}

/// Buffers recorded steps as CSV rows.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    thin: u64,
    buf: String,
    rows: usize,
}

impl TrajectoryRecorder {
    pub fn new(dim: usize, thin: u64) -> Self {
        let mut buf = trajectory_header(dim);
        buf.push('\n');
        Self {
            thin: thin.max(1),
            buf,
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_csv(&self) -> &str {
        &self.buf
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, &self.buf)
    }
}

impl Recorder for TrajectoryRecorder {
    fn thin(&self) -> u64 {
        self.thin
    }

    fn record(&mut self, o: &StepOutcome) {
        let s = &o.new_state;
        let _ = write!(self.buf, "{}", s.step);
        for x in &s.position {
            let _ = write!(self.buf, ",{}", fmt_f64(*x));
        }
        let _ = writeln!(
            self.buf,
            ",{},{},{},{}",
            fmt_f64(s.u),
            o.accepted as u8,
            fmt_f64(o.log_ratio),
            o.exited_level_set as u8
        );
        self.rows += 1;
    }
}
