use std::io::Write;
use std::path::Path;

use super::FieldState;
use crate::error::{Error, Result};

/// Scalar diagnostics recorded after every step.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub snapshots: Vec<FieldState>,
    pub final_state: Option<FieldState>,
}

impl TimeSeries {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, ..Self::default() }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column `{name}` in {:?}", self.columns))
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let c = self.col(name);
        self.rows.iter().map(|r| r[c]).collect()
    }

    pub fn last(&self, name: &str) -> f64 {
        let c = self.col(name);
        self.rows.last().map_or(f64::NAN, |r| r[c])
    }

    /// Linear interpolation in time; clamps outside the recorded range.
    pub fn value_at(&self, name: &str, t: f64) -> f64 {
        let c = self.col(name);
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.rows[0][c];
        }
        if k >= self.times.len() {
            return self.rows[self.times.len() - 1][c];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let f = (t - t0) / (t1 - t0);
        (1.0 - f) * self.rows[k - 1][c] + f * self.rows[k][c]
    }

    /// Largest value of a column over `t ∈ [from, to]`.
    pub fn max_over(&self, name: &str, from: f64, to: f64) -> f64 {
        let c = self.col(name);
        self.times
            .iter()
            .zip(&self.rows)
            .filter(|(t, _)| **t >= from - 1e-12 && **t <= to + 1e-12)
            .fold(f64::NEG_INFINITY, |m, (_, r)| m.max(r[c]))
    }

    /// Root mean square of a column over `t ∈ [from, to]` (trapezoid in time).
    pub fn rms_over(&self, name: &str, from: f64, to: f64) -> f64 {
        let c = self.col(name);
        let (mut acc, mut span) = (0.0, 0.0);
        for k in 1..self.times.len() {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            if t0 < from - 1e-12 || t1 > to + 1e-12 {
                continue;
            }
            let (a, b) = (self.rows[k - 1][c], self.rows[k][c]);
            acc += 0.5 * (a * a + b * b) * (t1 - t0);
            span += t1 - t0;
        }
        if span > 0.0 {
            (acc / span).sqrt()
        } else {
            f64::NAN
        }
    }

    /// Writes `# `-prefixed header lines, then `t,<columns>` and one row per sample.
    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for line in header {
            writeln!(file, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        let mut head = vec!["t".to_string()];
        head.extend(self.columns.iter().cloned());
        w.write_record(&head)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let mut rec = vec![format!("{t:.10e}")];
            rec.extend(row.iter().map(|v| format!("{v:.10e}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> TimeSeries {
        let mut ts = TimeSeries::new(vec!["a".into()]);
        for k in 0..=10 {
            ts.push(k as f64 * 0.1, vec![k as f64]);
        }
        ts
    }

    #[test]
    fn interpolation_and_extrema() {
        let ts = ramp();
        assert!((ts.value_at("a", 0.25) - 2.5).abs() < 1e-12);
        assert_eq!(ts.value_at("a", 5.0), 10.0);
        assert_eq!(ts.max_over("a", 0.0, 0.5), 5.0);
        assert_eq!(ts.last("a"), 10.0);
    }

    #[test]
    fn csv_round_trip() {
        let ts = ramp();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        ts.write_csv(&p, &["config-hash abc".into()]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config-hash abc"));
        assert_eq!(lines.next(), Some("t,a"));
        assert_eq!(text.lines().count(), 13);
    }
}
