//! Deterministic CSV tables: header row, `.` decimal point, 17 significant
//! digits so every `f64` round-trips.

use std::path::Path;

use crate::error::RunError;

/// Formats with 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    rows: Vec<(Option<String>, Vec<f64>)>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push((None, row));
    }

    /// Row whose first column is a text label.
    pub fn push_labeled(&mut self, label: &str, row: Vec<f64>) {
        debug_assert_eq!(row.len() + 1, self.header.len());
        self.rows.push((Some(label.to_string()), row));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric cells of row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i].1
    }

    /// Values of a named numeric column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let mut idx = self.header.iter().position(|h| h == name)?;
        if self.rows.first().is_some_and(|r| r.0.is_some()) {
            idx = idx.checked_sub(1)?;
        }
        Some(self.rows.iter().map(|r| r.1[idx]).collect())
    }

    fn records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        self.rows.iter().map(|(label, row)| {
            let cells = row.iter().enumerate().map(|(i, &v)| {
                // Integral step counters stay integers.
                if i == 0 && label.is_none() && self.header[0] == "step" {
                    format!("{}", v as u64)
                } else {
                    format_f64(v)
                }
            });
            label.iter().cloned().chain(cells).collect()
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in self.records() {
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        std::fs::write(path, self.to_csv()).map_err(|e| RunError::io(path, e))
    }

    /// Aligned plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut lines = vec![self.header.clone()];
        lines.extend(self.rows.iter().map(|(label, row)| {
            label.iter().cloned().chain(row.iter().map(|v| format!("{v:.10e}"))).collect::<Vec<_>>()
        }));
        let cols = self.header.len();
        let width: Vec<usize> = (0..cols).map(|c| lines.iter().map(|l| l.get(c).map_or(0, |s| s.len())).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for l in lines {
            let cells: Vec<String> = l.iter().enumerate().map(|(c, s)| format!("{s:>w$}", w = width[c])).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["step".into(), "x".into()]);
        t.push(vec![3.0, 0.5]);
        assert_eq!(t.to_csv(), "step,x\n3,5.0000000000000000e-1\n");
        let mut t = Table::new(vec!["axis".into(), "v".into()]);
        t.push_labeled("z", vec![1.0]);
        assert_eq!(t.to_csv(), "axis,v\nz,1.0000000000000000e0\n");
        assert_eq!(t.column("v"), Some(vec![1.0]));
    }
}
