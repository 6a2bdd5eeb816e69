//! Result tables and their CSV form.
//!
//! A CSV file starts with `# key: value` metadata lines, then a header row,
//! then one row per sweep point in ascending order. Infinite values are
//! written as `inf`.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// Appends a row. Panics on a width mismatch or a NaN, both of which are
    /// bugs in the producing experiment.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        assert!(row.iter().all(|v| !v.is_nan()), "NaN in result row");
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Sorts rows by the first column.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn read_csv(text: &str) -> Result<Self, csv::Error> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(m) => {
                    let (k, v) = m.split_once(": ").unwrap_or((m, ""));
                    metadata.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            rows.push(record?.iter().map(parse_value).collect());
        }
        Ok(Self { columns, rows, metadata })
    }
}

/// Shortest round-tripping decimal, `inf`/`-inf` for infinities.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_value(s: &str) -> f64 {
    s.trim().parse().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_infinity() {
        let mut t = ResultTable::new(["snr_db", "bound"]);
        t.meta("seed", 3);
        t.push(vec![5.0, f64::INFINITY]);
        t.push(vec![-10.0, 1.234_567_890_123_456_7e-7]);
        t.sort_rows();
        let text = t.to_csv_string();
        assert!(text.starts_with("# seed: 3\nsnr_db,bound\n-10,1.2345678901234566e-7\n5,inf\n"), "{text}");
        let back = ResultTable::read_csv(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn nan_rows_are_rejected() {
        ResultTable::new(["x"]).push(vec![f64::NAN]);
    }

    #[test]
    fn column_lookup() {
        let mut t = ResultTable::new(["a", "b"]);
        t.push(vec![1.0, 2.0]);
        assert_eq!(t.column("b"), Some(vec![2.0]));
        assert_eq!(t.column("c"), None);
    }
}
