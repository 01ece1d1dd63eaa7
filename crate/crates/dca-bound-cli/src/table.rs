//! The delimited-text output format.
//!
//! A table is a block of `# `-prefixed provenance lines, one tab-separated
//! header row, then tab-separated data rows. Numeric cells are printed with
//! Rust's shortest round-trip float formatting, so emit -> parse -> emit is
//! byte-stable, which is what the golden-file tests pin down.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Num(x as f64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub provenance: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(provenance: Vec<String>, columns: &[&str]) -> Self {
        Self {
            provenance,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Tab-separated text form.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for line in &self.provenance {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    /// Parses the text form back; numeric-looking cells become numbers.
    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut provenance = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# ") {
                if columns.is_some() {
                    return Err(format!("line {}: provenance after header", idx + 1));
                }
                provenance.push(rest.to_string());
            } else if columns.is_none() {
                columns = Some(line.split('\t').map(str::to_string).collect());
            } else {
                let cells: Vec<Cell> = line
                    .split('\t')
                    .map(|c| match c.parse::<f64>() {
                        Ok(x) if c.chars().next().is_some_and(|ch| ch.is_ascii_digit() || ch == '-') => Cell::Num(x),
                        _ => Cell::Text(c.to_string()),
                    })
                    .collect();
                let ncols = columns.as_ref().map_or(0, Vec::len);
                if cells.len() != ncols {
                    return Err(format!(
                        "line {}: {} cells, expected {}",
                        idx + 1,
                        cells.len(),
                        ncols
                    ));
                }
                rows.push(cells);
            }
        }
        Ok(Self {
            provenance,
            columns: columns.ok_or("missing header row")?,
            rows,
        })
    }

    /// JSON structured-record form (canonical bytes via pretty printing).
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Num(x) => serde_json::json!(x),
                        Cell::Text(s) => serde_json::json!(s),
                    })
                    .collect()
            })
            .collect();
        let v = serde_json::json!({
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(
            vec!["tool v0.1.0".into(), "command: quantiles".into()],
            &["k", "q025", "label"],
        );
        t.push_row(vec![1.into(), Cell::Num(0.728481202936006), "a".into()]);
        t.push_row(vec![2.into(), Cell::Num(-1.5e-9), "b".into()]);
        t
    }

    #[test]
    fn tsv_round_trip_is_byte_stable() {
        let t = sample();
        let text = t.to_tsv();
        let back = Table::from_tsv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_tsv(), text);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(Table::from_tsv("a\tb\n1\n").is_err());
        assert!(Table::from_tsv("").is_err());
    }

    #[test]
    fn json_contains_rows() {
        let j = sample().to_json();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["columns"][0], "k");
        assert_eq!(v["rows"][0][1], 0.728481202936006);
    }
}
