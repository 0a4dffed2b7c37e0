//! Tabular output with byte-stable CSV and JSON rendering.

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }

    pub fn opt_int(x: Option<usize>) -> Self {
        x.map_or(Cell::Empty, |n| Cell::Int(n as i64))
    }

    /// 12 significant digits, '.' separator.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // round-trip through the CSV rendering so both outputs agree
            Cell::Num(x) if x.is_finite() => format_float(*x)
                .parse::<f64>()
                .map_or(Value::Null, Value::from),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace(['\n', '\r'], " "))
    } else {
        s.to_string()
    }
}

/// One named table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// If the row length does not match the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width mismatch in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of a column (None for non-numeric cells).
    pub fn numbers(&self, name: &str) -> Vec<Option<f64>> {
        let Some(c) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| match &r[c] {
                Cell::Num(x) => Some(*x),
                Cell::Int(n) => Some(*n as f64),
                _ => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Tables plus run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(meta: Map<String, Value>, tables: Vec<Table>) -> Self {
        Self { meta, tables }
    }

    /// A single table is plain CSV; several are emitted as sections, each
    /// introduced by a `# <name>` line and separated by a blank line.
    pub fn to_csv(&self) -> String {
        if let [t] = self.tables.as_slice() {
            return t.to_csv();
        }
        self.tables
            .iter()
            .map(|t| format!("# {}\n{}", t.name, t.to_csv()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// `{"meta": …, "rows": [...]}`; each row records its table under `panel`.
    pub fn to_json(&self) -> String {
        let mut rows = Vec::new();
        for t in &self.tables {
            for r in &t.rows {
                let mut obj = Map::new();
                obj.insert("panel".into(), Value::from(t.name.as_str()));
                for (c, cell) in t.columns.iter().zip(r) {
                    obj.insert((*c).into(), cell.json());
                }
                rows.push(Value::Object(obj));
            }
        }
        let mut top = Map::new();
        top.insert("meta".into(), Value::Object(self.meta.clone()));
        top.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(top))
            .expect("json values always serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting() {
        let mut t = Table::new("t", vec!["a", "b", "c", "d"]);
        t.push(vec![
            Cell::Num(0.5849625007211562),
            Cell::Int(3),
            Cell::Text("x, y".into()),
            Cell::Empty,
        ]);
        assert_eq!(t.to_csv(), "a,b,c,d\n5.84962500721e-1,3,\"x, y\",\n");
    }

    #[test]
    fn json_shape() {
        let mut t = Table::new("p", vec!["x"]);
        t.push(vec![Cell::Num(1.0)]);
        let r = Report::new(Map::new(), vec![t]);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["rows"][0]["x"], 1.0);
        assert_eq!(v["rows"][0]["panel"], "p");
    }
}
