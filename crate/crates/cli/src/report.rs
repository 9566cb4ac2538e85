use std::io::{self, Write};

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    /// not available for these parameters
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => Value::String(num(*v)),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A table plus the parameters that produced it and any scalar results.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub parameters: Vec<(&'static str, String)>,
    pub summary: Vec<(&'static str, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &'static str, parameters: Vec<(&'static str, String)>, columns: Vec<&'static str>) -> Self {
        Report {
            command,
            parameters,
            summary: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# gbm-hitfun {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        for (k, v) in &self.parameters {
            writeln!(w, "# {k} = {v}")?;
        }
        for (k, v) in &self.summary {
            writeln!(w, "# result {k} = {}", v.csv())?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let parameters: Map<String, Value> = self
            .parameters
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
            .collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("program".into(), Value::String("gbm-hitfun".into()));
        top.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        top.insert("command".into(), Value::String(self.command.into()));
        top.insert("parameters".into(), Value::Object(parameters));
        top.insert("summary".into(), Value::Object(summary));
        top.insert(
            "columns".into(),
            Value::Array(self.columns.iter().map(|c| Value::String(c.to_string())).collect()),
        );
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }

    pub fn write_json(&self, w: &mut impl Write) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, &self.to_json())?;
        writeln!(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("density", vec![("mu", "0.5".into())], vec!["t", "q"]);
        r.rows.push(vec![Cell::Num(1.0), Cell::Num(0.1)]);
        r.summary.push(("constant", Cell::Num(2.0)));
        r
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# gbm-hitfun"));
        assert_eq!(lines[1], "# mu = 0.5");
        assert_eq!(lines[2], "# result constant = 2.0000000000000000e0");
        assert_eq!(lines[3], "t,q");
        assert_eq!(lines[4], "1.0000000000000000e0,1.0000000000000001e-1");
    }

    #[test]
    fn json_numbers_are_strings() {
        let v = sample().to_json();
        assert_eq!(v["rows"][0]["q"], Value::String("1.0000000000000001e-1".into()));
        assert_eq!(v["parameters"]["mu"], Value::String("0.5".into()));
    }

    #[test]
    fn formatted_numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, 1.7976931348623157e308, -4.9e-324] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
