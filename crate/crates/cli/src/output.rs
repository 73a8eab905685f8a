//! Rendering of reports as CSV or JSON.
//!
//! Floats are written with 17 significant digits in exponent form, which
//! round-trips every `f64`. CSV writes non-finite values as `NaN`, `inf`,
//! `-inf`; JSON writes them as `null`.

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

/// A command's result: scalar summary entries plus a table.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub config: RunConfig,
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(config: &RunConfig, columns: &[&str]) -> Self {
        Report {
            config: config.clone(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::F(x) => fmt_float(*x),
        Cell::U(x) => x.to_string(),
        Cell::B(x) => x.to_string(),
        Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
    }
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::F(x) if x.is_finite() => fmt_float(*x),
        Cell::F(_) => "null".into(),
        Cell::U(x) => x.to_string(),
        Cell::B(x) => x.to_string(),
        Cell::S(s) => json_string(s),
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Config header, `# key=value` summary lines, column names, rows.
pub fn render_csv(r: &Report) -> String {
    let mut s = r.config.header_lines();
    for (k, v) in &r.summary {
        s.push_str(&format!("# {k}={}\n", csv_cell(v)));
    }
    s.push_str(&r.columns.join(","));
    s.push('\n');
    for row in &r.rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// `{"command", "config", "summary", "rows"}` with one object per row.
pub fn render_json(r: &Report) -> String {
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"command\": {},\n", json_string(&r.config.command)));
    let config = serde_json::to_string(&r.config.to_json()).expect("config serializes");
    s.push_str(&format!("  \"config\": {config},\n"));
    let summary: Vec<String> = r
        .summary
        .iter()
        .map(|(k, v)| format!("{}: {}", json_string(k), json_cell(v)))
        .collect();
    s.push_str(&format!("  \"summary\": {{{}}},\n", summary.join(", ")));
    s.push_str("  \"rows\": [");
    for (i, row) in r.rows.iter().enumerate() {
        let fields: Vec<String> = r
            .columns
            .iter()
            .zip(row)
            .map(|(k, v)| format!("{}: {}", json_string(k), json_cell(v)))
            .collect();
        s.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
        s.push_str(&fields.join(", "));
        s.push('}');
    }
    s.push_str(if r.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> Report {
        let mut c = RunConfig::new("demo");
        c.set("b", "2");
        let mut r = Report::new(&c, &["x", "y", "tag"]);
        r.note("n_star", 5u64);
        r.row(vec![Cell::U(1), Cell::F(0.1), "a,b".into()]);
        r.row(vec![Cell::U(2), Cell::F(f64::NAN), "c".into()]);
        r
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300] {
            let s = fmt_float(x);
            assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let csv = render_csv(&report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# logchain demo");
        assert_eq!(lines[1], "# config: b=2");
        assert_eq!(lines[2], "# n_star=5");
        assert_eq!(lines[3], "x,y,tag");
        assert_eq!(lines[4], "1,1.0000000000000001e-1,\"a,b\"");
        assert_eq!(lines[5], "2,NaN,c");
    }

    #[test]
    fn json_is_valid_and_round_trips_config() {
        let r = report();
        let doc: serde_json::Value = serde_json::from_str(&render_json(&r)).unwrap();
        assert_eq!(doc["rows"][0]["y"].as_f64(), Some(0.1));
        assert!(doc["rows"][1]["y"].is_null());
        assert_eq!(doc["summary"]["n_star"], 5);
        assert_eq!(RunConfig::from_json(&doc).unwrap(), r.config.echoed());
    }
}
