//! Report assembly and serialization.
//!
//! Every run produces one table. The CSV form is byte-deterministic for a
//! fixed (config, seed, code version) regardless of thread count; the JSON
//! form adds `wall_time_s` and is therefore the only place timing appears.
//! Floats print as `{:.16e}` — 17 significant digits, enough to round-trip
//! binary64 exactly. Each CSV row ends with the parameter echo and the
//! code version so any row alone suffices to re-run the experiment.

/// Canonical float rendering used across both output formats.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug)]
pub enum Cell {
    F(f64),
    U(u64),
    I(i64),
    S(String),
    B(bool),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::I(v) => v.to_string(),
            // Field separators inside a value would corrupt the table.
            Cell::S(s) => s.replace(',', ";"),
            Cell::B(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::F(v) if v.is_finite() => fmt_f64(*v),
            Cell::F(_) => "null".into(),
            Cell::U(v) => v.to_string(),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => json_string(s),
            Cell::B(b) => b.to_string(),
            Cell::Null => "null".into(),
        }
    }
}

pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Accumulates the `key=value;...` parameter echo carried by every row.
#[derive(Clone, Debug, Default)]
pub struct ParamEcho(Vec<String>);

impl ParamEcho {
    pub fn new() -> ParamEcho {
        ParamEcho(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        self.0.push(format!("{key}={}", value.as_ref().replace(',', " ")));
        self
    }

    pub fn push_u64(&mut self, key: &str, value: u64) -> &mut Self {
        self.push(key, value.to_string())
    }

    pub fn push_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, fmt_f64(value))
    }

    pub fn push_u64s(&mut self, key: &str, values: &[u64]) -> &mut Self {
        let inner: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.push(key, format!("[{}]", inner.join(" ")))
    }

    pub fn finish(&self) -> String {
        self.0.join(";")
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: &'static str,
    pub params: String,
    pub seed: u64,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(c);
        }
        out.push_str(",params,version\n");
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&cell.csv());
            }
            out.push(',');
            out.push_str(&self.params);
            out.push(',');
            out.push_str(VERSION);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, wall_time_s: f64) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!(
            "  \"experiment\": {},\n",
            json_string(self.experiment)
        ));
        out.push_str(&format!("  \"version\": {},\n", json_string(VERSION)));
        out.push_str(&format!("  \"seed\": {},\n", self.seed));
        out.push_str(&format!("  \"params\": {},\n", json_string(&self.params)));
        out.push_str(&format!("  \"wall_time_s\": {},\n", fmt_f64(wall_time_s)));
        let cols: Vec<String> = self.columns.iter().map(|c| json_string(c)).collect();
        out.push_str(&format!("  \"columns\": [{}],\n", cols.join(", ")));
        out.push_str("  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| c.json()).collect();
            out.push_str(&format!("    [{}]", cells.join(", ")));
            out.push_str(if i + 1 < self.rows.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n}\n");
        out
    }
}
