//! Table rendering and atomic output.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One CSV row: either numbers in column order or a failed grid point.
#[derive(Debug, Clone)]
pub enum Row {
    Values(Vec<f64>),
    Error { key: f64, message: String },
}

/// Result of one subcommand, renderable as versioned CSV or as JSON.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
    pub json: Value,
}

/// JSON for an extended real, matching the library's "inf"/"nan" strings.
pub fn ext(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# raresens {} v1\n{}\n", self.name, self.columns.join(","));
        for row in &self.rows {
            match row {
                Row::Values(v) => {
                    let cells: Vec<String> = v.iter().map(|x| number(*x)).collect();
                    out.push_str(&cells.join(","));
                }
                Row::Error { key, message } => {
                    out.push_str(&format!("# error,{},{}", number(*key), quote(message)));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Table {
            name: "demo",
            columns: vec!["M", "x"],
            rows: vec![
                Row::Values(vec![0.5, f64::NAN]),
                Row::Error { key: 2.0, message: "bad, very".into() },
            ],
            json: Value::Null,
        };
        assert_eq!(t.to_csv(), "# raresens demo v1\nM,x\n0.5,NaN\n# error,2,\"bad, very\"\n");
    }

    #[test]
    fn extended_reals() {
        assert_eq!(ext(f64::INFINITY), Value::from("inf"));
        assert_eq!(ext(1.5), Value::from(1.5));
        assert_eq!(number(f64::NEG_INFINITY), "-inf");
    }
}
