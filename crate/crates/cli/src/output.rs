//! Tables, manifests and their CSV/JSON encodings.

use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats use the shortest representation that parses back to the same
    /// value, switching to exponent notation for very large or small values.
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(format!("{x:?}")),
            Cell::Int(k) => json!(k),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(k: i64) -> Self {
        Cell::Int(k)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Output of one command, possibly cut short by an error.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub seeds: Vec<u64>,
    pub diagnostics: Map<String, Value>,
    pub error: Option<winding_core::Error>,
}

impl Report {
    pub fn new(command: &'static str, columns: &'static [&'static str]) -> Self {
        Report {
            command,
            columns,
            rows: Vec::new(),
            seeds: Vec::new(),
            diagnostics: Map::new(),
            error: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    pub fn schema(&self) -> String {
        format!("winding-lab.{}.v{SCHEMA_VERSION}", self.command)
    }
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub params: Value,
    pub version: &'static str,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    pub diagnostics: Map<String, Value>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(report: &Report, params: Value, wall_time_s: f64) -> Self {
        RunManifest {
            schema: report.schema(),
            command: report.command.to_string(),
            params,
            version: env!("CARGO_PKG_VERSION"),
            seeds: report.seeds.clone(),
            wall_time_s,
            diagnostics: report.diagnostics.clone(),
            error: report.error.as_ref().map(ToString::to_string),
        }
    }
}

fn write_csv<W: Write>(report: &Report, out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# schema: {}", report.schema())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(report.columns)?;
    for row in &report.rows {
        w.write_record(row.iter().map(Cell::to_csv))?;
    }
    w.flush()?;
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    if let Some(e) = &report.error {
        writeln!(out, "# error: {e}")?;
    }
    Ok(())
}

fn json_document(report: &Report, manifest: &RunManifest) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            Value::Object(
                report
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.to_json()))
                    .collect(),
            )
        })
        .collect();
    json!({ "schema": report.schema(), "columns": report.columns, "rows": rows, "manifest": manifest })
}

/// Path of the manifest that accompanies a CSV file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `report` to `out` or stdout. CSV goes with a separate manifest
/// (`<out>.manifest.json`, or stderr when writing to stdout) so that the data
/// file is identical across reruns; JSON embeds the manifest.
pub fn emit(
    report: &Report,
    manifest: &RunManifest,
    format: Format,
    out: Option<&Path>,
) -> std::io::Result<()> {
    let manifest_text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    match (format, out) {
        (Format::Csv, Some(path)) => {
            write_csv(
                report,
                std::io::BufWriter::new(std::fs::File::create(path)?),
            )?;
            std::fs::write(manifest_path(path), manifest_text + "\n")
        }
        (Format::Csv, None) => {
            write_csv(report, std::io::stdout().lock())?;
            eprintln!("{manifest_text}");
            Ok(())
        }
        (Format::Json, path) => {
            let text = serde_json::to_string_pretty(&json_document(report, manifest))
                .map_err(std::io::Error::other)?
                + "\n";
            match path {
                Some(p) => std::fs::write(p, text),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-7, 5e-324] {
            let s = Cell::Float(x).to_csv();
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(Cell::Float(1e-300).to_csv(), "1e-300");
        assert_eq!(Cell::Int(-3).to_csv(), "-3");
        assert_eq!(Cell::from(None::<f64>).to_csv(), "");
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new("demo", &["a", "b"]);
        r.push(vec![1.5.into(), "x,y".into()]);
        r.error = Some(winding_core::Error::Breakdown { degree: 3 });
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# schema: winding-lab.demo.v1\na,b\n1.5,\"x,y\"\n# error: orthogonal polynomial breakdown at degree 3\n"
        );
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("out/w.csv")),
            PathBuf::from("out/w.csv.manifest.json")
        );
    }
}
