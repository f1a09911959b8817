use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 17 significant digits; `inf`, `-inf` and `nan` spelled out.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number, or a string for values JSON cannot hold.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(float(x)))
}

/// A line chart: named series of `(x, y)` points.
#[derive(Clone, Debug, Default)]
pub struct Plot {
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Map<String, Value>,
    pub passed: bool,
    pub plot: Option<Plot>,
}

impl Outcome {
    pub fn new(header: Vec<&'static str>) -> Self {
        Outcome { header, rows: Vec::new(), summary: Map::new(), passed: true, plot: None }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    pub fn set_f(&mut self, key: &str, x: f64) {
        self.summary.insert(key.to_string(), num(x));
    }

    /// Records a contract and folds it into `passed`.
    pub fn contract(&mut self, key: &str, ok: bool) {
        self.passed &= ok;
        self.set(key, ok);
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Argument(format!("cannot write {}: {e}", path.display()))
}

/// Writes `<name>.csv`, `<name>.summary.json` and, if asked, `<name>.svg`.
/// Returns the summary path.
pub fn write_outcome(out: &Path, name: &str, outcome: &Outcome, plots: bool) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let csv_path = out.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| io(&csv_path, e))?;
    w.write_record(&outcome.header).map_err(|e| io(&csv_path, e))?;
    for row in &outcome.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(|e| io(&csv_path, e))?;
    }
    w.flush().map_err(|e| io(&csv_path, e))?;

    let mut summary = outcome.summary.clone();
    summary.insert("passed".into(), Value::Bool(outcome.passed));
    let json_path = out.join(format!("{name}.summary.json"));
    let text = serde_json::to_string_pretty(&Value::Object(summary)).map_err(|e| io(&json_path, e))?;
    fs::write(&json_path, text + "\n").map_err(|e| io(&json_path, e))?;

    if plots {
        if let Some(p) = &outcome.plot {
            let svg_path = out.join(format!("{name}.svg"));
            fs::write(&svg_path, svg(p)).map_err(|e| io(&svg_path, e))?;
        }
    }
    Ok(json_path)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Hand-emitted SVG line chart with axes and a legend.
pub fn svg(p: &Plot) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let tx = |x: f64| if p.log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
    let pts = p.series.iter().flat_map(|(_, s)| s.iter()).filter(|(x, y)| tx(*x).is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    y0 = y0.min(0.0);
    if y1 - y0 < 1e-300 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (tx(x) - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        b = h - m,
        r = w - m
    );
    let xl = if p.log_x { format!("log10 {}", p.x_label) } else { p.x_label.clone() };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, escape(&xl));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&p.y_label)
    );
    for (v, x, y, anchor) in [
        (x0, m, h - m + 16.0, "start"),
        (x1, w - m, h - m + 16.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    for (v, y) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, m - 4.0, y + 4.0);
    }
    for (i, (name, series)) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = series
            .iter()
            .filter(|(x, y)| tx(*x).is_finite() && y.is_finite())
            .enumerate()
            .map(|(j, &(x, y))| format!("{}{:.2} {:.2}", if j == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        let ly = m + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#, w - m, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
