//! CSV traces and log-scale SVG plots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    /// A value that was not measured this row; written as an empty cell.
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, Cell::Float)
    }

    fn render(&self) -> Option<String> {
        match *self {
            Cell::Int(v) => Some(v.to_string()),
            // Shortest round-trip representation, so output is reproducible.
            Cell::Float(v) if v.is_finite() => Some(format!("{v:e}")),
            Cell::Float(_) => None,
            Cell::Missing => Some(String::new()),
        }
    }
}

/// A row type with a fixed header.
pub trait TraceRow {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// Incremental CSV writer that flushes after every row, so a failed run
/// leaves the rows it completed on disk.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
    rows: usize,
}

impl TraceWriter<File> {
    pub fn create<R: TraceRow>(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        TraceWriter::new::<R>(file, path)
    }
}

impl<W: Write> TraceWriter<W> {
    pub fn new<R: TraceRow>(sink: W, path: &Path) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        let path = path.to_path_buf();
        inner
            .write_record(R::header())
            .map_err(|e| csv_error(&path, e))?;
        Ok(TraceWriter {
            inner,
            path,
            rows: 0,
        })
    }

    pub fn write<R: TraceRow>(&mut self, row: &R) -> Result<()> {
        let header = R::header();
        let cells = row.cells();
        debug_assert_eq!(cells.len(), header.len());
        let mut record = Vec::with_capacity(cells.len());
        for (cell, name) in cells.iter().zip(header) {
            match cell.render() {
                Some(s) => record.push(s),
                None => {
                    return Err(Error::Numeric(format!(
                        "column `{name}` in trace row {} of {} is {:?}",
                        self.rows + 1,
                        self.path.display(),
                        cell
                    )))
                }
            }
        }
        self.inner
            .write_record(&record)
            .map_err(|e| csv_error(&self.path, e))?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path;
        self.inner
            .into_inner()
            .map_err(|e| Error::io(&path, e.into_error()))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Render rows to an in-memory CSV string.
pub fn to_csv_string<R: TraceRow>(rows: &[R]) -> Result<String> {
    let mut w = TraceWriter::new::<R>(Vec::new(), Path::new("<memory>"))?;
    for r in rows {
        w.write(r)?;
    }
    let bytes = w.into_inner()?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv<R: TraceRow>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = TraceWriter::create::<R>(path)?;
    for r in rows {
        w.write(r)?;
    }
    Ok(())
}

/// A named polyline for [`log_plot_svg`].
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Standalone SVG with a linear x axis and a log10 y axis. Nonpositive y
/// values are skipped.
pub fn log_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0)
    };
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut e0, mut e1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        e0 = e0.min(y.log10());
        e1 = e1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, e0, e1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (e0, e1) = (e0.floor(), e1.ceil().max(e0.floor() + 1.0));
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (e1 - y.log10()) / (e1 - e0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let mut e = e0;
    while e <= e1 + 1e-9 {
        let y = sy(10f64.powf(e));
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            y + 4.0,
            e as i64
        );
        e += 1.0;
    }
    for k in 0..=4 {
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let x = sx(xv);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph + 18.0,
            trim_number(xv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
        let lx = MARGIN_L + pw - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
