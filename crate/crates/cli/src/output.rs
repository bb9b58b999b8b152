//! CSV tables, atomic file writes, run manifests and SVG plots.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SERIES_HEADER: [&str; 5] = ["x", "y", "se", "n", "flag"];
pub const PINNING_HEADER: [&str; 5] = ["h", "f", "method", "domain", "converged"];
pub const FIT_HEADER: [&str; 6] = ["slope", "intercept", "ci_low", "ci_high", "r_squared", "n_boot"];
pub const SELFTEST_HEADER: [&str; 4] = ["check", "error", "tolerance", "passed"];

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// `(x, y, se)` triples when the first three columns are numeric.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| match (&r[0], &r[1], r.get(2)) {
                (Cell::Num(x), Cell::Num(y), Some(Cell::Num(s))) => Some((*x, *y, *s)),
                (Cell::Num(x), Cell::Num(y), _) => Some((*x, *y, 0.0)),
                _ => None,
            })
            .collect()
    }
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub seed_scheme: &'static str,
    pub started: String,
    pub finished: String,
    pub exit_status: i32,
    pub warnings: Vec<String>,
    pub results: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

pub const SEED_SCHEME: &str = "ChaCha8Rng::seed_from_u64(h) with h = splitmix64(splitmix64(splitmix64(master ^ purpose_tag) ^ realization) ^ index); \
    field slice k of realization r: purpose field-slice, index k; path batch b of realization r: purpose path-sampling, index b; \
    bootstrap replicates: purpose bootstrap";

/// Write `name` into `dir` and return its manifest record.
pub fn emit(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<OutputRecord> {
    write_atomic(&dir.join(name), bytes)?;
    Ok(OutputRecord { file: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() })
}

pub fn manifest_path(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{command}.json"))
}

/// Scatter plot with error bars; log-log axes when every point is positive.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64, f64)]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<_> = points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).copied().collect();
    let log = !pts.is_empty() && pts.iter().all(|p| p.0 > 0.0 && p.1 > 0.0 && p.1 - p.2 > 0.0);
    let tx = |v: f64| if log { v.ln() } else { v };
    let mut xs: Vec<f64> = pts.iter().map(|p| tx(p.0)).collect();
    let mut ys: Vec<f64> = pts.iter().flat_map(|p| [tx(p.1 - p.2), tx(p.1 + p.2)]).collect();
    if xs.is_empty() {
        xs.push(0.0);
        ys.push(0.0);
    }
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |v: f64| m + (tx(v) - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |v: f64| h - m - (tx(v) - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        w / 2.0,
        escape(title),
        h - m,
        w - m,
        h - m,
        h - m,
        w / 2.0,
        h - 16.0,
        escape(&format!("{x_label}{}", if log { " (log)" } else { "" })),
        h / 2.0,
        h / 2.0,
        escape(&format!("{y_label}{}", if log { " (log)" } else { "" })),
    );
    for &(x, y, e) in &pts {
        let (cx, cy) = (px(x), py(y));
        if e > 0.0 {
            s += &format!(
                "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"#555\"/>\n",
                py(y - e),
                py(y + e)
            );
        }
        s += &format!("<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"3\" fill=\"#1f5fa8\"/>\n");
    }
    s += "</svg>\n";
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
