//! Output files: CSV tables, `key: value` summaries and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `precision` significant digits in scientific notation.
pub fn format_num(v: f64, precision: usize) -> String {
    if v.is_finite() {
        format!("{:.*e}", precision.saturating_sub(1), v)
    } else {
        format!("{v}")
    }
}

impl Cell {
    pub fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(v) => format_num(*v, precision),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, precision: usize) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.render(precision)))?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

/// Ordered `key: value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, Cell)>,
}

impl Summary {
    pub fn put(&mut self, key: &str, v: impl Into<Cell>) {
        self.entries.push((key.to_string(), v.into()));
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self, precision: usize) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}: {}\n", v.render(precision)))
            .collect()
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: Summary,
    pub warnings: Vec<String>,
    /// `(stage, seconds)`.
    pub timings: Vec<(String, f64)>,
}

/// Writes a file and returns `(name, sha256)`.
pub fn write_hashed(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<(String, String)> {
    fs::write(dir.join(name), bytes)?;
    Ok((name.to_string(), hex::encode(Sha256::digest(bytes))))
}

/// Writes the tables and `summary.txt`; returns the hashed file list.
pub fn write_artifacts(dir: &Path, a: &Artifacts, precision: usize) -> io::Result<Vec<(String, String)>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &a.tables {
        files.push(write_hashed(dir, &format!("{}.csv", t.name), &t.to_csv(precision)?)?);
    }
    files.push(write_hashed(dir, "summary.txt", a.summary.render(precision).as_bytes())?);
    Ok(files)
}

/// Run record written next to the outputs, also when the run failed.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    /// Normalised configuration that reproduces the run.
    pub config_echo: String,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub timings: Vec<(String, f64)>,
    pub files: Vec<(String, String)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s += &format!("experiment: {}\n", self.experiment);
        s += &format!("version: {}\n", self.version);
        s += &format!("status: {}\n", self.status);
        s += &format!("exit_code: {}\n", self.exit_code);
        if let Some(e) = &self.error {
            s += &format!("error: {}\n", e.replace('\n', " "));
        }
        for w in &self.warnings {
            s += &format!("warning: {}\n", w.replace('\n', " "));
        }
        for (stage, t) in &self.timings {
            s += &format!("time.{stage}: {t:.6}\n");
        }
        for (name, hash) in &self.files {
            s += &format!("file: {name} sha256={hash}\n");
        }
        s += "config:\n";
        for line in self.config_echo.lines() {
            s += &format!("  {line}\n");
        }
        s
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.txt");
        fs::write(&path, self.render())?;
        Ok(path)
    }
}
