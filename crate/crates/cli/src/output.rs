//! Deterministic artifact emission: CSV tables, JSON reports and the MANIFEST.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Every float is written with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table with a fixed header, written as comma-separated text.
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells.join(","));
    }

    pub fn push_nums(&mut self, cells: impl IntoIterator<Item = f64>) {
        self.push(cells.into_iter().map(num).collect());
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Column names `prefix_1, …, prefix_d`.
pub fn indexed(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}_{i}"))
}

struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with fixed-width floats; non-finite values become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts in memory and writes them, plus a MANIFEST, in name order.
pub struct Artifacts {
    dir: PathBuf,
    command: String,
    inputs: BTreeMap<String, String>,
    files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>, command: &str) -> Self {
        Artifacts { dir: dir.into(), command: command.into(), inputs: BTreeMap::new(), files: BTreeMap::new() }
    }

    /// Record an input by file name and content checksum.
    pub fn input(&mut self, path: &Path, content: &[u8]) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.inputs.insert(name, sha256_hex(content));
    }

    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content);
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let s = to_json(value)?;
        self.add(name, s);
        Ok(())
    }

    pub fn write(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut manifest = format!("ris {}\ncommand {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for (name, sum) in &self.inputs {
            manifest.push_str(&format!("input {name} sha256:{sum}\n"));
        }
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
            manifest.push_str(&format!("output {name} sha256:{}\n", sha256_hex(content.as_bytes())));
            written.push(path);
        }
        let path = self.dir.join("MANIFEST");
        fs::write(&path, manifest).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

/// Read the named columns of a CSV file; `prefix` selects `prefix_1, prefix_2, …` in order.
pub struct CsvColumns {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvColumns {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = match lines.next() {
            Some(h) => h.split(',').map(|c| c.trim().to_string()).collect(),
            None => bail!("empty CSV"),
        };
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("CSV row {} is not numeric", k + 2))?;
            if row.len() != header.len() {
                bail!("CSV row {} has {} fields, header has {}", k + 2, row.len(), header.len());
            }
            rows.push(row);
        }
        Ok(CsvColumns { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name).with_context(|| format!("CSV has no `{name}` column"))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn vectors(&self, prefix: &str) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<usize> = indexed(prefix, self.header.len())
            .map_while(|name| self.header.iter().position(|h| *h == name))
            .collect();
        if cols.is_empty() {
            bail!("CSV has no `{prefix}_1` column");
        }
        Ok(self.rows.iter().map(|r| cols.iter().map(|&i| r[i]).collect()).collect())
    }
}
