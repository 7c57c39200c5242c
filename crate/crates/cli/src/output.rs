//! Deterministic result emission: CSV with a header row and
//! 17-significant-digit decimals, plus a JSON metadata sidecar. Identical
//! config + seed must produce byte-identical files, so nothing time- or
//! host-dependent is written.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "column count mismatch");
        self.rows.push(row);
    }

    pub fn to_string(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_string())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// JSON sidecar next to a CSV: seeds, config hash, tolerances, caps.
pub fn write_sidecar(path: &Path, meta: serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn out_path(dir: &str, name: &str) -> PathBuf {
    Path::new(dir).join(name)
}
