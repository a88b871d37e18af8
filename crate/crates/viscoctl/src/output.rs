//! CSV artifacts and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// 17 significant digits, round-trip exact.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(num).collect());
    }

    pub fn push_raw(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Two-column `field,value` table.
pub struct Report {
    table: CsvTable,
}

impl Report {
    pub fn new() -> Self {
        Self {
            table: CsvTable::new(["field", "value"]),
        }
    }

    pub fn number(&mut self, field: impl Into<String>, v: f64) {
        self.table.push_raw(vec![field.into(), num(v)]);
    }

    pub fn text(&mut self, field: impl Into<String>, v: impl Into<String>) {
        self.table.push_raw(vec![field.into(), v.into()]);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.table.write(path)
    }
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// `manifest.txt`: tool version, subcommand and the config text as read.
    pub fn write_manifest(&self, command: &str, config_source: &str) -> Result<()> {
        let text = format!(
            "tool = \"viscoctl {}\"\ncommand = \"{command}\"\n\n# config\n{config_source}",
            env!("CARGO_PKG_VERSION")
        );
        fs::write(self.path("manifest.txt"), text).context("writing manifest")
    }
}
