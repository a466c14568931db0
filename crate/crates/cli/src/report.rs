//! Output directory handling: field CSVs, JSON reports, check lists and the summary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use oseen_core::fields::{write_scalar_csv, write_vector_csv, ScalarField, VectorField};
use oseen_core::quadrature::Quadrature;
use oseen_core::verify::CheckResult;
use serde::Serialize;

pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn open(&self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.dir.join(name);
        let f = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let mut w = self.open(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    pub fn scalar(&self, name: &str, quad: &Quadrature, f: &ScalarField) -> Result<()> {
        let mut w = self.open(name)?;
        write_scalar_csv(&mut w, quad, f).with_context(|| format!("writing {name}"))?;
        w.flush()?;
        Ok(())
    }

    pub fn vector(&self, name: &str, quad: &Quadrature, v: &VectorField) -> Result<()> {
        let mut w = self.open(name)?;
        write_vector_csv(&mut w, quad, v).with_context(|| format!("writing {name}"))?;
        w.flush()?;
        Ok(())
    }

    /// `checks.txt` with one line per check and `checks.json` with one record per check.
    pub fn checks(&self, checks: &[CheckResult]) -> Result<()> {
        let mut body = String::new();
        for c in checks {
            body.push_str(&c.to_string());
            body.push('\n');
        }
        self.text("checks.txt", &body)?;
        self.json("checks.json", &checks)
    }
}

/// Ordered `key: value` lines written to `summary.txt`.
#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.lines.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.lines.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            s.push_str(k);
            s.push_str(": ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.txt"), self.render())?;
        Ok(())
    }
}

/// Fixed-width scientific notation used throughout the text reports.
pub fn sci(v: f64) -> String {
    format!("{v:.6e}")
}
