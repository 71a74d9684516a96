//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting, so
//! output bytes depend only on the values.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bdlab_core::integrands::Integrand;
use bdlab_core::{ElementaryIntegrand, PathEnsemble};
use serde::Serialize;

/// Collects the files a command writes below its output directory.
#[derive(Debug)]
pub struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// `path,t_0,...,t_{2^n}`, optionally prefixed by a `component` column
    /// with one block of rows per named part.
    pub fn ensembles(&mut self, name: &str, parts: &[(&str, &PathEnsemble)]) -> Result<()> {
        let mut w = self.create(name)?;
        let first = parts.first().context("nothing to write")?.1;
        let labelled = parts.len() > 1 || !parts[0].0.is_empty();
        header(&mut w, first.grid().steps(), labelled)?;
        for (label, ens) in parts {
            for (p, row) in ens.rows().enumerate() {
                if labelled {
                    write!(w, "{label},")?;
                }
                write!(w, "{p}")?;
                for x in row {
                    write!(w, ",{x}")?;
                }
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// The integrand on its own level, in the ensemble layout: column `t_i`
    /// holds the value on `(t_{i-1}, t_i]` and `t_0` is zero.
    pub fn integrand(&mut self, name: &str, h: &ElementaryIntegrand) -> Result<()> {
        let mut w = self.create(name)?;
        header(&mut w, h.cells(), false)?;
        for p in 0..h.n_paths() {
            write!(w, "{p},0")?;
            for x in h.coeff_row(p) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Arbitrary CSV with a fixed header.
    pub fn table(&mut self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.create(name)?;
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plot-ready `level,quantity,value,stderr`.
    pub fn quantities(&mut self, name: &str, rows: &[Quantity]) -> Result<()> {
        let rows: Vec<Vec<String>> = rows.iter().map(Quantity::cells).collect();
        self.table(name, "level,quantity,value,stderr", &rows)
    }
}

fn header(w: &mut impl Write, steps: usize, labelled: bool) -> Result<()> {
    if labelled {
        write!(w, "component,")?;
    }
    write!(w, "path")?;
    for i in 0..=steps {
        write!(w, ",t_{i}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// One row of a `level,quantity,value,stderr` table; blank level for
/// level-free quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub level: Option<u32>,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl Quantity {
    pub fn new(level: Option<u32>, quantity: impl Into<String>, value: f64, stderr: Option<f64>) -> Self {
        Self {
            level,
            quantity: quantity.into(),
            value,
            stderr,
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.level.map(|l| l.to_string()).unwrap_or_default(),
            csv_field(&self.quantity),
            self.value.to_string(),
            self.stderr.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Quotes a field that contains a comma or a quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
