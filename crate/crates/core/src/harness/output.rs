//! CSV files, quantile summaries and run metadata.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::Result;

/// Box-plot summary: min, 25th percentile, median, 75th percentile, max.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    /// Linear interpolation between order statistics at rank `p·(n−1)`.
    /// NaNs are dropped; `None` when nothing is left.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Quantiles { min: v[0], q25: at(0.25), median: at(0.5), q75: at(0.75), max: v[v.len() - 1] })
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Buffered writer for `dir/name`, creating `dir` if needed.
pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `metadata.toml`: config hash, effective seed and worker count, extra
/// facts about the run, then the config with every default filled in.
#[derive(Clone, Debug)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub notes: Vec<(String, String)>,
    pub resolved: String,
}

impl Metadata {
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("metadata.toml");
        let mut out = create(dir, "metadata.toml")?;
        writeln!(out, "command = {:?}", self.command)?;
        writeln!(out, "config_hash = {:?}", self.config_hash)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "workers = {}", self.workers)?;
        writeln!(out, "crate_version = {:?}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "\n[notes]")?;
        for (k, v) in &self.notes {
            writeln!(out, "{k} = {v:?}")?;
        }
        writeln!(out, "\n# resolved configuration\n[resolved]")?;
        for line in self.resolved.lines() {
            // nest every table under [resolved]
            if let Some(rest) = line.strip_prefix('[') {
                writeln!(out, "[resolved.{rest}")?;
            } else {
                writeln!(out, "{line}")?;
            }
        }
        out.flush()?;
        Ok(path)
    }
}

/// Escapes a free-text CSV field.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
