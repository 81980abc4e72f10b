//! CSV tables with key=value metadata sidecars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::RunConfig;

/// 17 significant digits, enough to round-trip an f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
    /// Extra metadata beyond the configuration.
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, header: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            header: header.into(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    /// Writes `<dir>/<name>` and `<dir>/<name>.meta`; returns the table path.
    pub fn write(&self, dir: &Path, command: &str, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join(&self.name);
        let mut body = String::with_capacity(64 * (self.rows.len() + 1));
        body.push_str(&self.header);
        body.push('\n');
        for r in &self.rows {
            body.push_str(r);
            body.push('\n');
        }
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;

        let meta_path = dir.join(format!("{}.meta", self.name));
        let mut m = fs::File::create(&meta_path)
            .with_context(|| format!("writing {}", meta_path.display()))?;
        writeln!(m, "command={command}")?;
        writeln!(m, "version={}", env!("CARGO_PKG_VERSION"))?;
        writeln!(m, "rng={}", gmsurf::ensemble::RNG_FAMILY)?;
        for (k, v) in &self.meta {
            writeln!(m, "{k}={v}")?;
        }
        for (k, v) in cfg.to_key_values() {
            writeln!(m, "config.{k}={v}")?;
        }
        Ok(path)
    }
}
