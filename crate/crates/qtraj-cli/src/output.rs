use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Provenance written as the first line of every CSV file.
#[derive(Clone, Debug)]
pub struct Meta {
    pub sha256: String,
    pub seed: u64,
    pub trajectories: usize,
}

pub struct CsvFile {
    w: BufWriter<File>,
    path: PathBuf,
    width: usize,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, meta: &Meta, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        let mut out = Self { w: BufWriter::new(file), path, width: header.len() };
        let comment =
            format!("# scenario_sha256={} seed={} trajectories={}\n", meta.sha256, meta.seed, meta.trajectories);
        out.write(&comment)?;
        out.write(&header.join(","))?;
        out.write("\n")?;
        Ok(out)
    }

    fn write(&mut self, s: &str) -> Result<()> {
        self.w.write_all(s.as_bytes()).map_err(CliError::io(&self.path))
    }

    /// Floats use `Display`, the shortest string that round-trips.
    pub fn row(&mut self, fields: &[&dyn Display]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.width, "{}", self.path.display());
        let mut line = String::new();
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&f.to_string());
        }
        line.push('\n');
        self.write(&line)
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(CliError::io(&self.path))
    }
}
