//! report.json, trace.csv and fields/*.json in one output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kdvkam::Field;
use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};

pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("fields")).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `fields/<name>.json` and returns its path relative to the
    /// output directory.
    pub fn write_field(&self, name: &str, f: &Field) -> Result<String> {
        let rel = format!("fields/{name}.json");
        self.write_json(&rel, &f.to_json())?;
        Ok(rel)
    }

    pub fn write_trace<S: Serialize>(&self, rows: &[S]) -> Result<()> {
        let path = self.dir.join("trace.csv");
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_report<B: Serialize>(&self, command: &str, cfg: &ExperimentConfig, body: &B) -> Result<()> {
        self.write_json("report.json", &Report { schema_version: SCHEMA_VERSION, command, seed: cfg.seed, config: cfg, body })
    }
}

#[derive(Serialize)]
struct Report<'a, B: Serialize> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: &'a B,
}
