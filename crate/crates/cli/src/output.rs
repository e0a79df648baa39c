use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// 17 significant digits, '.' decimal, `inf`/`-inf`/`nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    master_seed: Option<u64>,
    config: &'a BTreeMap<String, String>,
    files: &'a [String],
}

/// A run directory whose files are each written exactly once.
pub struct RunDir {
    path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir {
            path: path.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let target = self.path.join(name);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&target)
            .with_context(|| format!("creating {} (outputs are never overwritten)", target.display()))?;
        file.write_all(contents.as_bytes())
            .with_context(|| format!("writing {}", target.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).context("serializing report")? + "\n";
        self.write(name, &text)
    }

    pub fn finish(mut self, command: &str, master_seed: Option<u64>, config: &BTreeMap<String, String>) -> Result<()> {
        let files = self.files.clone();
        let manifest = Manifest {
            command,
            version: lpseries::VERSION,
            master_seed,
            config,
            files: &files,
        };
        self.write_json("manifest.json", &manifest)
    }
}
