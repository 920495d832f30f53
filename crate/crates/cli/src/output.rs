//! Output directories are staged next to their final location and renamed
//! into place once the manifest is written.

use std::fs;
use std::path::{Path, PathBuf};

use cokdv_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub status: String,
    pub exit_code: i32,
}

pub const MANIFEST: &str = "manifest.json";

pub struct OutputDir {
    staging: PathBuf,
    target: PathBuf,
}

impl OutputDir {
    pub fn create(target: &Path) -> Result<OutputDir> {
        if target.exists() && fs::read_dir(target)?.next().is_some() {
            return Err(Error::Config(format!("output directory {} is not empty", target.display())));
        }
        let name = target
            .file_name()
            .ok_or_else(|| Error::Config(format!("bad output path {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(OutputDir { staging, target: target.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.staging.join(name), contents)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(self, manifest: &RunManifest) -> Result<PathBuf> {
        self.write_json(MANIFEST, manifest)?;
        if self.target.exists() {
            fs::remove_dir(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        Ok(self.target)
    }
}
