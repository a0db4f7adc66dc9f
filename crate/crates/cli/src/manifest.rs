use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use contestlab::equilibrium::SolverOptions;
use contestlab::model::ScenarioConfig;
use contestlab::simulate::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::Cli;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command. The embedded scenario and pipeline
/// configuration take precedence over the recorded paths on replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_path: Option<PathBuf>,
    pub invocation: Cli,
    pub scenario: Option<ScenarioConfig>,
    pub solver: Option<SolverOptions>,
    pub pipeline: Option<PipelineConfig>,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Output directory writer. Without a directory nothing is written.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn file(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        write(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.file(name, |w| Ok(contestlab::export::write_json(w, value)?))
    }

    pub fn finish(self, mut manifest: RunManifest, elapsed: Duration) -> Result<()> {
        let Some(dir) = self.dir else {
            return Ok(());
        };
        manifest.outputs = self.files;
        manifest.duration_secs = elapsed.as_secs_f64();
        let path = dir.join(MANIFEST_FILE);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        contestlab::export::write_json(BufWriter::new(file), &manifest)?;
        Ok(())
    }
}
