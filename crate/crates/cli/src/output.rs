use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Output directory of a single run; tracks every artifact for the manifest.
pub struct RunDir {
    root: PathBuf,
    command: String,
    seed: u64,
    config_hash: String,
    artifacts: Vec<String>,
    started: Instant,
}

#[derive(Serialize)]
struct Versions {
    chalpha: &'static str,
    cli: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    versions: Versions,
    wall_time_seconds: f64,
    pass: bool,
    artifacts: Vec<ArtifactDigest>,
}

#[derive(Serialize)]
struct ArtifactDigest {
    path: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunDir {
    /// Creates the directory and writes the resolved `config.json`.
    pub fn create(root: &Path, command: &str, seed: u64, config: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        let mut text = serde_json::to_string_pretty(config)?;
        text.push('\n');
        fs::write(root.join("config.json"), &text)?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_string(),
            seed,
            config_hash: sha256_hex(text.as_bytes()),
            artifacts: vec!["config.json".into()],
            started: Instant::now(),
        })
    }

    fn register(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.artifacts.push(name.to_string());
        Ok(p)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let p = self.register(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    /// Writes an artifact through a buffered writer.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let p = self.register(name)?;
        let mut w = BufWriter::new(File::create(p)?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` with digests of every artifact.
    pub fn finish(self, pass: bool) -> Result<(), CliError> {
        let mut artifacts = Vec::with_capacity(self.artifacts.len());
        for name in &self.artifacts {
            let bytes = fs::read(self.root.join(name))?;
            artifacts.push(ArtifactDigest {
                path: name.clone(),
                sha256: sha256_hex(&bytes),
            });
        }
        let manifest = Manifest {
            command: &self.command,
            config_hash: &self.config_hash,
            seed: self.seed,
            versions: Versions {
                chalpha: chalpha::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            pass,
            artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}
