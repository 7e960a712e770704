use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// A file read as a run input, with its digest taken from the same bytes
/// that were parsed.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn read_input(path: &Path) -> Result<(Vec<u8>, InputDigest), CliError> {
    let bytes = fs::read(path).map_err(|source| minkdetect::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let digest = InputDigest {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    Ok((bytes, digest))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        seed: u64,
        started: DateTime<Utc>,
        config: serde_json::Value,
    ) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            seed,
            threads: rayon::current_num_threads(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: String::new(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

/// An output directory assembled in a sibling temporary directory and moved
/// into place by [`Staged::commit`]. Dropping it uncommitted leaves the
/// target untouched.
pub struct Staged {
    target: PathBuf,
    dir: TempDir,
}

impl Staged {
    /// Fails if `target` exists and is anything other than an empty directory
    /// or a previous run's output.
    pub fn new(target: &Path) -> Result<Self, CliError> {
        if target.exists() {
            let reusable = target.is_dir()
                && (target.join(MANIFEST_NAME).is_file()
                    || fs::read_dir(target)
                        .map(|mut d| d.next().is_none())
                        .unwrap_or(false));
            if !reusable {
                return Err(CliError::usage(format!(
                    "{} exists and is not a previous output directory",
                    target.display()
                )));
            }
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| CliError::write(&parent, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".minkdetect-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::write(&parent, e))?;
        Ok(Staged {
            target: target.to_path_buf(),
            dir,
        })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.path().join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::write(&path, e))
    }

    /// Writes the manifest, listing every staged file, then swaps the staged
    /// directory into place.
    pub fn commit(self, mut manifest: RunManifest) -> Result<PathBuf, CliError> {
        let staged = self.dir.path();
        let mut outputs = Vec::new();
        for entry in fs::read_dir(staged).map_err(|e| CliError::write(staged, e))? {
            let entry = entry.map_err(|e| CliError::write(staged, e))?;
            outputs.push(entry.file_name().to_string_lossy().into_owned());
        }
        outputs.sort();
        manifest.outputs = outputs;
        manifest.finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let path = staged.join(MANIFEST_NAME);
        let file = File::create(&path).map_err(|e| CliError::write(&path, e))?;
        minkdetect::report::write_json(BufWriter::new(file), &manifest)
            .map_err(|e| CliError::write(&path, e))?;

        let parent = staged.parent().unwrap_or(Path::new("."));
        let mut previous = None;
        if self.target.exists() {
            let old = tempfile::Builder::new()
                .prefix(".minkdetect-old-")
                .tempdir_in(parent)
                .map_err(|e| CliError::write(parent, e))?;
            let slot = old.path().join("previous");
            fs::rename(&self.target, &slot).map_err(|e| CliError::write(&self.target, e))?;
            previous = Some((old, slot));
        }
        if let Err(e) = fs::rename(staged, &self.target) {
            if let Some((_, slot)) = &previous {
                let _ = fs::rename(slot, &self.target);
            }
            return Err(CliError::write(&self.target, e));
        }
        let _ = self.dir.keep();
        drop(previous);
        Ok(self.target)
    }
}
