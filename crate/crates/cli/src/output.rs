//! One file per table, plus a manifest listing them.

use std::path::PathBuf;

use serde::Serialize;

use crate::args::Format;
use crate::error::{CliError, CliResult};

pub struct Emitter {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Emitter {
    pub fn new(dir: PathBuf, format: Format) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Emitter {
            dir,
            format,
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write(&mut self, name: String, mut bytes: Vec<u8>) -> CliResult<()> {
        if bytes.last() != Some(&b'\n') {
            bytes.push(b'\n');
        }
        let path = self.dir.join(&name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))?;
        if !self.files.contains(&name) {
            self.files.push(name);
        }
        Ok(())
    }

    /// Writes `stem.json` regardless of the format flag.
    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> CliResult<()> {
        let bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(format!("{stem}.json"), bytes)
    }

    /// Writes `stem.csv` regardless of the format flag.
    pub fn csv(
        &mut self,
        stem: &str,
        write: impl FnOnce(&mut Vec<u8>) -> critscan::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.write(format!("{stem}.csv"), buf)
    }

    /// Writes the table as CSV and/or JSON according to `--format`.
    pub fn table<T: Serialize>(
        &mut self,
        stem: &str,
        value: &T,
        write: impl FnOnce(&mut Vec<u8>) -> critscan::Result<()>,
    ) -> CliResult<()> {
        if self.format.csv() {
            self.csv(stem, write)?;
        }
        if self.format.json() {
            self.json(stem, value)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a, P: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    params: &'a P,
    files: Vec<String>,
}

/// Writes `manifest.json`. Contains no timestamps or paths of the output
/// directory, so identical runs produce identical manifests.
pub fn write_manifest<P: Serialize>(
    out: &mut Emitter,
    command: &'static str,
    seed: Option<u64>,
    params: &P,
) -> CliResult<()> {
    let mut files = out.files().to_vec();
    files.sort();
    let manifest = Manifest {
        tool: "critscan",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        params,
        files,
    };
    out.json("manifest", &manifest)
}
