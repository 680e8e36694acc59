//! Artifact writing: all-or-nothing, no clobbering unless forced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files destined for one output directory.
pub struct Outputs {
    dir: PathBuf,
    force: bool,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path, force: bool) -> Self {
        Self { dir: dir.to_path_buf(), force, files: Vec::new() }
    }

    /// Queue a file and return its hash.
    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) -> String {
        let contents = contents.into();
        let hash = sha256_hex(&contents);
        self.files.push((name.to_string(), contents));
        hash
    }

    /// Check every target before touching any, then write each through a
    /// temporary file and rename.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.dir.display())))?;
        if !self.force {
            if let Some((name, _)) = self.files.iter().find(|(n, _)| self.dir.join(n).exists()) {
                return Err(CliError::Validation(format!(
                    "{} exists; pass --force to overwrite",
                    self.dir.join(name).display()
                )));
            }
        }
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let target = self.dir.join(name);
            write_atomic(&target, contents)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", target.display())))?;
            written.push(target);
        }
        Ok(written)
    }
}

fn write_atomic(target: &Path, contents: &[u8]) -> std::io::Result<()> {
    let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = target.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, target)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
