use std::fs;
use std::path::{Path, PathBuf};

use crate::failure::{CliResult, Failure};

/// Directory receiving a run's files. Each file is rendered in memory and
/// moved into place with a rename, so readers never see a partial file.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| {
            Failure::input(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        let tmp = self
            .root
            .join(format!(".{name}.tmp-{}", std::process::id()));
        let io_failure =
            |e: std::io::Error| Failure::runtime(format!("cannot write {}: {e}", path.display()));
        fs::write(&tmp, bytes).map_err(io_failure)?;
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io_failure(e)
        })?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Renders with a writer-taking function from the core crate.
    pub fn write_with<F>(&mut self, name: &str, render: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> magt_core::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
