use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

const LOCK_NAME: &str = ".feitsim.lock";

/// An output directory held exclusively for one run. The lock file is
/// created with `create_new`, so a second run on the same directory fails
/// instead of interleaving writes.
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    pub fn acquire(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let lock = root.join(LOCK_NAME);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    CliError::io(
                        &lock,
                        std::io::Error::new(e.kind(), "output directory is in use by another run"),
                    )
                } else {
                    CliError::io(&lock, e)
                }
            })?;
        writeln!(file, "{}", std::process::id()).map_err(|e| CliError::io(&lock, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            lock,
        })
    }

    /// Writes through a temporary name and renames, so readers never see a
    /// half-written file.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.root.join(name);
        let staging = self.root.join(format!(".{name}.partial"));
        let mut file = File::create(&staging).map_err(|e| CliError::io(&staging, e))?;
        file.write_all(bytes)
            .and_then(|_| file.sync_all())
            .map_err(|e| CliError::io(&staging, e))?;
        fs::rename(&staging, &target).map_err(|e| CliError::io(&target, e))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
