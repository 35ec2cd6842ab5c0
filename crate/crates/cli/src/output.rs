use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Writes artifacts into an optional output directory.
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Output { dir }
    }

    fn dir(&self) -> PathBuf {
        self.dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Writes `header` followed by `body` to `<dir>/<name>`.
    pub fn write(&self, name: &str, header: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir().join(name);
        write_atomic(&path, &format!("{header}{body}"))?;
        Ok(path)
    }

    /// Like [`Output::write`], but only when `--out` was given.
    pub fn write_if_requested(&self, name: &str, header: &str, body: &str) -> anyhow::Result<()> {
        if self.dir.is_some() {
            let path = self.write(name, header, body)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
