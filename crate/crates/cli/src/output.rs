//! Buffered command outputs, written only once everything has succeeded.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hmatch_core::matching::write_atomic;

use crate::manifest::MANIFEST_COPY;

#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    /// Renders one file into memory.
    pub fn add(&mut self, name: impl Into<String>, render: impl FnOnce(&mut Vec<u8>) -> hmatch_core::Result<()>) -> Result<()> {
        let name = name.into();
        let mut buf = Vec::new();
        render(&mut buf).with_context(|| format!("rendering {name}"))?;
        self.files.push((name, buf));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Creates `dir` and writes every file, each via temp-then-rename.
    pub fn commit(self, dir: &Path, manifest_text: Option<&str>) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        if let Some(text) = manifest_text {
            copy_manifest(dir, text)?;
        }
        for (name, bytes) in self.files {
            write_atomic(&dir.join(&name), |w| Ok(w.write_all(&bytes)?))
                .with_context(|| format!("writing {}", dir.join(&name).display()))?;
        }
        Ok(())
    }
}

pub fn copy_manifest(dir: &Path, text: &str) -> Result<()> {
    let p = dir.join(MANIFEST_COPY);
    write_atomic(&p, |w| Ok(w.write_all(text.as_bytes())?)).with_context(|| format!("writing {}", p.display()))
}
