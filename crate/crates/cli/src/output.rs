//! Output directories with a digest manifest and an incomplete-run marker.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const INCOMPLETE: &str = "INCOMPLETE";

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Deliberately free of timestamps and host details.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_space: Option<String>,
    pub workload: Option<String>,
    pub weights: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: String,
    pub tool_version: &'static str,
    pub parameters: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(command: &'static str, out: &Path) -> Self {
        Self {
            command,
            config_space: None,
            workload: None,
            weights: None,
            seed: None,
            output_dir: out.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            parameters: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }
}

pub fn path_str(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

pub struct OutDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl OutDir {
    pub fn create(manifest: RunManifest) -> Result<Self> {
        let root = PathBuf::from(&manifest.output_dir);
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        // A stale manifest would vouch for files this run may not rewrite.
        let _ = fs::remove_file(root.join(MANIFEST));
        fs::write(root.join(INCOMPLETE), "run in progress\n")?;
        Ok(Self { root, manifest })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(OutputFile {
            file: name.to_owned(),
            bytes: bytes.len(),
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn fail(&self, err: &anyhow::Error) {
        let _ = fs::write(self.root.join(INCOMPLETE), format!("{err:#}\n"));
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        fs::remove_file(self.root.join(INCOMPLETE))?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
