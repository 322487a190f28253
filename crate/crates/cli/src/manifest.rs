//! Run manifests: every output file gets a sibling `<name>.manifest.json`
//! recording the subcommand, full argument vector, master seed, input
//! digests, tool version, and wall-clock. Re-running the recorded invocation
//! reproduces the output bit-exactly (the manifest itself carries timing and
//! is not part of the determinism contract).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use brackets_core::io::sha256_hex;

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    argv: &'a [String],
    master_seed: Option<u64>,
    version: &'a str,
    inputs: &'a BTreeMap<String, String>,
    output: String,
    output_sha256: String,
    wall_clock_ms: u128,
    created_unix_ms: u128,
}

pub struct RunRecorder {
    subcommand: &'static str,
    argv: Vec<String>,
    master_seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(PathBuf, String)>,
    started: Instant,
}

impl RunRecorder {
    pub fn new(subcommand: &'static str, master_seed: Option<u64>) -> Self {
        Self {
            subcommand,
            argv: std::env::args().collect(),
            master_seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs
            .insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Write an output file and remember it for manifest emission.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push((path.to_path_buf(), sha256_hex(bytes)));
        Ok(())
    }

    /// Emit one manifest beside each output file.
    pub fn finish(self) -> Result<()> {
        let wall_clock_ms = self.started.elapsed().as_millis();
        let created_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        for (path, digest) in &self.outputs {
            let manifest = Manifest {
                subcommand: self.subcommand,
                argv: &self.argv,
                master_seed: self.master_seed,
                version: env!("CARGO_PKG_VERSION"),
                inputs: &self.inputs,
                output: path.display().to_string(),
                output_sha256: digest.clone(),
                wall_clock_ms,
                created_unix_ms,
            };
            let manifest_path = manifest_path_for(path);
            let text = serde_json::to_string_pretty(&manifest)?;
            std::fs::write(&manifest_path, text)
                .with_context(|| format!("writing {}", manifest_path.display()))?;
        }
        Ok(())
    }
}

pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    name.push_str(".manifest.json");
    output.with_file_name(name)
}
