//! Run manifests: the resolved configuration and content hashes of every
//! file input, written alongside each report. Re-running a command whose
//! manifest matches reproduces the report byte for byte (with --workers 1 or
//! any other worker count — metric sums are order-exact).

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{data_err, CliError};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn flag(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn flags(&mut self, map: BTreeMap<String, String>) -> &mut Self {
        self.config.extend(map);
        self
    }

    /// Hash a file input. Stdin ('-') is recorded without a hash.
    pub fn input(&mut self, path: &str) -> Result<&mut Self, CliError> {
        let digest = if path == "-" {
            "stdin".to_string()
        } else {
            let mut file = std::fs::File::open(path)
                .map_err(|e| data_err(format!("cannot open {path}: {e}")))?;
            let mut hasher = Sha256::new();
            let mut buf = [0u8; 65536];
            loop {
                let n = file
                    .read(&mut buf)
                    .map_err(|e| data_err(format!("cannot read {path}: {e}")))?;
                if n == 0 {
                    break;
                }
                hasher.update(&buf[..n]);
            }
            hex_string(&hasher.finalize())
        };
        self.input_hashes.insert(path.to_string(), digest);
        Ok(self)
    }

    /// Write `<report>.manifest.json` next to a report file, or to the given
    /// path when it already ends in .json.
    pub fn write_beside(&self, report_path: &Path) -> Result<(), CliError> {
        let mut name = report_path.as_os_str().to_owned();
        name.push(".manifest.json");
        self.write_to(Path::new(&name))
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| data_err(format!("cannot write manifest: {e}")))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
