use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance block embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// SHA-256 over the command, its arguments and the bytes of every input file.
    pub config_hash: String,
    pub tool_version: String,
    pub corrections: Corrections,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Corrections {
    /// Effective area uses √(R/γ) rather than R/γ.
    pub sqrt_r_over_gamma_correction: bool,
    /// Maximum pipe count is the floor of 2π/β.
    pub nmax_floor_inversion: bool,
}

impl Corrections {
    pub const APPLIED: Corrections = Corrections {
        sqrt_r_over_gamma_correction: true,
        nmax_floor_inversion: true,
    };
}

pub struct ManifestBuilder {
    command: String,
    inputs: Vec<String>,
    hasher: Sha256,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            hasher,
        }
    }

    /// Record an input file and its contents.
    pub fn input(&mut self, path: &str, bytes: &[u8]) {
        self.inputs.push(path.to_string());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    /// Record a named argument value.
    pub fn arg(&mut self, name: &str, value: &str) {
        self.hasher.update([0u8]);
        self.hasher.update(name.as_bytes());
        self.hasher.update(b"=");
        self.hasher.update(value.as_bytes());
    }

    pub fn finish(self, timestamp: bool) -> RunManifest {
        let timestamp_unix = timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        RunManifest {
            command: self.command,
            inputs: self.inputs,
            config_hash: format!("{:x}", self.hasher.finalize()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            corrections: Corrections::APPLIED,
            timestamp_unix,
        }
    }
}
