//! Layout of a training run directory and its manifest sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use srl_core::config::{RunConfig, KEYS};

use crate::error::CliError;

pub const EPISODES: &str = "episodes.csv";
pub const CONFIG: &str = "config.txt";
pub const MANIFEST: &str = "manifest.txt";

/// Git-style content hash: SHA-256 over `blob <len>\0<content>`.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub timestamp: String,
}

impl RunManifest {
    /// Metadata lines followed by the full resolved config.
    pub fn render(&self, cfg: &RunConfig) -> String {
        let config = cfg.to_text();
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(
            s,
            "config_path = {}",
            self.config_path.as_ref().map_or("<defaults>".to_string(), |p| p.display().to_string())
        );
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "run_seed = {}", self.seed);
        let _ = writeln!(s, "timestamp = {}", self.timestamp);
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "config_hash = {}", content_hash(&config));
        s.push_str("# resolved configuration\n");
        s.push_str(&config);
        s
    }
}

/// Run configuration stored in a run directory: `config.txt`, else the config
/// keys of the manifest.
pub fn read_config(dir: &Path) -> Result<RunConfig, CliError> {
    let cfg_path = dir.join(CONFIG);
    let text = match std::fs::read_to_string(&cfg_path) {
        Ok(t) => t,
        Err(_) => {
            let path = dir.join(MANIFEST);
            let manifest = std::fs::read_to_string(&path).map_err(|source| CliError::Read { path, source })?;
            manifest
                .lines()
                .filter(|l| {
                    l.split_once('=')
                        .is_some_and(|(k, _)| KEYS.contains(&k.trim()))
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
    };
    RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))
}
