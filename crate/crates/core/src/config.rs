//! Resource limits and the run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONFIG_ENV: &str = "STABLE_THETA_CONFIG";

/// Limits passed to every enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of enumeration nodes before failing with [`Error::Budget`].
    pub node_budget: u64,
    pub threads: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            node_budget: 50_000_000_000,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub default_bound: u32,
    pub node_budget: u64,
    pub catalog_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = Limits::default();
        Self {
            default_bound: 3,
            node_budget: limits.node_budget,
            catalog_path: None,
            format: OutputFormat::Json,
            threads: limits.threads,
        }
    }
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?
        };
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn validate(&self, origin: &str) -> Result<()> {
        if self.default_bound == 0 {
            return Err(Error::format(origin, "default_bound must be positive"));
        }
        if self.node_budget == 0 {
            return Err(Error::format(origin, "node_budget must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::format(origin, "threads must be positive"));
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            node_budget: self.node_budget,
            threads: self.threads,
        }
    }
}
