//! Analysis settings from a TOML file, merged under command-line flags.

use std::path::Path;
use std::time::Duration;

use formloc::driver::{Bounds, RunMode};
use formloc::encoder::ConcretizePolicy;
use formloc::{Inputs, Width};
use serde::Deserialize;

/// Environment variable naming a config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "FORMLOC_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub mode: Option<RunMode>,
    pub width: Option<Width>,
    pub unroll: Option<u32>,
    pub max_comss: Option<usize>,
    pub max_iters: Option<usize>,
    pub ba_cap: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub concretize: Option<ConcretizePolicy>,
    pub witness_expansion: Option<bool>,
}

/// Parses `--input` values of the form `x=1,y=-2`.
pub fn parse_inputs(s: &str) -> Result<Inputs, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{p}`"))?;
            let v = v.trim().parse::<i64>().map_err(|e| format!("`{p}`: {e}"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: String, source: toml::de::Error },
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        Config::parse(&text).map_err(|source| ConfigError::Toml { path: shown, source })
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: Config) -> Config {
        Config {
            mode: over.mode.or(self.mode),
            width: over.width.or(self.width),
            unroll: over.unroll.or(self.unroll),
            max_comss: over.max_comss.or(self.max_comss),
            max_iters: over.max_iters.or(self.max_iters),
            ba_cap: over.ba_cap.or(self.ba_cap),
            timeout_ms: over.timeout_ms.or(self.timeout_ms),
            concretize: over.concretize.or(self.concretize),
            witness_expansion: over.witness_expansion.or(self.witness_expansion),
        }
    }

    pub fn bounds(&self) -> Bounds {
        let d = Bounds::default();
        Bounds {
            width: self.width.unwrap_or(d.width),
            unroll: self.unroll.unwrap_or(d.unroll),
            max_comss: self.max_comss.unwrap_or(d.max_comss),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            ba_cap: self.ba_cap.unwrap_or(d.ba_cap),
            timeout: self.timeout_ms.map(Duration::from_millis).or(d.timeout),
            concretize: self.concretize.or(d.concretize),
            expand_witness: self.witness_expansion.unwrap_or(d.expand_witness),
        }
    }

    pub fn mode(&self) -> RunMode {
        self.mode.unwrap_or(RunMode { strategy: formloc::driver::Strategy::Ofc, weighted: false })
    }
}
