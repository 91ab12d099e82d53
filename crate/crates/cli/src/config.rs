//! Effective experiment configuration: defaults, overridden by a plain
//! `key = value` config file, overridden by command-line flags. The
//! canonical rendering of the effective configuration is hashed so outputs
//! can be traced back to the exact stochastic experiment that produced them.

use std::collections::BTreeMap;
use std::path::Path;

use affine2f::sampler::Scheme;
use affine2f::{Error, ModelParams, Result};
use sha2::{Digest, Sha256};

/// Every key a config file may set (model parameters, run controls, task
/// inputs, output controls). Anything else is rejected.
const KNOWN_KEYS: &[&str] = &[
    "a",
    "b",
    "m",
    "theta",
    "alpha",
    "seed",
    "n_paths",
    "t_end",
    "n_steps",
    "scheme",
    "tol",
    "threads",
    "format",
    "output",
    "lambda1",
    "lambda2",
    "t",
    "y0",
    "x0",
    "stationary_init",
    "max_order",
    "y_min",
    "y_max",
    "x_max",
    "points",
    "series_tol",
    "f_n",
    "f_p",
    "g_n",
    "g_p",
    "dt",
    "replicas",
    "c1",
    "c",
    "grid_n",
];

/// Key-value store merged from the config file and flag overrides.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// ignored, unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut settings = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!(
                    "config line {} is not `key = value`: {raw:?}",
                    lineno + 1
                ))
            })?;
            settings.set_checked(key.trim(), value.trim())?;
        }
        Ok(settings)
    }

    fn set_checked(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::invalid(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Flag overrides win over file values.
    pub fn override_with(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            debug_assert!(KNOWN_KEYS.contains(&key), "flag key '{key}' must be known");
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("{key} must be a number, got {s:?}"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| {
                Error::invalid(format!("{key} must be a nonnegative integer, got {s:?}"))
            }),
        }
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32> {
        Ok(self.usize(key, default as usize)? as u32)
    }

    /// Model parameters with the documented defaults
    /// `a = 1, b = 1, m = 0, theta = 1, alpha = 2`.
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.f64("a", 1.0)?,
            self.f64("b", 1.0)?,
            self.f64("m", 0.0)?,
            self.f64("theta", 1.0)?,
            self.f64("alpha", 2.0)?,
        )
    }

    /// The mandatory seed of stochastic tasks.
    pub fn seed(&self) -> Result<u64> {
        match self.get("seed") {
            None => Err(Error::invalid("stochastic tasks require --seed")),
            Some(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("seed must be a u64, got {s:?}"))),
        }
    }

    /// Scheme: explicit, or exact for `alpha = 2` and Euler otherwise.
    pub fn scheme(&self, params: &ModelParams) -> Result<Scheme> {
        match self.get("scheme") {
            None => Ok(if params.is_diffusion() {
                Scheme::Exact
            } else {
                Scheme::Euler
            }),
            Some(s) => s.parse(),
        }
    }

    pub fn threads(&self) -> Result<Option<usize>> {
        if let Some(s) = self.get("threads") {
            return Ok(Some(
                s.parse()
                    .map_err(|_| Error::invalid("threads must be an integer"))?,
            ));
        }
        if let Ok(env) = std::env::var("AFFINE2F_THREADS") {
            return Ok(Some(env.parse().map_err(|_| {
                Error::invalid("AFFINE2F_THREADS must be an integer")
            })?));
        }
        Ok(None)
    }

    /// Canonical `key=value` rendering (sorted) prefixed with the command
    /// name, and its SHA-256 hash truncated to 16 hex digits. Output
    /// destination, format and the thread cap are excluded: they cannot
    /// change stochastic results.
    pub fn config_hash(&self, command: &str) -> String {
        let mut canonical = format!("command={command}\n");
        for (k, v) in &self.values {
            if k == "output" || k == "format" || k == "threads" {
                continue;
            }
            canonical.push_str(&format!("{k}={v}\n"));
        }
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
