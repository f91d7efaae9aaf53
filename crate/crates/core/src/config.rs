//! Process-wide settings shared by the command-line front end and sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DEFAULT_BUDGET_TERMS;
use crate::phase::required_bits;

pub const ENV_THREADS: &str = "MOBLAB_THREADS";
pub const ENV_PREC_BITS: &str = "MOBLAB_PREC_BITS";

/// Default slack in the exponent `1 - 1/k + eps`.
pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    /// Fixed precision for irrational phases; `None` derives it from `k` and `x`.
    pub prec_bits: Option<u32>,
    pub budget_terms: u64,
    /// Arc exponent; `None` means `8 (k + 1)`.
    pub c1: Option<f64>,
    pub eps: f64,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            prec_bits: None,
            budget_terms: DEFAULT_BUDGET_TERMS,
            c1: None,
            eps: DEFAULT_EPS,
            threads: None,
        }
    }
}

impl GlobalConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: GlobalConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `MOBLAB_THREADS` and `MOBLAB_PREC_BITS` if set.
    pub fn with_env(mut self) -> Result<Self> {
        self.apply_env(|k| std::env::var(k).ok())?;
        Ok(self)
    }

    fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get(ENV_THREADS) {
            let n = v
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("{ENV_THREADS}={v} is not a count")))?;
            self.threads = Some(n);
        }
        if let Some(v) = get(ENV_PREC_BITS) {
            let n = v
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("{ENV_PREC_BITS}={v} is not a bit count")))?;
            self.prec_bits = Some(n);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.prec_bits {
            if b < 64 {
                return Err(Error::Argument(format!("prec_bits = {b} must be at least 64")));
            }
        }
        if self.budget_terms < 1 {
            return Err(Error::Argument("budget_terms must be at least 1".into()));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::Argument(format!("eps = {} must be nonnegative", self.eps)));
        }
        if let Some(c1) = self.c1 {
            if !(c1.is_finite() && c1 >= 0.0) {
                return Err(Error::Argument(format!("c1 = {c1} must be nonnegative")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Argument("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Precision for phases at `n <= n_max`: the configured value, or the
    /// contract minimum widened so convergents up to `q_max` stay certified.
    pub fn prec_for(&self, k: u32, n_max: u64, q_max: f64) -> u32 {
        self.prec_bits.unwrap_or_else(|| default_prec_bits(k, n_max, q_max))
    }
}

/// `max(k log2 n_max + 64, 2 log2 q_max + 64)`.
pub fn default_prec_bits(k: u32, n_max: u64, q_max: f64) -> u32 {
    let q_bits = (2.0 * q_max.max(2.0).log2()).ceil() as u32 + 64;
    required_bits(k, n_max).max(q_bits)
}
